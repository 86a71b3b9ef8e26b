#pragma once

// Young functions generated by odd increasing homeomorphisms phi.
//
// Phi(t) = int_0^t phi, Phi*(t) = int_0^t phi^{-1}, and the growth indices
// (phi)_0 = inf t phi(t) / Phi(t), (phi)^0 = sup t phi(t) / Phi(t).

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <mutex>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "nhe/error.hpp"
#include "nhe/quadrature.hpp"

namespace nhe {

enum class YoungFamily { power, log_power, power_over_log, tabulated };

inline std::string to_string(YoungFamily f) {
  switch (f) {
    case YoungFamily::power: return "power";
    case YoungFamily::log_power: return "log_power";
    case YoungFamily::power_over_log: return "power_over_log";
    case YoungFamily::tabulated: return "tabulated";
  }
  return "unknown";
}

struct GrowthIndices {
  double lower = 0.0;  ///< (phi)_0
  double upper = 0.0;  ///< (phi)^0
};

struct SqrtConvexity {
  bool convex = true;
  /// First grid triple (t0, t1, t2) on which t -> Phi(sqrt t) bends down.
  std::optional<std::array<double, 3>> violation;
};

// Sampling window used wherever an inf/sup over t > 0 is approximated.
inline constexpr double kSampleGridMin = 1e-6;
inline constexpr double kSampleGridMax = 1e6;
inline constexpr int kIndexGridPoints = 4096;
inline constexpr int kConvexityGridPoints = 512;
inline constexpr std::size_t kMinTabulatedIndexSamples = 3;

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> out(static_cast<std::size_t>(n));
  const double llo = std::log(lo);
  const double step = (std::log(hi) - llo) / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(llo + step * i);
  out.front() = lo;
  out.back() = hi;
  return out;
}

namespace detail {

/// Piecewise Chebyshev interpolant of a smooth function of log t on
/// [kLogMin, kLogMax], evaluated with the barycentric formula on each panel.
class LogChebyshevTable {
 public:
  static constexpr double kLogMin = -18.420680743952367;  // log 1e-8
  static constexpr double kLogMax = 18.420680743952367;
  static constexpr double kPanelWidth = 0.5;
  static constexpr int kDegree = 16;

  template <class F>
  explicit LogChebyshevTable(F&& f) {
    panels_ = static_cast<int>(std::ceil((kLogMax - kLogMin) / kPanelWidth));
    values_.resize(static_cast<std::size_t>(panels_) * (kDegree + 1));
    for (int k = 0; k < panels_; ++k) {
      for (int j = 0; j <= kDegree; ++j) {
        values_[index(k, j)] = f(std::exp(panel_start(k) + 0.5 * kPanelWidth * (1.0 - node(j))));
      }
    }
  }

  static bool covers(double t) {
    const double u = std::log(t);
    return u >= kLogMin && u <= kLogMax;
  }

  double operator()(double t) const {
    const double u = std::log(t);
    const int k = std::clamp(static_cast<int>((u - kLogMin) / kPanelWidth), 0, panels_ - 1);
    const double x = 1.0 - 2.0 * (u - panel_start(k)) / kPanelWidth;
    double num = 0.0;
    double den = 0.0;
    for (int j = 0; j <= kDegree; ++j) {
      const double diff = x - node(j);
      if (diff == 0.0) return values_[index(k, j)];
      double w = (j % 2 == 0 ? 1.0 : -1.0) / diff;
      if (j == 0 || j == kDegree) w *= 0.5;
      num += w * values_[index(k, j)];
      den += w;
    }
    return num / den;
  }

 private:
  static double node(int j) { return std::cos(std::numbers::pi * j / kDegree); }
  static double panel_start(int k) { return kLogMin + k * kPanelWidth; }
  static std::size_t index(int k, int j) { return static_cast<std::size_t>(k) * (kDegree + 1) + static_cast<std::size_t>(j); }

  int panels_ = 0;
  std::vector<double> values_;
};

struct LazyTable {
  std::once_flag once;
  std::optional<LogChebyshevTable> table;
};

}  // namespace detail

class YoungFunction {
 public:
  /// phi(t) = p |t|^{p-2} t, p > 1.
  static YoungFunction power(double p) {
    if (!(p > 1.0) || !std::isfinite(p)) throw ValidationError("power family requires p > 1");
    YoungFunction f(YoungFamily::power, p, 0.0);
    f.check_shape();
    return f;
  }

  /// phi(t) = log(1 + |t|^s) |t|^{p-2} t, p > 1, s >= 1.
  static YoungFunction log_power(double p, double s) {
    if (!(p > 1.0) || !std::isfinite(p)) throw ValidationError("log_power family requires p > 1");
    if (!(s >= 1.0) || !std::isfinite(s)) throw ValidationError("log_power family requires s >= 1");
    YoungFunction f(YoungFamily::log_power, p, s);
    f.check_shape();
    return f;
  }

  /// phi(t) = |t|^{p-2} t / log(1 + |t|), phi(0) = 0, p > 2.
  static YoungFunction power_over_log(double p) {
    if (!(p > 2.0) || !std::isfinite(p)) throw ValidationError("power_over_log family requires p > 2");
    YoungFunction f(YoungFamily::power_over_log, p, 0.0);
    f.check_shape();
    return f;
  }

  /// phi sampled at positive, strictly increasing points with strictly
  /// increasing positive values. Between samples phi is a power law (linear in
  /// log-log coordinates); the end slopes extend it to (0, inf).
  static YoungFunction tabulated(std::vector<double> t, std::vector<double> values) {
    if (t.size() != values.size()) throw ValidationError("tabulated: sample arrays differ in length");
    if (t.size() < 2) throw ValidationError("tabulated: need at least 2 samples");
    for (std::size_t i = 0; i < t.size(); ++i) {
      if (!(t[i] > 0.0) || !(values[i] > 0.0) || !std::isfinite(t[i]) || !std::isfinite(values[i])) {
        throw ValidationError("tabulated: samples must be positive and finite");
      }
      if (i > 0 && (!(t[i] > t[i - 1]) || !(values[i] > values[i - 1]))) {
        throw ValidationError("tabulated: samples must be strictly increasing in t and phi");
      }
    }
    YoungFunction f(YoungFamily::tabulated, 0.0, 0.0);
    f.t_ = std::move(t);
    f.v_ = std::move(values);
    f.build_table();
    f.check_shape();
    return f;
  }

  YoungFamily family() const { return family_; }
  double exponent() const { return p_; }
  double log_exponent() const { return s_; }
  const std::vector<double>& sample_points() const { return t_; }
  const std::vector<double>& sample_values() const { return v_; }

  std::string describe() const {
    std::ostringstream os;
    os.precision(17);
    os << to_string(family_);
    switch (family_) {
      case YoungFamily::power:
      case YoungFamily::power_over_log: os << "(p=" << p_ << ")"; break;
      case YoungFamily::log_power: os << "(p=" << p_ << ", s=" << s_ << ")"; break;
      case YoungFamily::tabulated: os << "(" << t_.size() << " samples)"; break;
    }
    return os.str();
  }

  double phi(double t) const {
    if (t == 0.0) return 0.0;
    return t > 0.0 ? phi_positive(t) : -phi_positive(-t);
  }

  /// Phi(t) = int_0^|t| phi.
  double integral(double t) const {
    t = std::abs(t);
    if (t == 0.0) return 0.0;
    switch (family_) {
      case YoungFamily::power: return std::pow(t, p_);
      case YoungFamily::tabulated: return tabulated_integral(t);
      default: break;
    }
    const double top = phi_positive(t);
    if (top == 0.0) return 0.0;
    if (detail::LogChebyshevTable::covers(t)) return t * top * integral_ratio_table()(t);
    return t * top * integral_ratio(t);
  }

  double inverse(double s) const {
    if (s == 0.0) return 0.0;
    return s > 0.0 ? inverse_positive(s) : -inverse_positive(-s);
  }

  /// Phi*(t) = int_0^|t| phi^{-1}.
  double complementary(double t) const {
    t = std::abs(t);
    if (t == 0.0) return 0.0;
    switch (family_) {
      case YoungFamily::power: return (p_ - 1.0) * std::pow(t / p_, p_ / (p_ - 1.0));
      case YoungFamily::tabulated: return tabulated_complementary(t);
      default: break;
    }
    // int_0^t phi^{-1}(s) ds with s = phi(x) becomes int_0^T x phi'(x) dx,
    // T = phi^{-1}(t), which needs a single inversion.
    const double top = inverse_positive(t);
    const double scale = top * derivative(top);
    const auto q = quadrature::graded_unit_integral(
        [&](double y) { return top * y * derivative(top * y) / scale; });
    const double value = top * scale * q.value;
    // Young's equality at s = phi^{-1}(t) must hold for the quadrature value.
    const double legendre = t * top - integral(top);
    if (std::abs(legendre - value) > 1e-8 * std::max(1.0, std::abs(value))) {
      throw QuadratureError("complementary function failed the Young equality self-check",
                            std::abs(legendre - value));
    }
    return value;
  }

  /// a(t) = phi(t) / t for t > 0.
  double coefficient(double t) const { return phi_positive(t) / t; }

  /// phi'(t) for t > 0 (right derivative at table knots).
  double derivative(double t) const {
    switch (family_) {
      case YoungFamily::power: return p_ * (p_ - 1.0) * std::pow(t, p_ - 2.0);
      case YoungFamily::log_power: {
        const double ts = std::pow(t, s_);
        return std::pow(t, p_ - 2.0) * (s_ * ts / (1.0 + ts) + (p_ - 1.0) * std::log1p(ts));
      }
      case YoungFamily::power_over_log: {
        if (t < kSmallArgument) {
          return (p_ - 2.0) * std::pow(t, p_ - 3.0) + 0.5 * (p_ - 1.0) * std::pow(t, p_ - 2.0);
        }
        const double l = std::log1p(t);
        return (p_ - 1.0) * std::pow(t, p_ - 2.0) / l - std::pow(t, p_ - 1.0) / (l * l * (1.0 + t));
      }
      case YoungFamily::tabulated: {
        const Piece pc = piece_for_t(t);
        return phi_positive(t) * pc.slope / t;
      }
    }
    return 0.0;
  }

  /// t phi(t) / Phi(t) for t > 0.
  double growth_ratio(double t) const { return t * phi_positive(t) / integral(t); }

  /// ((phi)_0, (phi)^0). Closed forms for the parametric families; tabulated
  /// functions use the extrema of growth_ratio on a 4096-point log grid over
  /// [1e-6, 1e6].
  GrowthIndices indices() const {
    switch (family_) {
      case YoungFamily::power: return {p_, p_};
      case YoungFamily::log_power: return {p_, p_ + s_};
      case YoungFamily::power_over_log: return {p_ - 1.0, p_};
      case YoungFamily::tabulated: break;
    }
    if (t_.size() < kMinTabulatedIndexSamples) {
      throw ValidationError("tabulated indices need at least 3 samples");
    }
    GrowthIndices out{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (double t : log_grid(kSampleGridMin, kSampleGridMax, kIndexGridPoints)) {
      const double r = growth_ratio(t);
      out.lower = std::min(out.lower, r);
      out.upper = std::max(out.upper, r);
    }
    return out;
  }

 private:
  static constexpr double kSmallArgument = 1e-12;

  struct Piece {
    double t = 0.0;
    double v = 0.0;
    double slope = 0.0;
    double cumulative = 0.0;       // Phi(t)
    double cumulative_star = 0.0;  // Phi*(v)
    bool head = false;             // below the first sample
  };

  YoungFunction(YoungFamily family, double p, double s) : family_(family), p_(p), s_(s) {}

  double phi_positive(double t) const {
    switch (family_) {
      case YoungFamily::power: return p_ * std::pow(t, p_ - 1.0);
      case YoungFamily::log_power: return std::log1p(std::pow(t, s_)) * std::pow(t, p_ - 1.0);
      case YoungFamily::power_over_log:
        if (t < kSmallArgument) return std::pow(t, p_ - 2.0) * (1.0 + 0.5 * t);
        return std::pow(t, p_ - 1.0) / std::log1p(t);
      case YoungFamily::tabulated: {
        const Piece pc = piece_for_t(t);
        return pc.v * std::pow(t / pc.t, pc.slope);
      }
    }
    return 0.0;
  }

  double inverse_positive(double s) const {
    switch (family_) {
      case YoungFamily::power: return std::pow(s / p_, 1.0 / (p_ - 1.0));
      case YoungFamily::tabulated: {
        const Piece pc = piece_for_value(s);
        return pc.t * std::pow(s / pc.v, 1.0 / pc.slope);
      }
      default: break;
    }
    double lo = 1.0;
    double hi = 1.0;
    for (int i = 0; i < 4000 && phi_positive(lo) > s; ++i) lo *= 0.5;
    for (int i = 0; i < 4000 && phi_positive(hi) < s; ++i) hi *= 2.0;
    double t = std::sqrt(lo) * std::sqrt(hi);
    for (int it = 0; it < 200; ++it) {
      const double f = phi_positive(t) - s;
      if (f == 0.0) return t;
      if (f < 0.0) {
        lo = t;
      } else {
        hi = t;
      }
      double next = t - f / derivative(t);
      if (!(next > lo && next < hi)) next = std::sqrt(lo) * std::sqrt(hi);
      if (std::abs(next - t) <= 4e-16 * t || hi - lo <= 4e-16 * hi) return next;
      t = next;
    }
    return t;
  }

  void build_table() {
    const std::size_t n = t_.size();
    slopes_.resize(n - 1);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      slopes_[k] = std::log(v_[k + 1] / v_[k]) / std::log(t_[k + 1] / t_[k]);
    }
    cumulative_.resize(n);
    cumulative_star_.resize(n);
    const double a0 = slopes_.front();
    cumulative_[0] = v_[0] * t_[0] / (a0 + 1.0);
    cumulative_star_[0] = t_[0] * v_[0] / (1.0 / a0 + 1.0);
    for (std::size_t k = 0; k + 1 < n; ++k) {
      const double a = slopes_[k];
      cumulative_[k + 1] =
          cumulative_[k] + v_[k] * t_[k] / (a + 1.0) * (std::pow(t_[k + 1] / t_[k], a + 1.0) - 1.0);
      cumulative_star_[k + 1] = cumulative_star_[k] + t_[k] * v_[k] / (1.0 / a + 1.0) *
                                                          (std::pow(v_[k + 1] / v_[k], 1.0 / a + 1.0) - 1.0);
    }
  }

  Piece make_piece(std::ptrdiff_t k) const {
    const std::size_t n = t_.size();
    Piece pc;
    if (k < 0) {
      pc = {t_[0], v_[0], slopes_.front(), 0.0, 0.0, true};
      return pc;
    }
    const auto a = static_cast<std::size_t>(k);
    pc.t = t_[a];
    pc.v = v_[a];
    pc.slope = a + 1 < n ? slopes_[a] : slopes_.back();
    pc.cumulative = cumulative_[a];
    pc.cumulative_star = cumulative_star_[a];
    return pc;
  }

  Piece piece_for_t(double t) const {
    const auto it = std::upper_bound(t_.begin(), t_.end(), t);
    return make_piece(std::distance(t_.begin(), it) - 1);
  }

  Piece piece_for_value(double s) const {
    const auto it = std::upper_bound(v_.begin(), v_.end(), s);
    return make_piece(std::distance(v_.begin(), it) - 1);
  }

  double tabulated_integral(double t) const {
    const Piece pc = piece_for_t(t);
    const double e = pc.slope + 1.0;
    if (pc.head) return pc.v * pc.t / e * std::pow(t / pc.t, e);
    return pc.cumulative + pc.v * pc.t / e * (std::pow(t / pc.t, e) - 1.0);
  }

  double tabulated_complementary(double s) const {
    const Piece pc = piece_for_value(s);
    const double e = 1.0 / pc.slope + 1.0;
    if (pc.head) return pc.t * pc.v / e * std::pow(s / pc.v, e);
    return pc.cumulative_star + pc.t * pc.v / e * (std::pow(s / pc.v, e) - 1.0);
  }

  // phi must be positive, finite and strictly increasing on a log grid.
  void check_shape() const {
    double previous = 0.0;
    for (double t : log_grid(kSampleGridMin, kSampleGridMax, 257)) {
      const double v = phi_positive(t);
      if (!std::isfinite(v) || !(v > previous)) {
        throw ValidationError(describe() + ": phi is not a strictly increasing homeomorphism at t=" +
                              std::to_string(t));
      }
      previous = v;
    }
  }

  // Phi(t) / (t phi(t)) by graded quadrature; bounded by the reciprocal indices.
  double integral_ratio(double t) const {
    const double top = phi_positive(t);
    return quadrature::graded_unit_integral([&](double x) { return phi_positive(t * x) / top; }).value;
  }

  const detail::LogChebyshevTable& integral_ratio_table() const {
    std::call_once(table_->once, [this] { table_->table.emplace([this](double t) { return integral_ratio(t); }); });
    return *table_->table;
  }

  YoungFamily family_;
  std::shared_ptr<detail::LazyTable> table_ = std::make_shared<detail::LazyTable>();
  double p_;
  double s_;
  std::vector<double> t_;
  std::vector<double> v_;
  std::vector<double> slopes_;
  std::vector<double> cumulative_;
  std::vector<double> cumulative_star_;
};

/// Phi(s) + Phi*(t) - s t; non-negative by Young's inequality.
inline double young_inequality_gap(const YoungFunction& f, double s, double t) {
  return f.integral(s) + f.complementary(t) - s * t;
}

/// Grid estimate of the Delta_2 constant sup Phi(2t) / Phi(t).
inline double estimate_delta2(const YoungFunction& f) {
  double k = 0.0;
  for (double t : log_grid(kSampleGridMin, kSampleGridMax, kIndexGridPoints)) {
    k = std::max(k, f.integral(2.0 * t) / f.integral(t));
  }
  return k;
}

/// Checks that t -> Phi(sqrt t) has non-decreasing chord slopes on a log grid.
inline SqrtConvexity check_sqrt_convexity(const YoungFunction& f) {
  const auto grid = log_grid(kSampleGridMin, kSampleGridMax, kConvexityGridPoints);
  std::vector<double> g(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) g[i] = f.integral(std::sqrt(grid[i]));
  SqrtConvexity out;
  for (std::size_t i = 1; i + 1 < grid.size(); ++i) {
    const double left = (g[i] - g[i - 1]) / (grid[i] - grid[i - 1]);
    const double right = (g[i + 1] - g[i]) / (grid[i + 1] - grid[i]);
    if (right < left - 1e-9 * std::max(std::abs(left), std::abs(right))) {
      out.convex = false;
      out.violation = std::array<double, 3>{grid[i - 1], grid[i], grid[i + 1]};
      break;
    }
  }
  return out;
}

}  // namespace nhe

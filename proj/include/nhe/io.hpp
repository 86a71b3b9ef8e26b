#pragma once

// CSV and JSON output. Numbers are written with %.17g so that files round-trip
// exactly; lines end in LF on every platform.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "nhe/error.hpp"
#include "nhe/grid.hpp"

namespace nhe::io {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::error_code ec;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) throw IoError("cannot create directory " + path.parent_path().string() + ": " + ec.message());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("write to " + path.string() + " failed");
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("read from " + path.string() + " failed");
  return os.str();
}

/// Header `i[,j[,k]],value`, one row per node in storage order.
inline std::string grid_function_csv(const GridFunction& u) {
  const Grid& g = u.grid();
  static const char* axes[] = {"i", "j", "k"};
  std::string s;
  for (int d = 0; d < g.dimension(); ++d) s += std::string(axes[d]) + ",";
  s += "value\n";
  for (std::size_t n = 0; n < u.size(); ++n) {
    const auto idx = g.node_index(n);
    for (int d = 0; d < g.dimension(); ++d) s += std::to_string(idx[static_cast<std::size_t>(d)]) + ",";
    s += format_double(u[n]) + "\n";
  }
  return s;
}

/// Reads the format written by grid_function_csv. Rows may come in any order
/// but every node must appear exactly once.
inline GridFunction read_grid_function_csv(const std::filesystem::path& path, const GridPtr& g, bool dirichlet_zero) {
  std::istringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file");
  std::vector<double> values(g->node_count(), 0.0);
  std::vector<bool> seen(g->node_count(), false);
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) cells.push_back(cell);
    const auto where = path.string() + ":" + std::to_string(lineno);
    if (cells.size() != static_cast<std::size_t>(g->dimension()) + 1) throw ValidationError(where + ": wrong column count");
    std::size_t n = 0;
    try {
      for (int d = 0; d < g->dimension(); ++d) {
        const int i = std::stoi(cells[static_cast<std::size_t>(d)]);
        if (i < 0 || i >= g->nodes(d)) throw ValidationError(where + ": index out of range");
        n += static_cast<std::size_t>(i) * g->stride(d);
      }
      values[n] = std::stod(cells.back());
    } catch (const std::logic_error&) {
      throw ValidationError(where + ": malformed number");
    }
    if (seen[n]) throw ValidationError(where + ": duplicate node");
    seen[n] = true;
  }
  for (bool b : seen) {
    if (!b) throw ValidationError(path.string() + ": missing nodes");
  }
  return GridFunction(g, std::move(values), dirichlet_zero);
}

/// 64-bit FNV-1a.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace nhe::io

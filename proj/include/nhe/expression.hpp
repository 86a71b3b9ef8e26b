#pragma once

// Arithmetic expressions in the coordinates x, y, z, used to describe
// exponent fields and potentials in configuration files.
//
//   expr   := term (('+' | '-') term)*
//   term   := unary (('*' | '/') unary)*
//   unary  := ('+' | '-') unary | power
//   power  := atom ('^' unary)?          right associative
//   atom   := number | x | y | z | pi | func '(' expr ')' | '(' expr ')'
//   func   := sin cos tan exp log sqrt abs

#include <cctype>
#include <cmath>
#include <cstdlib>
#include <memory>
#include <numbers>
#include <string>
#include <utility>

#include "nhe/error.hpp"

namespace nhe {

class Expression {
 public:
  static Expression parse(const std::string& text) {
    Parser p{text, 0};
    auto root = p.expr();
    p.skip();
    if (p.pos != text.size()) p.fail("unexpected '" + std::string(1, text[p.pos]) + "'");
    return Expression(text, std::move(root));
  }

  double operator()(double x, double y, double z) const { return root_->eval(x, y, z); }
  const std::string& text() const { return text_; }

 private:
  struct Node {
    enum Kind { number, var_x, var_y, var_z, add, sub, mul, div, pow, neg, call } kind = number;
    double value = 0.0;
    double (*fn)(double) = nullptr;
    std::shared_ptr<const Node> a, b;

    double eval(double x, double y, double z) const {
      switch (kind) {
        case number: return value;
        case var_x: return x;
        case var_y: return y;
        case var_z: return z;
        case add: return a->eval(x, y, z) + b->eval(x, y, z);
        case sub: return a->eval(x, y, z) - b->eval(x, y, z);
        case mul: return a->eval(x, y, z) * b->eval(x, y, z);
        case div: return a->eval(x, y, z) / b->eval(x, y, z);
        case pow: return std::pow(a->eval(x, y, z), b->eval(x, y, z));
        case neg: return -a->eval(x, y, z);
        case call: return fn(a->eval(x, y, z));
      }
      return 0.0;
    }
  };
  using NodePtr = std::shared_ptr<const Node>;

  static NodePtr binary(Node::Kind k, NodePtr a, NodePtr b) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->a = std::move(a);
    n->b = std::move(b);
    return n;
  }

  struct Parser {
    const std::string& s;
    std::size_t pos;

    [[noreturn]] void fail(const std::string& msg) const {
      throw ValidationError("expression \"" + s + "\" at offset " + std::to_string(pos) + ": " + msg);
    }
    void skip() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip();
      if (pos < s.size() && s[pos] == c) {
        ++pos;
        return true;
      }
      return false;
    }

    NodePtr expr() {
      NodePtr left = term();
      for (;;) {
        if (eat('+')) left = binary(Node::add, left, term());
        else if (eat('-')) left = binary(Node::sub, left, term());
        else return left;
      }
    }
    NodePtr term() {
      NodePtr left = unary();
      for (;;) {
        if (eat('*')) left = binary(Node::mul, left, unary());
        else if (eat('/')) left = binary(Node::div, left, unary());
        else return left;
      }
    }
    NodePtr unary() {
      if (eat('+')) return unary();
      if (eat('-')) return binary(Node::neg, unary(), nullptr);
      NodePtr base = atom();
      if (eat('^')) return binary(Node::pow, base, unary());
      return base;
    }
    NodePtr atom() {
      skip();
      if (pos >= s.size()) fail("unexpected end of input");
      if (eat('(')) {
        NodePtr inner = expr();
        if (!eat(')')) fail("expected ')'");
        return inner;
      }
      const char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
        const char* begin = s.c_str() + pos;
        char* end = nullptr;
        const double v = std::strtod(begin, &end);
        if (end == begin) fail("malformed number");
        pos += static_cast<std::size_t>(end - begin);
        auto n = std::make_shared<Node>();
        n->value = v;
        return n;
      }
      if (std::isalpha(static_cast<unsigned char>(c))) {
        const std::size_t start = pos;
        while (pos < s.size() && std::isalnum(static_cast<unsigned char>(s[pos]))) ++pos;
        const std::string name = s.substr(start, pos - start);
        auto n = std::make_shared<Node>();
        if (name == "x") n->kind = Node::var_x;
        else if (name == "y") n->kind = Node::var_y;
        else if (name == "z") n->kind = Node::var_z;
        else if (name == "pi") n->value = std::numbers::pi;
        else {
          n->kind = Node::call;
          n->fn = function(name);
          if (!eat('(')) fail("expected '(' after " + name);
          n->a = expr();
          if (!eat(')')) fail("expected ')'");
        }
        return n;
      }
      fail("unexpected '" + std::string(1, c) + "'");
    }
    double (*function(const std::string& name) const)(double) {
      if (name == "sin") return [](double v) { return std::sin(v); };
      if (name == "cos") return [](double v) { return std::cos(v); };
      if (name == "tan") return [](double v) { return std::tan(v); };
      if (name == "exp") return [](double v) { return std::exp(v); };
      if (name == "log") return [](double v) { return std::log(v); };
      if (name == "sqrt") return [](double v) { return std::sqrt(v); };
      if (name == "abs") return [](double v) { return std::abs(v); };
      fail("unknown name '" + name + "'");
    }
  };

  Expression(std::string text, NodePtr root) : text_(std::move(text)), root_(std::move(root)) {}

  std::string text_;
  NodePtr root_;
};

}  // namespace nhe

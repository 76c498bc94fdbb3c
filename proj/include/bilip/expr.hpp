#pragma once

// Scalar expressions in one variable t, written in a small prefix grammar:
//
//   expr   := number | t | pi | e | ( op expr... )
//   number := decimal literal, or rational p/q (e.g. 3/2)
//   op     := + | - | * | / | pow | exp | log | sin | cos | sqrt | abs
//
// "+" and "*" take one or more arguments, "-" takes one (negation) or two,
// "/" and "pow" take two, the remaining ops take one. Examples:
//
//   (* t t)                        t^2
//   (pow t 3/2)                    t^1.5
//   (* t (cos (- 0 (log t))))      t cos(-log t)

#include "bilip/core.hpp"

#include <cctype>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace bilip {

class Expr {
 public:
  Expr() = default;

  static Expr parse(std::string_view text) {
    Expr e;
    e.text_ = std::string(text);
    Parser p{text, 0, e.nodes_};
    e.root_ = p.parse_expr();
    p.skip_ws();
    if (p.pos != text.size()) p.fail("trailing input");
    return e;
  }

  static Expr variable() { return parse("t"); }

  double operator()(double t) const {
    if (nodes_.empty()) throw Error(ErrorCode::InvalidArgument, "empty expression");
    return eval(root_, t);
  }

  const std::string& text() const { return text_; }

 private:
  enum class Op { Num, Var, Add, Sub, Neg, Mul, Div, Pow, Exp, Log, Sin, Cos, Sqrt, Abs };

  struct Node {
    Op op;
    double value = 0.0;
    std::vector<int> args;
  };

  struct Parser {
    std::string_view s;
    std::size_t pos;
    std::vector<Node>& nodes;

    [[noreturn]] void fail(const std::string& why) const {
      throw Error(ErrorCode::ParseError,
                  "expression: " + why + " at offset " + std::to_string(pos) + " in '" + std::string(s) + "'");
    }

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }

    std::string_view token() {
      skip_ws();
      const std::size_t start = pos;
      while (pos < s.size() && !std::isspace(static_cast<unsigned char>(s[pos])) && s[pos] != '(' &&
             s[pos] != ')')
        ++pos;
      if (pos == start) fail("expected token");
      return s.substr(start, pos - start);
    }

    int push(Node n) {
      nodes.push_back(std::move(n));
      return static_cast<int>(nodes.size()) - 1;
    }

    static bool parse_number(std::string_view tok, double& out) {
      const std::string str(tok);
      const auto slash = str.find('/');
      try {
        std::size_t used = 0;
        if (slash != std::string::npos && slash > 0) {
          const double num = std::stod(str.substr(0, slash), &used);
          if (used != slash) return false;
          const std::string den_s = str.substr(slash + 1);
          const double den = std::stod(den_s, &used);
          if (used != den_s.size() || den == 0.0) return false;
          out = num / den;
          return true;
        }
        out = std::stod(str, &used);
        return used == str.size();
      } catch (const std::exception&) {
        return false;
      }
    }

    int parse_expr() {
      skip_ws();
      if (pos >= s.size()) fail("unexpected end");
      if (s[pos] == '(') {
        ++pos;
        const std::string_view name = token();
        std::vector<int> args;
        for (;;) {
          skip_ws();
          if (pos >= s.size()) fail("missing ')'");
          if (s[pos] == ')') {
            ++pos;
            break;
          }
          args.push_back(parse_expr());
        }
        return make_op(name, std::move(args));
      }
      if (s[pos] == ')') fail("unexpected ')'");
      const std::string_view tok = token();
      if (tok == "t") return push({Op::Var, 0.0, {}});
      if (tok == "pi") return push({Op::Num, std::numbers::pi, {}});
      if (tok == "e") return push({Op::Num, std::numbers::e, {}});
      double v = 0.0;
      if (!parse_number(tok, v)) fail("bad atom '" + std::string(tok) + "'");
      return push({Op::Num, v, {}});
    }

    int make_op(std::string_view name, std::vector<int> args) {
      auto arity = [&](std::size_t lo, std::size_t hi) {
        if (args.size() < lo || args.size() > hi) fail("wrong arity for '" + std::string(name) + "'");
      };
      constexpr std::size_t many = 1u << 20;
      Op op;
      if (name == "+") { arity(1, many); op = Op::Add; }
      else if (name == "*") { arity(1, many); op = Op::Mul; }
      else if (name == "-") { arity(1, 2); op = args.size() == 1 ? Op::Neg : Op::Sub; }
      else if (name == "/") { arity(2, 2); op = Op::Div; }
      else if (name == "pow") { arity(2, 2); op = Op::Pow; }
      else if (name == "exp") { arity(1, 1); op = Op::Exp; }
      else if (name == "log") { arity(1, 1); op = Op::Log; }
      else if (name == "sin") { arity(1, 1); op = Op::Sin; }
      else if (name == "cos") { arity(1, 1); op = Op::Cos; }
      else if (name == "sqrt") { arity(1, 1); op = Op::Sqrt; }
      else if (name == "abs") { arity(1, 1); op = Op::Abs; }
      else fail("unknown operator '" + std::string(name) + "'");
      return push({op, 0.0, std::move(args)});
    }
  };

  double eval(int id, double t) const {
    const Node& n = nodes_[id];
    switch (n.op) {
      case Op::Num: return n.value;
      case Op::Var: return t;
      case Op::Add: {
        double s = 0.0;
        for (int a : n.args) s += eval(a, t);
        return s;
      }
      case Op::Mul: {
        double s = 1.0;
        for (int a : n.args) s *= eval(a, t);
        return s;
      }
      case Op::Sub: return eval(n.args[0], t) - eval(n.args[1], t);
      case Op::Neg: return -eval(n.args[0], t);
      case Op::Div: return eval(n.args[0], t) / eval(n.args[1], t);
      case Op::Pow: return std::pow(eval(n.args[0], t), eval(n.args[1], t));
      case Op::Exp: return std::exp(eval(n.args[0], t));
      case Op::Log: return std::log(eval(n.args[0], t));
      case Op::Sin: return std::sin(eval(n.args[0], t));
      case Op::Cos: return std::cos(eval(n.args[0], t));
      case Op::Sqrt: return std::sqrt(eval(n.args[0], t));
      case Op::Abs: return std::abs(eval(n.args[0], t));
    }
    return 0.0;
  }

  std::string text_;
  std::vector<Node> nodes_;
  int root_ = 0;
};

}  // namespace bilip

#pragma once

#include <cctype>
#include <cmath>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "curvesolve/dual.hpp"
#include "curvesolve/errors.hpp"

namespace curvesolve {

// Arithmetic expressions over named variables, e.g. "2/(x0)^2*(1+0.05*cos(theta))".
// Grammar: full precedence chain  + -  |  * /  |  unary -  |  ^ (right assoc)  |
// atoms: number, variable, function call, parenthesised expression.
// The variable set is fixed at parse time; evaluation is templated on the scalar.

class Expr {
public:
  enum class Op { add, sub, mul, div, pow, neg };
  enum class Fn { sin, cos, tan, cot, exp, log, sqrt, abs, sinh, cosh, tanh, atan, asin, acos };

  struct Node {
    enum class Kind { number, variable, unary, binary, call } kind;
    double number = 0.0;
    int var_slot = -1;
    Op op = Op::add;
    Fn fn = Fn::sin;
    std::unique_ptr<Node> lhs, rhs;
  };

  Expr() = default;

  static Expr parse(const std::string& text, const std::vector<std::string>& variables) {
    Parser p{text, 0, &variables};
    Expr e;
    e.text_ = text;
    e.vars_ = variables;
    e.root_ = p.parse_sum();
    p.skip_ws();
    if (p.pos != text.size())
      fail(ErrorKind::parse, "expression: trailing characters at position " +
                                 std::to_string(p.pos) + " in '" + text + "'");
    return e;
  }

  bool empty() const { return root_ == nullptr; }
  const std::string& text() const { return text_; }
  const std::vector<std::string>& variables() const { return vars_; }

  template <class T>
  T eval(std::span<const T> slots) const {
    return eval_node<T>(*root_, slots);
  }
  double operator()(std::span<const double> slots) const { return eval<double>(slots); }

private:
  std::unique_ptr<Node> root_;
  std::string text_;
  std::vector<std::string> vars_;

  template <class T>
  static T eval_node(const Node& n, std::span<const T> s) {
    using std::sin; using std::cos; using std::tan; using std::exp; using std::log;
    using std::sqrt; using std::abs; using std::sinh; using std::cosh; using std::tanh;
    using std::atan; using std::asin; using std::acos; using std::pow;
    switch (n.kind) {
      case Node::Kind::number: return T(n.number);
      case Node::Kind::variable: return s[n.var_slot];
      case Node::Kind::unary: return -eval_node<T>(*n.lhs, s);
      case Node::Kind::binary: {
        T a = eval_node<T>(*n.lhs, s);
        T b = eval_node<T>(*n.rhs, s);
        switch (n.op) {
          case Op::add: return a + b;
          case Op::sub: return a - b;
          case Op::mul: return a * b;
          case Op::div: return a / b;
          case Op::pow: return pow(a, b);
          default: break;
        }
        return T(0);
      }
      case Node::Kind::call: {
        T a = eval_node<T>(*n.lhs, s);
        switch (n.fn) {
          case Fn::sin: return sin(a);
          case Fn::cos: return cos(a);
          case Fn::tan: return tan(a);
          case Fn::cot: return cos(a) / sin(a);
          case Fn::exp: return exp(a);
          case Fn::log: return log(a);
          case Fn::sqrt: return sqrt(a);
          case Fn::abs: return abs(a);
          case Fn::sinh: return sinh(a);
          case Fn::cosh: return cosh(a);
          case Fn::tanh: return tanh(a);
          case Fn::atan: return atan(a);
          case Fn::asin: return asin(a);
          case Fn::acos: return acos(a);
        }
        return T(0);
      }
    }
    return T(0);
  }

  struct Parser {
    const std::string& s;
    size_t pos;
    const std::vector<std::string>* vars;

    void skip_ws() {
      while (pos < s.size() && std::isspace(static_cast<unsigned char>(s[pos]))) ++pos;
    }
    bool eat(char c) {
      skip_ws();
      if (pos < s.size() && s[pos] == c) { ++pos; return true; }
      return false;
    }
    char peek() {
      skip_ws();
      return pos < s.size() ? s[pos] : '\0';
    }

    std::unique_ptr<Node> parse_sum() {
      auto lhs = parse_product();
      for (;;) {
        if (eat('+')) lhs = make_bin(Op::add, std::move(lhs), parse_product());
        else if (eat('-')) lhs = make_bin(Op::sub, std::move(lhs), parse_product());
        else return lhs;
      }
    }

    std::unique_ptr<Node> parse_product() {
      auto lhs = parse_unary();
      for (;;) {
        if (eat('*')) lhs = make_bin(Op::mul, std::move(lhs), parse_unary());
        else if (eat('/')) lhs = make_bin(Op::div, std::move(lhs), parse_unary());
        else return lhs;
      }
    }

    std::unique_ptr<Node> parse_unary() {
      if (eat('-')) {
        auto n = std::make_unique<Node>();
        n->kind = Node::Kind::unary;
        n->lhs = parse_unary();
        return n;
      }
      return parse_power();
    }

    std::unique_ptr<Node> parse_power() {
      auto base = parse_atom();
      if (eat('^')) return make_bin(Op::pow, std::move(base), parse_unary());
      return base;
    }

    std::unique_ptr<Node> parse_atom() {
      skip_ws();
      if (pos >= s.size()) fail(ErrorKind::parse, "expression: unexpected end in '" + s + "'");
      char c = s[pos];
      if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
      if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
      if (c == '(') {
        ++pos;
        auto inner = parse_sum();
        if (!eat(')'))
          fail(ErrorKind::parse, "expression: missing ')' in '" + s + "'");
        return inner;
      }
      fail(ErrorKind::parse, std::string("expression: unexpected character '") + c + "' in '" + s + "'");
    }

    std::unique_ptr<Node> parse_number() {
      size_t end = pos;
      while (end < s.size() &&
             (std::isdigit(static_cast<unsigned char>(s[end])) || s[end] == '.' ||
              s[end] == 'e' || s[end] == 'E' ||
              ((s[end] == '+' || s[end] == '-') && end > pos && (s[end - 1] == 'e' || s[end - 1] == 'E'))))
        ++end;
      auto n = std::make_unique<Node>();
      n->kind = Node::Kind::number;
      try {
        n->number = std::stod(s.substr(pos, end - pos));
      } catch (const std::exception&) {
        fail(ErrorKind::parse, "expression: bad number at position " + std::to_string(pos));
      }
      pos = end;
      return n;
    }

    std::unique_ptr<Node> parse_ident() {
      size_t end = pos;
      while (end < s.size() &&
             (std::isalnum(static_cast<unsigned char>(s[end])) || s[end] == '_'))
        ++end;
      std::string name = s.substr(pos, end - pos);
      pos = end;

      static const std::map<std::string, Fn> fns = {
          {"sin", Fn::sin}, {"cos", Fn::cos}, {"tan", Fn::tan}, {"cot", Fn::cot},
          {"exp", Fn::exp}, {"log", Fn::log}, {"sqrt", Fn::sqrt}, {"abs", Fn::abs},
          {"sinh", Fn::sinh}, {"cosh", Fn::cosh}, {"tanh", Fn::tanh},
          {"atan", Fn::atan}, {"asin", Fn::asin}, {"acos", Fn::acos}};
      if (auto it = fns.find(name); it != fns.end()) {
        if (!eat('('))
          fail(ErrorKind::parse, "expression: function '" + name + "' needs '('");
        auto arg = parse_sum();
        if (!eat(')'))
          fail(ErrorKind::parse, "expression: missing ')' after '" + name + "'");
        auto n = std::make_unique<Node>();
        n->kind = Node::Kind::call;
        n->fn = it->second;
        n->lhs = std::move(arg);
        return n;
      }
      if (name == "pi" || name == "e") {
        auto n = std::make_unique<Node>();
        n->kind = Node::Kind::number;
        n->number = name == "pi" ? M_PI : M_E;
        return n;
      }
      for (size_t i = 0; i < vars->size(); ++i) {
        if ((*vars)[i] == name) {
          auto n = std::make_unique<Node>();
          n->kind = Node::Kind::variable;
          n->var_slot = static_cast<int>(i);
          return n;
        }
      }
      fail(ErrorKind::parse, "expression: unknown identifier '" + name + "' in '" + s + "'");
    }

    static std::unique_ptr<Node> make_bin(Op op, std::unique_ptr<Node> a, std::unique_ptr<Node> b) {
      auto n = std::make_unique<Node>();
      n->kind = Node::Kind::binary;
      n->op = op;
      n->lhs = std::move(a);
      n->rhs = std::move(b);
      return n;
    }
  };
};

// Shared handle: scenarios copy parsed expressions around freely.
class ExprRef {
public:
  ExprRef() = default;
  ExprRef(Expr e) : e_(std::make_shared<Expr>(std::move(e))) {}
  static ExprRef parse(const std::string& text, const std::vector<std::string>& vars) {
    return ExprRef(Expr::parse(text, vars));
  }
  bool empty() const { return !e_ || e_->empty(); }
  const std::string& text() const { return e_->text(); }
  template <class T>
  T eval(std::span<const T> slots) const { return e_->eval<T>(slots); }
  const Expr& get() const { return *e_; }

private:
  std::shared_ptr<const Expr> e_;
};

} // namespace curvesolve

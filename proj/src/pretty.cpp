#include "dualfpc/pretty.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>

namespace dualfpc {

std::string fmt_double(double v) {
  char buf[64];
  if (v == std::floor(v) && std::abs(v) < 1e15) {
    std::snprintf(buf, sizeof buf, "%.1f", v);
    return buf;
  }
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof buf, "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  if (!std::strpbrk(buf, ".eE")) std::strcat(buf, ".0");
  return buf;
}

namespace {

bool type_atomic(const TypeRef& t) {
  return std::visit(overloaded{
    [](const ty::Real&) { return true; },
    [](const ty::Tangent&) { return true; },
    [](const ty::Unit&) { return true; },
    [](const ty::Void&) { return true; },
    [](const ty::Var&) { return true; },
    [](const auto&) { return false; },
  }, t->node);
}

std::string type_str(const TypeRef& t);

std::string operand(const TypeRef& t) {
  auto s = type_str(t);
  return type_atomic(t) ? s : "(" + s + ")";
}

std::string type_str(const TypeRef& t) {
  return std::visit(overloaded{
    [](const ty::Real&) -> std::string { return "real"; },
    [](const ty::Tangent&) -> std::string { return "tangent"; },
    [](const ty::Unit&) -> std::string { return "unit"; },
    [](const ty::Void&) -> std::string { return "void"; },
    [](const ty::Var& v) -> std::string { return v.name; },
    [](const ty::Sum& s) -> std::string { return operand(s.left) + " + " + operand(s.right); },
    [](const ty::Prod& p) -> std::string { return operand(p.left) + " * " + operand(p.right); },
    [](const ty::Arrow& a) -> std::string {
      // arrows nest to the right without parens
      auto rhs = std::holds_alternative<ty::Arrow>(a.res->node) ? type_str(a.res) : operand(a.res);
      return operand(a.arg) + " -> " + rhs;
    },
    [](const ty::Mu& m) -> std::string { return "mu " + m.binder + ". " + type_str(m.body); },
  }, t->node);
}

// Precedence levels, loosest to tightest. A node printed where a higher
// level is required gets parenthesized.
enum Level { kTerm = 0, kAdd = 1, kMul = 2, kUnary = 3, kApp = 4, kAtom = 5 };

struct TermPrinter {
  std::string at(const TermRef& t, int required) {
    auto [text, level] = render(t);
    if (level < required) return "(" + text + ")";
    return text;
  }

  std::pair<std::string, int> render(const TermRef& t) {
    using R = std::pair<std::string, int>;
    return std::visit(overloaded{
      [&](const tm::Var& v) -> R { return {v.name, kAtom}; },
      [&](const tm::Let& l) -> R {
        return {"let " + l.name + " = " + at(l.bound, kTerm) + " in " + at(l.body, kTerm), kTerm};
      },
      [&](const tm::Const& c) -> R {
        auto s = fmt_double(c.value);
        return {s, c.value < 0 ? kUnary : kAtom};
      },
      [&](const tm::PrimOp& p) -> R {
        if (p.op == "+" || p.op == "-")
          return {at(p.args[0], kAdd) + " " + p.op + " " + at(p.args[1], kMul), kAdd};
        if (p.op == "*" || p.op == "/")
          return {at(p.args[0], kMul) + " " + p.op + " " + at(p.args[1], kUnary), kMul};
        if (p.op == "neg") return {"-" + at(p.args[0], kAtom), kUnary};
        return {p.op + " " + at(p.args[0], kAtom), kUnary};
      },
      [&](const tm::Sign& s) -> R { return {"sign " + at(s.arg, kAtom), kUnary}; },
      [&](const tm::Inl& s) -> R { return {"inl " + at(s.arg, kAtom), kUnary}; },
      [&](const tm::Inr& s) -> R { return {"inr " + at(s.arg, kAtom), kUnary}; },
      [&](const tm::Case& c) -> R {
        return {"case " + at(c.scrutinee, kTerm) + " of inl " + c.left_name + " -> " +
                    at(c.left_body, kTerm) + " | inr " + c.right_name + " -> " +
                    at(c.right_body, kTerm),
                kTerm};
      },
      [&](const tm::Unit&) -> R { return {"()", kAtom}; },
      [&](const tm::Pair& p) -> R {
        return {"(" + at(p.first, kTerm) + ", " + at(p.second, kTerm) + ")", kAtom};
      },
      [&](const tm::PairMatch& p) -> R {
        return {"case " + at(p.scrutinee, kTerm) + " of (" + p.first_name + ", " +
                    p.second_name + ") -> " + at(p.body, kTerm),
                kTerm};
      },
      [&](const tm::Lam& l) -> R {
        std::string binder =
            l.param_type ? "(" + l.param + " : " + type_str(*l.param_type) + ")" : l.param;
        return {"fun " + binder + " -> " + at(l.body, kTerm), kTerm};
      },
      [&](const tm::App& a) -> R {
        return {at(a.fn, kApp) + " " + at(a.arg, kAtom), kApp};
      },
      [&](const tm::Roll& r) -> R {
        return {"roll [" + type_str(r.mu_type) + "] " + at(r.arg, kAtom), kUnary};
      },
      [&](const tm::Unroll& u) -> R {
        return {"case " + at(u.scrutinee, kTerm) + " of roll " + u.name + " -> " +
                    at(u.body, kTerm),
                kTerm};
      },
      [&](const tm::VoidMatch& v) -> R {
        return {"case " + at(v.scrutinee, kTerm) + " of void", kTerm};
      },
      [&](const tm::Basis& b) -> R { return {"e#" + std::to_string(b.index), kAtom}; },
      [&](const tm::ZeroTan&) -> R { return {"0t", kAtom}; },
      [&](const tm::AddTan& a) -> R {
        return {at(a.left, kAdd) + " +. " + at(a.right, kMul), kAdd};
      },
      [&](const tm::ScaleTan& s) -> R {
        return {at(s.tan, kMul) + " *. " + at(s.scale, kUnary), kMul};
      },
      [&](const tm::ProjHandler& p) -> R {
        return {"p#" + std::to_string(p.index) + " " + at(p.arg, kAtom), kUnary};
      },
    }, t->node);
  }
};

} // namespace

std::string pretty(const TypeRef& type) { return type_str(type); }

std::string pretty(const TermRef& term) { return TermPrinter{}.at(term, kTerm); }

} // namespace dualfpc

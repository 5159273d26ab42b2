#pragma once

#include <memory>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

namespace dualfpc {

template <class... Fs> struct overloaded : Fs... { using Fs::operator()...; };
template <class... Fs> overloaded(Fs...) -> overloaded<Fs...>;

struct Type;
using TypeRef = std::shared_ptr<const Type>;

namespace ty {
struct Real {};
struct Tangent {};
struct Unit {};
struct Void {};
struct Sum { TypeRef left, right; };
struct Prod { TypeRef left, right; };
struct Arrow { TypeRef arg, res; };
struct Var { std::string name; };
struct Mu { std::string binder; TypeRef body; };
} // namespace ty

struct Type {
  using Node = std::variant<ty::Real, ty::Tangent, ty::Unit, ty::Void, ty::Sum,
                            ty::Prod, ty::Arrow, ty::Var, ty::Mu>;
  Node node;
};

TypeRef t_real();
TypeRef t_tangent();
TypeRef t_unit();
TypeRef t_void();
TypeRef t_sum(TypeRef left, TypeRef right);
TypeRef t_prod(TypeRef left, TypeRef right);
TypeRef t_arrow(TypeRef arg, TypeRef res);
TypeRef t_var(std::string name);
TypeRef t_mu(std::string binder, TypeRef body);

struct Term;
using TermRef = std::shared_ptr<const Term>;

namespace tm {
struct Var { std::string name; };
struct Let { std::string name; TermRef bound, body; };
struct Const { double value; };
struct PrimOp { std::string op; std::vector<TermRef> args; };
struct Sign { TermRef arg; };
struct Inl { TermRef arg; };
struct Inr { TermRef arg; };
struct Case {
  TermRef scrutinee;
  std::string left_name;
  TermRef left_body;
  std::string right_name;
  TermRef right_body;
};
struct Unit {};
struct Pair { TermRef first, second; };
struct PairMatch {
  TermRef scrutinee;
  std::string first_name, second_name;
  TermRef body;
};
struct Lam {
  std::string param;
  std::optional<TypeRef> param_type;  // optional annotation, used for synthesis
  TermRef body;
};
struct App { TermRef fn, arg; };
struct Roll { TermRef arg; TypeRef mu_type; };  // mu_type is the full mu a. ... type
struct Unroll { TermRef scrutinee; std::string name; TermRef body; };
struct VoidMatch { TermRef scrutinee; };
// target-only constructors
struct Basis { int index; };  // index >= 1
struct ZeroTan {};
struct AddTan { TermRef left, right; };
struct ScaleTan { TermRef tan, scale; };
struct ProjHandler { int index; TermRef arg; };  // index >= 1
} // namespace tm

struct Term {
  using Node = std::variant<tm::Var, tm::Let, tm::Const, tm::PrimOp, tm::Sign,
                            tm::Inl, tm::Inr, tm::Case, tm::Unit, tm::Pair,
                            tm::PairMatch, tm::Lam, tm::App, tm::Roll,
                            tm::Unroll, tm::VoidMatch, tm::Basis, tm::ZeroTan,
                            tm::AddTan, tm::ScaleTan, tm::ProjHandler>;
  Node node;
};

TermRef m_var(std::string name);
TermRef m_let(std::string name, TermRef bound, TermRef body);
TermRef m_const(double value);
TermRef m_primop(std::string op, std::vector<TermRef> args);
TermRef m_sign(TermRef arg);
TermRef m_inl(TermRef arg);
TermRef m_inr(TermRef arg);
TermRef m_case(TermRef scrutinee, std::string ln, TermRef lb, std::string rn, TermRef rb);
TermRef m_unit();
TermRef m_pair(TermRef first, TermRef second);
TermRef m_pairmatch(TermRef scrutinee, std::string n1, std::string n2, TermRef body);
TermRef m_lam(std::string param, TermRef body);
TermRef m_lam(std::string param, TypeRef param_type, TermRef body);
TermRef m_app(TermRef fn, TermRef arg);
TermRef m_roll(TermRef arg, TypeRef mu_type);
TermRef m_unroll(TermRef scrutinee, std::string name, TermRef body);
TermRef m_voidmatch(TermRef scrutinee);
TermRef m_basis(int index);
TermRef m_zerotan();
TermRef m_addtan(TermRef left, TermRef right);
TermRef m_scaletan(TermRef tan, TermRef scale);
TermRef m_projhandler(int index, TermRef arg);

using NameSet = std::set<std::string>;

NameSet free_type_vars(const TypeRef& t);
NameSet free_vars(const TermRef& t);
// every variable name occurring in t, free or bound
NameSet all_names(const TermRef& t);
NameSet all_type_vars(const TypeRef& t);

// Deterministic freshening: hint, hint1, hint2, ... first not in avoid.
std::string fresh_name(const NameSet& avoid, const std::string& hint);

// Grows a used-name set across multiple fresh draws.
struct NameSupply {
  NameSet used;
  std::string fresh(const std::string& hint) {
    auto n = fresh_name(used, hint);
    used.insert(n);
    return n;
  }
};

// capture-avoiding substitutions
TypeRef subst_type(const TypeRef& t, const std::string& var, const TypeRef& replacement);
TermRef subst_term(const TermRef& t, const std::string& var, const TermRef& replacement);

bool alpha_eq(const TypeRef& a, const TypeRef& b);
bool alpha_eq(const TermRef& a, const TermRef& b);

// mu a. s  unfolds to  s[mu a. s / a]
TypeRef unfold_mu(const TypeRef& mu);

bool type_mentions_tangent(const TypeRef& t);
// true iff t uses no target-only constructors and no tangent annotations
bool is_source_term(const TermRef& t);

} // namespace dualfpc

#include "dualfpc/eval.hpp"

#include <cassert>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "dualfpc/ops.hpp"
#include "dualfpc/pretty.hpp"

namespace dualfpc {

namespace {
ValueRef mkv(Value::Node n) { return std::make_shared<const Value>(Value{std::move(n)}); }
} // namespace

ValueRef v_real(double v) {
  assert(std::isfinite(v) && "non-finite reals are domain errors, not values");
  return mkv(val::Real{v});
}
ValueRef v_tan(Tangent t) { return mkv(val::Tan{std::move(t)}); }
ValueRef v_unit() { static ValueRef u = mkv(val::Unit{}); return u; }
ValueRef v_inl(ValueRef v) { return mkv(val::Inl{std::move(v)}); }
ValueRef v_inr(ValueRef v) { return mkv(val::Inr{std::move(v)}); }
ValueRef v_pair(ValueRef a, ValueRef b) { return mkv(val::Pair{std::move(a), std::move(b)}); }
ValueRef v_closure(EnvRef env, std::string param, TermRef body) {
  return mkv(val::Closure{std::move(env), std::move(param), std::move(body)});
}
ValueRef v_roll(ValueRef v) { return mkv(val::Roll{std::move(v)}); }

EnvRef env_extend(EnvRef env, std::string name, ValueRef value) {
  return std::make_shared<const EnvNode>(EnvNode{std::move(name), std::move(value), std::move(env)});
}

const ValueRef* env_lookup(const EnvRef& env, const std::string& name) {
  for (const EnvNode* n = env.get(); n; n = n->next.get())
    if (n->name == name) return &n->value;
  return nullptr;
}

std::variant<double, DomainError> apply_prim(const std::string& op,
                                             const std::vector<double>& args) {
  ensure_default_ops();
  const auto& sig = OpRegistry::instance().require(op);
  if (static_cast<int>(args.size()) != sig.arity)
    throw std::invalid_argument("apply_prim: arity mismatch for '" + op + "'");
  auto r = sig.sem(args);
  if (!r) return DomainError{op, args};
  return *r;
}

std::variant<ValueRef, DomainError> sign_sem(double x) {
  if (x < 0.0) return v_inl(v_unit());
  if (x > 0.0) return v_inr(v_unit());
  return DomainError{"sign", {x}};
}

namespace {

struct FLet { std::string name; TermRef body; EnvRef env; };
struct FAppRand { TermRef arg; EnvRef env; };
struct FAppCall { ValueRef fn; };
struct FPrim { std::string op; std::vector<TermRef> args; std::vector<double> done; EnvRef env; };
struct FSign {};
struct FInl {};
struct FInr {};
struct FPairFirst { TermRef second; EnvRef env; };
struct FPairSecond { ValueRef first; };
struct FCase { std::string ln; TermRef lb; std::string rn; TermRef rb; EnvRef env; };
struct FPairMatch { std::string n1, n2; TermRef body; EnvRef env; };
struct FRoll {};
struct FUnroll { std::string name; TermRef body; EnvRef env; };
struct FVoidMatch {};
struct FAddTanL { TermRef right; EnvRef env; };
struct FAddTanR { ValueRef left; };
struct FScaleTanL { TermRef scale; EnvRef env; };
struct FScaleTanR { ValueRef tan; };
struct FProj { int index; };

using Frame = std::variant<FLet, FAppRand, FAppCall, FPrim, FSign, FInl, FInr,
                           FPairFirst, FPairSecond, FCase, FPairMatch, FRoll,
                           FUnroll, FVoidMatch, FAddTanL, FAddTanR, FScaleTanL,
                           FScaleTanR, FProj>;

// Small-step machine with an explicit continuation stack, so that fuel (not
// the C++ stack) bounds deep recursion through fix-encoded loops.
class Machine {
 public:
  Machine(Backend backend, long fuel, EvalHooks hooks)
      : backend_(backend), fuel_(fuel), hooks_(hooks) {}

  EvalResult run(EnvRef env, TermRef t) {
    mode_eval(std::move(t), std::move(env));
    return loop();
  }

  EvalResult run_apply(const ValueRef& fn, const ValueRef& arg) {
    const auto* cl = std::get_if<val::Closure>(&fn->node);
    if (!cl) throw std::invalid_argument("apply_function: not a closure");
    mode_eval(cl->body, env_extend(cl->env, cl->param, arg));
    return loop();
  }

 private:
  Backend backend_;
  long fuel_;
  EvalHooks hooks_;
  long steps_ = 0;
  std::vector<Frame> stack_;

  bool evaluating_ = false;
  TermRef cur_;
  EnvRef env_;
  ValueRef ret_;

  void mode_eval(TermRef t, EnvRef env) {
    cur_ = std::move(t);
    env_ = std::move(env);
    evaluating_ = true;
  }
  void mode_return(ValueRef v) {
    ret_ = std::move(v);
    evaluating_ = false;
  }

  EvalResult done(Outcome o) { return {std::move(o), steps_}; }

  EvalResult loop() {
    while (true) {
      if (evaluating_) {
        if (fuel_ <= 0) return done({FuelExhausted{steps_}});
        --fuel_;
        ++steps_;
        if (auto out = step_eval()) return done(std::move(*out));
      } else {
        if (stack_.empty()) return done({ret_});
        Frame frame = std::move(stack_.back());
        stack_.pop_back();
        if (auto out = step_return(frame)) return done(std::move(*out));
      }
    }
  }

  // nullopt: keep running; otherwise the machine halted with this outcome
  std::optional<Outcome> step_eval() {
    const TermRef t = cur_;
    return std::visit(overloaded{
      [&](const tm::Var& v) -> std::optional<Outcome> {
        const auto* found = env_lookup(env_, v.name);
        if (!found) throw std::logic_error("eval: unbound variable '" + v.name + "'");
        mode_return(*found);
        return std::nullopt;
      },
      [&](const tm::Let& l) -> std::optional<Outcome> {
        stack_.push_back(FLet{l.name, l.body, env_});
        cur_ = l.bound;
        return std::nullopt;
      },
      [&](const tm::Const& c) -> std::optional<Outcome> {
        if (!std::isfinite(c.value)) return Outcome{DomainError{"const", {c.value}}};
        mode_return(v_real(c.value));
        return std::nullopt;
      },
      [&](const tm::PrimOp& p) -> std::optional<Outcome> {
        if (p.args.empty()) return finish_prim(p.op, {});
        stack_.push_back(FPrim{p.op, p.args, {}, env_});
        cur_ = p.args[0];
        return std::nullopt;
      },
      [&](const tm::Sign& s) -> std::optional<Outcome> {
        stack_.push_back(FSign{});
        cur_ = s.arg;
        return std::nullopt;
      },
      [&](const tm::Inl& s) -> std::optional<Outcome> {
        stack_.push_back(FInl{});
        cur_ = s.arg;
        return std::nullopt;
      },
      [&](const tm::Inr& s) -> std::optional<Outcome> {
        stack_.push_back(FInr{});
        cur_ = s.arg;
        return std::nullopt;
      },
      [&](const tm::Case& c) -> std::optional<Outcome> {
        stack_.push_back(FCase{c.left_name, c.left_body, c.right_name, c.right_body, env_});
        cur_ = c.scrutinee;
        return std::nullopt;
      },
      [&](const tm::Unit&) -> std::optional<Outcome> {
        mode_return(v_unit());
        return std::nullopt;
      },
      [&](const tm::Pair& p) -> std::optional<Outcome> {
        stack_.push_back(FPairFirst{p.second, env_});
        cur_ = p.first;
        return std::nullopt;
      },
      [&](const tm::PairMatch& p) -> std::optional<Outcome> {
        stack_.push_back(FPairMatch{p.first_name, p.second_name, p.body, env_});
        cur_ = p.scrutinee;
        return std::nullopt;
      },
      [&](const tm::Lam& l) -> std::optional<Outcome> {
        mode_return(v_closure(env_, l.param, l.body));
        return std::nullopt;
      },
      [&](const tm::App& a) -> std::optional<Outcome> {
        stack_.push_back(FAppRand{a.arg, env_});
        cur_ = a.fn;
        return std::nullopt;
      },
      [&](const tm::Roll& r) -> std::optional<Outcome> {
        stack_.push_back(FRoll{});
        cur_ = r.arg;
        return std::nullopt;
      },
      [&](const tm::Unroll& u) -> std::optional<Outcome> {
        stack_.push_back(FUnroll{u.name, u.body, env_});
        cur_ = u.scrutinee;
        return std::nullopt;
      },
      [&](const tm::VoidMatch& v) -> std::optional<Outcome> {
        stack_.push_back(FVoidMatch{});
        cur_ = v.scrutinee;
        return std::nullopt;
      },
      [&](const tm::Basis& b) -> std::optional<Outcome> {
        mode_return(v_tan(Tangent::basis(b.index, backend_)));
        return std::nullopt;
      },
      [&](const tm::ZeroTan&) -> std::optional<Outcome> {
        mode_return(v_tan(Tangent::zero(backend_)));
        return std::nullopt;
      },
      [&](const tm::AddTan& a) -> std::optional<Outcome> {
        stack_.push_back(FAddTanL{a.right, env_});
        cur_ = a.left;
        return std::nullopt;
      },
      [&](const tm::ScaleTan& s) -> std::optional<Outcome> {
        stack_.push_back(FScaleTanL{s.scale, env_});
        cur_ = s.tan;
        return std::nullopt;
      },
      [&](const tm::ProjHandler& p) -> std::optional<Outcome> {
        stack_.push_back(FProj{p.index});
        cur_ = p.arg;
        return std::nullopt;
      },
    }, t->node);
  }

  std::optional<Outcome> finish_prim(const std::string& op, const std::vector<double>& args) {
    auto r = apply_prim(op, args);
    if (auto* err = std::get_if<DomainError>(&r)) return Outcome{*err};
    mode_return(v_real(std::get<double>(r)));
    return std::nullopt;
  }

  std::optional<Outcome> step_return(Frame& frame) {
    return std::visit(overloaded{
      [&](FLet& f) -> std::optional<Outcome> {
        mode_eval(f.body, env_extend(f.env, f.name, ret_));
        return std::nullopt;
      },
      [&](FAppRand& f) -> std::optional<Outcome> {
        stack_.push_back(FAppCall{ret_});
        mode_eval(f.arg, f.env);
        return std::nullopt;
      },
      [&](FAppCall& f) -> std::optional<Outcome> {
        const auto* cl = std::get_if<val::Closure>(&f.fn->node);
        if (!cl) throw std::logic_error("eval: application of a non-closure");
        mode_eval(cl->body, env_extend(cl->env, cl->param, ret_));
        return std::nullopt;
      },
      [&](FPrim& f) -> std::optional<Outcome> {
        const auto* r = std::get_if<val::Real>(&ret_->node);
        if (!r) throw std::logic_error("eval: op argument is not a real");
        f.done.push_back(r->v);
        if (f.done.size() < f.args.size()) {
          auto next = f.args[f.done.size()];
          auto env = f.env;
          stack_.push_back(std::move(f));
          mode_eval(std::move(next), std::move(env));
          return std::nullopt;
        }
        return finish_prim(f.op, f.done);
      },
      [&](FSign&) -> std::optional<Outcome> {
        const auto* r = std::get_if<val::Real>(&ret_->node);
        if (!r) throw std::logic_error("eval: sign argument is not a real");
        auto s = sign_sem(r->v);
        if (auto* err = std::get_if<DomainError>(&s)) return Outcome{*err};
        if (hooks_.sign_trace)
          hooks_.sign_trace->push_back(r->v > 0.0 ? 1 : -1);
        mode_return(std::get<ValueRef>(s));
        return std::nullopt;
      },
      [&](FInl&) -> std::optional<Outcome> {
        mode_return(v_inl(ret_));
        return std::nullopt;
      },
      [&](FInr&) -> std::optional<Outcome> {
        mode_return(v_inr(ret_));
        return std::nullopt;
      },
      [&](FPairFirst& f) -> std::optional<Outcome> {
        stack_.push_back(FPairSecond{ret_});
        mode_eval(f.second, f.env);
        return std::nullopt;
      },
      [&](FPairSecond& f) -> std::optional<Outcome> {
        mode_return(v_pair(f.first, ret_));
        return std::nullopt;
      },
      [&](FCase& f) -> std::optional<Outcome> {
        if (const auto* l = std::get_if<val::Inl>(&ret_->node)) {
          mode_eval(f.lb, env_extend(f.env, f.ln, l->v));
          return std::nullopt;
        }
        if (const auto* r = std::get_if<val::Inr>(&ret_->node)) {
          mode_eval(f.rb, env_extend(f.env, f.rn, r->v));
          return std::nullopt;
        }
        throw std::logic_error("eval: case scrutinee is not an injection");
      },
      [&](FPairMatch& f) -> std::optional<Outcome> {
        const auto* p = std::get_if<val::Pair>(&ret_->node);
        if (!p) throw std::logic_error("eval: pair match scrutinee is not a pair");
        mode_eval(f.body, env_extend(env_extend(f.env, f.n1, p->first), f.n2, p->second));
        return std::nullopt;
      },
      [&](FRoll&) -> std::optional<Outcome> {
        mode_return(v_roll(ret_));
        return std::nullopt;
      },
      [&](FUnroll& f) -> std::optional<Outcome> {
        const auto* r = std::get_if<val::Roll>(&ret_->node);
        if (!r) throw std::logic_error("eval: roll match scrutinee is not rolled");
        mode_eval(f.body, env_extend(f.env, f.name, r->v));
        return std::nullopt;
      },
      [&](FVoidMatch&) -> std::optional<Outcome> {
        throw std::logic_error("eval: a void scrutinee produced a value");
      },
      [&](FAddTanL& f) -> std::optional<Outcome> {
        stack_.push_back(FAddTanR{ret_});
        mode_eval(f.right, f.env);
        return std::nullopt;
      },
      [&](FAddTanR& f) -> std::optional<Outcome> {
        const auto* a = std::get_if<val::Tan>(&f.left->node);
        const auto* b = std::get_if<val::Tan>(&ret_->node);
        if (!a || !b) throw std::logic_error("eval: tangent addition on non-tangents");
        auto sum = tan_add(a->t, b->t);
        if (!sum.is_finite()) return Outcome{DomainError{"+.", {}}};
        mode_return(v_tan(std::move(sum)));
        return std::nullopt;
      },
      [&](FScaleTanL& f) -> std::optional<Outcome> {
        stack_.push_back(FScaleTanR{ret_});
        mode_eval(f.scale, f.env);
        return std::nullopt;
      },
      [&](FScaleTanR& f) -> std::optional<Outcome> {
        const auto* t = std::get_if<val::Tan>(&f.tan->node);
        const auto* s = std::get_if<val::Real>(&ret_->node);
        if (!t || !s) throw std::logic_error("eval: tangent scaling on wrong value kinds");
        auto scaled = tan_scale(t->t, s->v);
        if (!scaled.is_finite()) return Outcome{DomainError{"*.", {s->v}}};
        mode_return(v_tan(std::move(scaled)));
        return std::nullopt;
      },
      [&](FProj& f) -> std::optional<Outcome> {
        const auto* t = std::get_if<val::Tan>(&ret_->node);
        if (!t) throw std::logic_error("eval: projection handler on a non-tangent");
        auto coords = t->t.project(f.index);
        ValueRef out = v_real(coords[0]);
        for (size_t i = 1; i < coords.size(); ++i) out = v_pair(out, v_real(coords[i]));
        mode_return(std::move(out));
        return std::nullopt;
      },
    }, frame);
  }
};

} // namespace

EvalResult eval(EnvRef env, const TermRef& t, Backend backend, long fuel, EvalHooks hooks) {
  return Machine(backend, fuel, hooks).run(std::move(env), t);
}

EvalResult apply_function(const ValueRef& fn, const ValueRef& arg, Backend backend, long fuel,
                          EvalHooks hooks) {
  return Machine(backend, fuel, hooks).run_apply(fn, arg);
}

namespace {

bool bits_equal(double a, double b) {
  return std::memcmp(&a, &b, sizeof a) == 0;
}

} // namespace

bool value_equal(const ValueRef& a, const ValueRef& b) {
  if (a->node.index() != b->node.index()) return false;
  return std::visit(overloaded{
    [&](const val::Real& ra) { return bits_equal(ra.v, std::get<val::Real>(b->node).v); },
    [&](const val::Tan& ta) { return ta.t == std::get<val::Tan>(b->node).t; },
    [&](const val::Unit&) { return true; },
    [&](const val::Inl& ia) { return value_equal(ia.v, std::get<val::Inl>(b->node).v); },
    [&](const val::Inr& ia) { return value_equal(ia.v, std::get<val::Inr>(b->node).v); },
    [&](const val::Pair& pa) {
      const auto& pb = std::get<val::Pair>(b->node);
      return value_equal(pa.first, pb.first) && value_equal(pa.second, pb.second);
    },
    [&](const val::Closure& ca) {
      const auto& cb = std::get<val::Closure>(b->node);
      auto la = m_lam(ca.param, ca.body);
      auto lb = m_lam(cb.param, cb.body);
      if (!alpha_eq(la, lb)) return false;
      for (const auto& name : free_vars(la)) {
        const auto* va = env_lookup(ca.env, name);
        const auto* vb = env_lookup(cb.env, name);
        if (!va || !vb || !value_equal(*va, *vb)) return false;
      }
      return true;
    },
    [&](const val::Roll& ra) { return value_equal(ra.v, std::get<val::Roll>(b->node).v); },
  }, a->node);
}

namespace {

std::string tangent_str(const Tangent& t) {
  if (t.backend() == Backend::k1) return "tan(" + fmt_double(t.scalar_value()) + ")";
  std::string out = "tan{";
  bool first = true;
  for (const auto& [idx, v] : t.entries()) {
    if (!first) out += ", ";
    first = false;
    out += std::to_string(idx) + ": " + fmt_double(v);
  }
  return out + "}";
}

} // namespace

std::string pretty_value(const ValueRef& v) {
  return std::visit(overloaded{
    [&](const val::Real& r) { return fmt_double(r.v); },
    [&](const val::Tan& t) { return tangent_str(t.t); },
    [&](const val::Unit&) { return std::string("()"); },
    [&](const val::Inl& i) { return "inl " + pretty_value(i.v); },
    [&](const val::Inr& i) { return "inr " + pretty_value(i.v); },
    [&](const val::Pair& p) {
      return "(" + pretty_value(p.first) + ", " + pretty_value(p.second) + ")";
    },
    [&](const val::Closure&) { return std::string("<fun>"); },
    [&](const val::Roll& r) { return "roll (" + pretty_value(r.v) + ")"; },
  }, v->node);
}

std::string describe(const Outcome& o) {
  if (o.converged()) return pretty_value(o.value());
  if (o.fuel_exhausted())
    return "fuel exhausted after " + std::to_string(std::get<FuelExhausted>(o.v).steps) + " steps";
  const auto& e = o.error();
  std::string out = "domain error: " + e.op + "(";
  for (size_t i = 0; i < e.args.size(); ++i) {
    if (i) out += ", ";
    out += fmt_double(e.args[i]);
  }
  return out + ")";
}

} // namespace dualfpc

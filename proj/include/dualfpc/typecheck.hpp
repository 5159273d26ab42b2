#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "dualfpc/ast.hpp"

namespace dualfpc {

enum class Lang { source, target };

// Kinding context (type variables) plus ordered term context.
struct Context {
  NameSet tyvars;
  std::vector<std::pair<std::string, TypeRef>> bindings;

  const TypeRef* lookup(const std::string& name) const {
    for (auto it = bindings.rbegin(); it != bindings.rend(); ++it)
      if (it->first == name) return &it->second;
    return nullptr;
  }
  Context extended(std::string name, TypeRef type) const {
    Context c = *this;
    c.bindings.emplace_back(std::move(name), std::move(type));
    return c;
  }
};

struct TypeError : std::runtime_error {
  TypeError(const std::string& msg, std::vector<std::string> path_in)
      : std::runtime_error(msg), path(std::move(path_in)) {}
  std::vector<std::string> path;  // outermost-first trail into the term

  std::string render() const;
};

// true iff every type variable is bound by an enclosing mu or listed in delta
bool kind_check(const NameSet& delta, const TypeRef& type);

// built from real, unit, void, sums, products and mu only
bool is_positive_type(const TypeRef& type);

// Synthesizes the type of t, or throws TypeError. Terms whose type is not
// determined by the rules alone (bare inl/inr, unannotated lambdas, void
// match) only typecheck in checking positions; use check() with the declared
// type for those.
TypeRef typecheck(const Context& ctx, const TermRef& t, Lang lang);

// Checks t against an expected type; throws TypeError on mismatch.
void check(const Context& ctx, const TermRef& t, const TypeRef& expected, Lang lang);

// real^1 = real, real^(i+1) = real^i * real
TypeRef real_power(int i);

} // namespace dualfpc

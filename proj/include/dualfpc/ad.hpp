#pragma once

#include "dualfpc/ast.hpp"
#include "dualfpc/typecheck.hpp"

namespace dualfpc {

// Dual-numbers transformation on types: real becomes real * tangent, type
// variables and mu binders pass through, everything else is homomorphic.
// Throws std::invalid_argument if the input mentions tangent (not a source type).
TypeRef ad_type(const TypeRef& type);

// Dual-numbers transformation on terms. Structural constructors map
// homomorphically; constants pair with a zero tangent; sign inspects the
// primal component; each n-ary primitive expands into the dual-number block
// that computes the value once and combines the argument tangents with the
// op's partial derivatives. Introduced variables are fresh for the whole
// term. Throws std::invalid_argument for unregistered op symbols or
// target-only constructors in the input.
TermRef ad_term(const TermRef& term);

// Pointwise ad_type over the term context.
Context ad_context(const Context& ctx);

} // namespace dualfpc

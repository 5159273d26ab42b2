#pragma once

#include <string>

#include "dualfpc/ast.hpp"

namespace dualfpc {

// Parseable, stable surface text for types and (core) terms.
std::string pretty(const TypeRef& type);
std::string pretty(const TermRef& term);

// Shortest decimal that reparses to exactly the same double; always carries
// a '.' or exponent so it lexes as a real literal.
std::string fmt_double(double v);

} // namespace dualfpc

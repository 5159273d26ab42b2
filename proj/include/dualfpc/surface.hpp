#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "dualfpc/ast.hpp"
#include "dualfpc/typecheck.hpp"

namespace dualfpc {

struct Definition {
  std::string name;
  TypeRef declared_type;
  TermRef term;
};

// An ordered list of top-level definitions; later ones may refer to earlier
// ones. `type name = ...` aliases are resolved during parsing and do not
// appear here.
struct SourceFile {
  std::vector<Definition> defs;

  const Definition* find(const std::string& name) const;
  // the definition named "main" when present, otherwise the last one
  const Definition* entry() const;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line_in, int col_in)
      : std::runtime_error(msg + " (line " + std::to_string(line_in) + ", column " +
                           std::to_string(col_in) + ")"),
        line(line_in), col(col_in) {}
  int line, col;
};

SourceFile parse_file(const std::string& text);
TermRef parse_term_text(const std::string& text);
TypeRef parse_type_text(const std::string& text);

// Typechecks every definition against its declared type, in order, each one
// seeing the earlier ones. Throws TypeError on the first failure.
void check_file(const SourceFile& file, Lang lang);

// The named definition's term with all earlier definitions bound around it
// by nested lets; closed when the file typechecks.
TermRef linked_term(const SourceFile& file, const std::string& def_name);

} // namespace dualfpc

#pragma once

#include "focl/ast.hpp"
#include "focl/relstore.hpp"

namespace focl {

// Parses the surface grammar:
//
//   formula := or_f
//   or_f    := and_f ('|' and_f)*
//   and_f   := unary ('&' unary)*
//   unary   := '!' unary | 'exists' var '.' unary | 'forall' var '.' unary
//            | '(' expr ')' | Name '(' args ')' | var '=' var
//            | 'true' | 'false' | dist
//   dist    := 'dist' ('<='|'>') INT '(' var ',' var ')'
//   term    := mul (('+'|'-') mul)*
//   mul     := factor ('*' factor)*
//   factor  := INT | count | '(' term ')'
//   count   := '#' '(' var,* ')' '.' '(' formula ')'
//
// Variables match [a-z][A-Za-z0-9_]*; relation and predicate names match
// [A-Z_][A-Za-z0-9_]*. A Name(...) parses as a numerical predicate when the
// name is registered, as a relation atom otherwise. '&', 'forall', '-',
// 'true', 'false' and 'dist' are sugar and desugar during parsing; 'dist'
// requires a signature to expand adjacency.
ExprPtr parse(std::string_view text,
              const NumericalPredicateRegistry& reg = builtin_registry(),
              const Signature* sig = nullptr);

}  // namespace focl

#pragma once

#include <random>

#include "focl/ast.hpp"
#include "focl/relstore.hpp"

namespace focl {

using Rng = std::mt19937_64;

// Degree-bounded synthetic graph: a union of `degree` random matchings over n
// vertices (degree bound exact, near-regular), stored as a symmetric binary
// relation E plus random unary colors C1..C<colors>.
Structure random_degree_bounded(Rng& rng, std::size_t n, unsigned degree,
                                unsigned colors = 2);

// Small random structure over a mixed signature (one binary, two unary, and
// optionally one ternary relation), for oracle-equivalence campaigns.
Structure random_structure(Rng& rng, std::size_t max_elems, bool with_ternary = false);

// Random FOC1 expression over the structure's signature: formulas or terms,
// size bounded, counting nested at most twice, numerical predicates obeying
// the one-free-variable rule.
ExprPtr random_expression(Rng& rng, const Signature& sig, std::size_t max_size,
                          bool want_term);

// Random assignment covering the expression's free variables.
std::map<std::string, Elem> random_assignment(Rng& rng, const Expr& e,
                                              const Structure& s);

}  // namespace focl

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "focl/cterm.hpp"
#include "focl/localform.hpp"
#include "focl/locality.hpp"

namespace focl {

// ---------------------------------------------------------------- basics

// C1 = the connected component of vertex 0; C2 = the rest (vertex indices
// sorted ascending). G is the disjoint union of the induced halves.
struct ComponentSplit {
    std::vector<unsigned> c1, c2;
    Graph g1, g2;
};
ComponentSplit component_split(const Graph& g);

// The tuple relation w =_N w': w_i in N implies w'_i = w_i. Not symmetric.
// N must be sorted.
bool tuple_eq_in_set(std::span<const Elem> w, std::span<const Elem> w2,
                     std::span<const Elem> n_sorted);

// ---------------------------------------------------------------- FV pairs

// One decomposition pair: alpha references only side-0 variables, beta only
// side-1 variables (both over the input's variable table).
struct FvPair {
    LocalFormula alpha;
    LocalFormula beta;
};

// Decomposes a separable formula across the given side partition: on every
// assignment whose cross-side distances exceed `sep`, phi holds iff exactly
// one pair fires (alpha on side 0 and beta on side 1). Pairs are built from
// complete sign assignments over the separated constituents, so they are
// mutually exclusive by construction; a side-1 part collapses to `true` when
// every completion of its alpha satisfies the formula.
std::vector<FvPair> fv_decompose(const LocalFormula& phi, const std::vector<int>& side_of,
                                 Dist sep);

// ------------------------------------------------ component-wise rewriting

struct DecomposeStats {
    i128 max_case2_constant = 0;
    u64 case2_evals = 0;
    u64 case3_zeros = 0;
    u64 case4_keeps = 0;
    u64 fv_pairs = 0;
    u64 correction_terms = 0;
    std::size_t max_term_size = 0;

    void note_size(std::size_t s) { max_term_size = std::max(max_term_size, s); }
};

// Rewrites u_G = #zs.(psi & delta_{G,threshold}) into a combination of
// connected-pattern counting terms and integers such that for all w' with
// w =_N w' (N the training neighborhood below), the rewritten term evaluated at
// (v_i, w') equals u_G at (v_i, w).
//
// `psi` ranges over xs ++ ys ++ zs; xvals are the training tuples projected
// to xs; yvals is the parameter tuple projected to ys.
CTerm decompose_component_term(const LocalFormula& psi, const std::vector<std::string>& xs,
                               const std::vector<std::string>& ys,
                               const std::vector<std::string>& zs, const Graph& g,
                               Dist threshold, Dist radius, const Access& acc,
                               const std::vector<std::vector<Elem>>& xvals,
                               const std::vector<Elem>& yvals, DecomposeStats& stats);

// ---------------------------------------------------------------- full rewriting

struct RewriteResult {
    CTerm t_prime;
    Dist radius = 1;               // the uniform r' used for the delta split
    std::vector<Elem> n_set;       // N_t = ball(v entries, (2r'+1)(l+q)), sorted
    // per top-level counting leaf: its delta-split pieces (for the sum identity)
    std::vector<std::pair<Graph, CTerm>> split_pieces;
    DecomposeStats stats;
};

// Full-term rewriting: each counting leaf is split over
// all component patterns on its positions and every piece is decomposed.
// `q` enters the radius of N_t only. Leaves must already be over the
// structure's signature; plain leaves (no delta) are split, delta leaves are
// decomposed directly.
RewriteResult rewrite_term(const CTerm& t, const Access& acc,
                           const std::vector<std::vector<Elem>>& xvals,
                           const std::vector<Elem>& yvals, unsigned l, unsigned q);

// Per-pattern rewrite tree and statistics as JSON, for debugging.
std::string rewrite_trace_json(const RewriteResult& r);

}  // namespace focl

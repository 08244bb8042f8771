#pragma once

#include <map>
#include <optional>

#include "focl/learner.hpp"

namespace focl {
// Brute-force reference implementations, deliberately written from the
// semantics alone and sharing no evaluation code with the optimized paths.
// Everything here is exponential-friendly desk-scale ground truth.
namespace oracle {

// Straight recursive FOC1 semantics over the whole universe.
bool naive_eval_formula(const Expr& e, const Structure& s,
                        const std::map<std::string, Elem>& assignment,
                        const NumericalPredicateRegistry& reg = builtin_registry());
i128 naive_eval_term(const Expr& e, const Structure& s,
                     const std::map<std::string, Elem>& assignment,
                     const NumericalPredicateRegistry& reg = builtin_registry());

// Counting-leaf value by plain enumeration of all tuples, with its own
// literal checks and BFS distances.
i128 naive_count_leaf(const CountingLeaf& leaf, const Structure& s,
                      std::span<const Elem> ax, std::span<const Elem> by);

// Counting-term value by the same route.
i128 naive_eval_cterm(const CTerm& t, const Structure& s,
                      const std::map<std::string, Elem>& ctx);

struct NaiveLearnOutcome {
    bool found = false;
    CTerm term;
    std::vector<Elem> params;
};

// Exhaustive search over the same candidate grammar, with parameters ranging
// over ALL of A^l and every value computed by naive enumeration.
NaiveLearnOutcome naive_learn(const TrainingSet& s, const IndexArtifact& ix);

}  // namespace oracle
}  // namespace focl

#pragma once

#include <iosfwd>
#include <optional>
#include <variant>

#include "focl/precompute.hpp"

namespace focl {

// ---------------------------------------------------------------- training sets

struct TrainingExample {
    std::vector<Elem> tuple;  // k elements
    i64 label = 0;
};

struct TrainingSet {
    std::vector<TrainingExample> examples;  // deduplicated

    // Throws FormatError on malformed input; a contradictory set (same tuple,
    // two labels) is not an error here, learn() rejects it.
    static TrainingSet from_jsonl(std::istream& in, const Structure& s, unsigned k);
    static TrainingSet from_file(const std::string& path, const Structure& s, unsigned k);

    // The conflicting tuple, if any two examples disagree.
    std::optional<std::vector<Elem>> contradiction() const;
};

// ---------------------------------------------------------------- candidate space

// T*: arithmetic combinations of pool integers and connected-pattern counting
// leaves over sigma'. Units are the non-constant building blocks: a leaf, a
// leaf times a ground leaf, or a ground leaf.
struct CandidateSpace {
    struct Unit {
        int leaf = -1;    // index into leaves, or -1
        int ground = -1;  // index into ground, or -1
    };

    std::vector<LeafPtr> leaves;
    std::vector<LeafPtr> ground;
    std::vector<Unit> units;
    std::vector<i64> coeff_pool;  // summand coefficients (no 0; includes 1)
    std::vector<i64> const_pool;  // bare integer summands
    unsigned max_summands = 2;
    u128 realized_terms = 0;   // |T*| under the caps
    bool int_pool_clamped = false;  // derived integer window exceeded int_pool_cap

    CTerm unit_term(std::size_t u) const;
};

// Deterministic enumeration over the expanded signature. The integer pool is
// I together with [-1, min((l*nu_d((2r'+1)q))^q, int_pool_cap)].
CandidateSpace candidate_terms(const Signature& sigma_prime, std::size_t sigma_size,
                               const HypothesisClassConfig& cfg, Dist r_prime,
                               u64 degree);
inline CandidateSpace candidate_terms(const IndexArtifact& ix) {
    return candidate_terms(ix.expanded.signature(), ix.sigma_size, ix.cfg, ix.r_prime,
                           ix.degree);
}

// ---------------------------------------------------------------- hypotheses

struct Hypothesis {
    CTerm term;
    std::vector<Elem> params;              // w' (l elements)
    std::vector<std::string> param_names;  // element ids, for serialization
    u64 index_hash = 0;
    std::string surface;  // display-only rendering

    std::string to_json(const IndexArtifact& ix) const;
    static Hypothesis from_json(const std::string& text, const IndexArtifact& ix);
};

struct Reject {
    enum class Reason { ContradictoryLabels, NoConsistentHypothesis };
    Reason reason = Reason::NoConsistentHypothesis;
    std::string message;
};

using LearnResult = std::variant<Hypothesis, Reject>;

// ---------------------------------------------------------------- learn phase

// Parameter search space: all l-tuples over N = ball of the training entries
// at radius (2r'+1)(l+q), in handle-lexicographic order. Built with neighbor
// queries only.
std::vector<std::vector<Elem>> parameter_candidates(const TrainingSet& s,
                                                    const IndexArtifact& ix,
                                                    AccessAudit& audit);

// Searches T* x N^l for the canonically first consistent hypothesis. Uses
// only membership/neighbor access to the expanded structure plus the lookup
// table; the audit must show no global scans afterwards (hard-checked).
// Candidate evaluation parallelizes over `workers` with ordered commit.
LearnResult learn(const TrainingSet& s, const IndexArtifact& ix, AccessAudit& audit,
                  unsigned workers = 1);

// Evaluates a stored hypothesis at a k-tuple, ground subterms served by the
// lookup table, everything else by neighborhood enumeration.
i128 evaluate_hypothesis(const Hypothesis& h, const IndexArtifact& ix,
                         std::span<const Elem> tuple, AccessAudit& audit);

}  // namespace focl

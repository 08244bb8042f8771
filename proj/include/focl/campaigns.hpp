#pragma once

#include <string>
#include <vector>

#include "focl/learner.hpp"
#include "focl/synth.hpp"

namespace focl {
// Randomized verification campaigns shared by `focl check`, `focl bench`, and
// the acceptance suite. All campaigns are deterministic in the seed.
namespace campaigns {

struct Outcome {
    u64 checked = 0;
    u64 mismatches = 0;
    double ms = 0;
    std::string detail;

    bool ok() const { return mismatches == 0; }
};

// evaluator vs oracle on random (expression, structure, assignment) triples
Outcome eval_equivalence(u64 seed, u64 trials, std::size_t max_elems,
                         std::size_t max_size);

// delta formulas vs BFS distances vs the component-partition reading
Outcome delta_correctness(u64 seed, unsigned structures, std::size_t max_elems);

// |ball(v,r)| <= nu_d(r) on random samples, plus exact special cases
Outcome nu_bound(u64 seed, u64 samples);

// full-term rewriting: t^A[v_i,w] = t'^A[v_i,w'] for every w' with w =_N w',
// plus the per-pattern sum identity, connectivity and constant-range
// certificates
Outcome decomposition_identity(u64 seed, unsigned terms);

struct PlantedOutcome {
    u64 runs = 0;
    u64 rejects = 0;                // fast learner rejected a planted target
    u64 soundness_violations = 0;   // returned hypothesis inconsistent under the oracle
    u64 verdict_disagreements = 0;  // naive_learn disagreed with the verdict
    u64 eval_mismatches = 0;        // evaluate_hypothesis vs labels
    u64 global_scans = 0;           // leaked scans across all learn/evaluate calls
    double ms = 0;

    bool ok() const {
        return rejects == 0 && soundness_violations == 0 && verdict_disagreements == 0 &&
               eval_mismatches == 0 && global_scans == 0;
    }
};

// 200 planted-target runs: plant, label through the oracle, learn, cross-check
PlantedOutcome planted_targets(u64 seed, unsigned runs);

struct BenchRow {
    std::size_t n = 0;
    unsigned d = 0;
    std::size_t s = 0;
    std::string phase;
    double wall_ms = 0;
    u64 membership = 0;
    u64 neighbors = 0;
    u64 global_scans = 0;
};

struct BenchOutcome {
    std::vector<BenchRow> rows;
    double learn_call_ratio = 0;     // max/min of learn-phase oracle calls
    double worst_precompute_ratio = 0;  // max wall ratio per doubling
    double total_ms = 0;

    bool ok() const { return learn_call_ratio < 1.5 && worst_precompute_ratio <= 2.5; }
};

BenchOutcome sublinearity_bench(u64 seed, const std::vector<std::size_t>& sizes,
                                unsigned degree, std::size_t examples,
                                unsigned workers);
std::string bench_csv(const BenchOutcome& b);

struct PolyOutcome {
    std::vector<std::pair<unsigned, double>> counts;  // (degree, |T*|)
    double max_slope = 0;
    double slope_threshold = 8.0;

    bool ok() const { return max_slope < slope_threshold; }
};

// realized |T*| versus degree, log-log slope check
PolyOutcome candidate_polynomiality(u64 seed, const std::vector<unsigned>& degrees);

struct FixtureOutcome {
    bool citations_values = false;   // frozen goldens 3 / 0
    bool citations_learned = false;  // pipeline run reproduces them
    bool cake_space = false;         // space contains the two-summand rewrite
    bool cake_learned = false;       // learner finds a consistent hypothesis
    u64 global_scans = 0;
    std::string detail;

    bool ok() const {
        return citations_values && citations_learned && cake_space && cake_learned &&
               global_scans == 0;
    }
};

FixtureOutcome example_fixtures();

// the two structures from the worked examples (also used by unit tests)
Structure citations_fixture();
Structure cake_fixture();

}  // namespace campaigns
}  // namespace focl

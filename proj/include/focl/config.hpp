#pragma once

#include <string>
#include <vector>

#include "focl/common.hpp"

namespace focl {

// Caps on candidate enumeration; together with the hypothesis-class numbers
// they pin the realized T* and keep the search finite.
struct CandidateCaps {
    unsigned max_count_vars = 2;   // counted variables per leaf (m')
    unsigned max_literals = 2;     // literals per leaf body (P)
    unsigned max_summands = 2;     // summands per candidate term
    unsigned max_atom_arity = 3;   // relation atoms admitted into bodies
    bool allow_ground_factors = true;  // products leaf * ground-leaf
    unsigned int_pool_cap = 3;     // clamp on the enumerated integer range
    unsigned max_graph_vertices = 12;

    bool operator==(const CandidateCaps&) const = default;
};

// The hypothesis class: k-tuples classified, l parameters, term size bound q,
// allowed integer set I, plus enumeration caps and optional localisation
// templates (surface-syntax formulas whose localisation extends the
// signature before candidates are drawn from it).
struct HypothesisClassConfig {
    unsigned k = 1;
    unsigned l = 0;
    unsigned q = 8;
    std::vector<i64> ints;
    CandidateCaps caps;
    std::vector<std::string> templates;
    Dist template_radius_cap = 3;
    unsigned template_quantifier_cap = 2;

    bool operator==(const HypothesisClassConfig&) const = default;

    void validate() const;
    std::string to_json() const;
    static HypothesisClassConfig from_json(const std::string& text);
    u64 hash() const;  // stable across runs; guards index/hypothesis reuse
};

// Run-level configuration shared by the CLI verbs.
struct RunConfig {
    HypothesisClassConfig hypothesis;
    u64 seed = 1;
    unsigned workers = 0;  // 0 = hardware default
    int verbosity = 0;
};

}  // namespace focl

#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "focl/config.hpp"
#include "focl/cterm.hpp"
#include "focl/relstore.hpp"

namespace focl {

struct TableEntry {
    i64 value = 0;
    unsigned m = 0;      // counted variables of the ground term
    Dist radius = 0;     // enumeration radius (2r'+1)*m used to fill it
};

struct IndexStats {
    u64 n = 0;
    u64 degree = 0;
    double localise_ms = 0;
    double table_ms = 0;
    u64 table_entries = 0;
    u64 table_iterations = 0;       // candidate tuples visited by the fill loop
    u64 table_iteration_bound = 0;  // n * nu(d, (2r'+1)m)^(m-1) style cap
    std::string to_json() const;
};

// The precomputation product: the sigma'-expansion (all template expansions
// merged, fresh symbols per template) plus the lookup table of ground
// connected-pattern counting terms, and the metadata the learn phase needs.
struct IndexArtifact {
    Structure expanded;          // sigma'-expansion of the ingested structure
    GaifmanIndex gaifman;        // additions have arity <= 1, so same graph
    std::size_t sigma_size = 0;  // prefix of the signature that is original
    HypothesisClassConfig cfg;
    u64 cfg_hash = 0;
    Dist r_prime = 1;
    u64 degree = 0;
    std::optional<Elem> anchor;  // deterministic parameter fallback
    std::map<std::string, TableEntry> table;  // canonical leaf print -> entry
    std::vector<std::string> localisation_reports;
    IndexStats stats;

    Dist threshold() const { return Dist(2 * r_prime + 1); }
};

IndexArtifact precompute(const Structure& s, const HypothesisClassConfig& cfg,
                         unsigned workers = 1,
                         const NumericalPredicateRegistry& reg = builtin_registry());

void save_index(const IndexArtifact& ix, const std::string& path);
IndexArtifact load_index(const std::string& path,
                         const HypothesisClassConfig* expect = nullptr);

}  // namespace focl

#pragma once

#include <optional>
#include <string>
#include <vector>

#include "focl/ast.hpp"
#include "focl/localform.hpp"
#include "focl/relstore.hpp"

namespace focl {

// nu_d(r) = 1 + d * sum_{0 <= i < r} (d-1)^i, the ball-size bound at degree d.
// Saturates at kNuCap instead of overflowing.
inline constexpr u128 kNuCap = u128(1) << 100;
u128 nu(u64 d, u64 r);
// min(nu(d, r), cap) as a u64.
u64 nu_clamped(u64 d, u64 r, u64 cap = UINT64_MAX);

// ---------------------------------------------------------------- small graphs

// Undirected simple graph on vertex set [0, n) with an edge bitset;
// n is capped at kMaxGraphVertices.
inline constexpr unsigned kMaxGraphVertices = 12;

class Graph {
public:
    Graph() = default;
    explicit Graph(unsigned n);

    unsigned size() const { return n_; }
    bool edge(unsigned i, unsigned j) const;
    void set_edge(unsigned i, unsigned j, bool on = true);
    unsigned num_pairs() const { return n_ < 2 ? 0 : n_ * (n_ - 1) / 2; }

    u128 bits() const { return bits_; }
    static Graph from_bits(unsigned n, u128 bits);

    bool connected() const;               // true for n <= 1
    std::vector<int> component_ids() const;
    Graph induced(const std::vector<unsigned>& keep) const;

    std::string print() const;
    bool operator==(const Graph& o) const { return n_ == o.n_ && bits_ == o.bits_; }

    // All graphs on n vertices, by increasing edge bitset.
    static std::vector<Graph> all(unsigned n);
    // All connected graphs on n vertices.
    static std::vector<Graph> all_connected(unsigned n);

private:
    unsigned n_ = 0;
    u128 bits_ = 0;
    static unsigned pair_index(unsigned i, unsigned j);
};

// A component pattern: a graph over tuple positions plus the distance
// threshold used in the delta formula.
struct ComponentPattern {
    Graph g;
    Dist threshold = 0;  // the "r" of delta_{G,r}
};

// ---------------------------------------------------------------- dist / delta

// FO formula over sig that holds on (x, y) iff dist(x, y) <= r.
ExprPtr dist_formula(const Signature& sig, Dist r, const std::string& x = "x",
                     const std::string& y = "y");

// delta_{G,r}(vars): conjunction of dist <= r for edges and dist > r for
// non-edges, over the given variable names (one per vertex).
ExprPtr delta_formula(const Signature& sig, const ComponentPattern& p,
                      const std::vector<std::string>& vars);

// Direct check of the same condition via BFS distances.
bool delta_holds(const GaifmanIndex& g, const ComponentPattern& p,
                 std::span<const Elem> tuple);

// ---------------------------------------------------------------- neighborhood types

// Canonical certificate of (structure, distinguished center): two inputs get
// the same key iff they are isomorphic by a center-preserving map.
std::string canonical_key(const Structure& s, Elem center);

// Per-element isomorphism types of r-neighborhoods.
struct TypeIndex {
    Dist radius = 0;
    std::vector<int> type_of;          // per element
    std::vector<Structure> rep;        // per type: representative neighborhood
    std::vector<Elem> rep_center;      // center handle within rep
    std::vector<u64> count;            // per type: how many elements realize it

    int num_types() const { return int(rep.size()); }
};

TypeIndex compute_types(const Structure& s, const GaifmanIndex& g, Dist radius,
                        unsigned workers = 1);

// ---------------------------------------------------------------- localise

struct LocaliseMode {
    enum class Kind { AlreadyLocal, Hanf };
    Kind kind = Kind::Hanf;
    Dist declared_radius = 1;   // AlreadyLocal: the radius to certify
    Dist radius_cap = 3;        // Hanf: max type radius
    unsigned quantifier_cap = 2;
    unsigned samples = 1000;    // AlreadyLocal: certification sample budget
    u64 seed = 1;

    static LocaliseMode already_local(Dist r, unsigned samples = 1000, u64 seed = 1) {
        LocaliseMode m;
        m.kind = Kind::AlreadyLocal;
        m.declared_radius = r;
        m.samples = samples;
        m.seed = seed;
        return m;
    }
    static LocaliseMode hanf(Dist radius_cap = 3, unsigned quantifier_cap = 2) {
        LocaliseMode m;
        m.kind = Kind::Hanf;
        m.radius_cap = radius_cap;
        m.quantifier_cap = quantifier_cap;
        return m;
    }
};

// A named unary or 0-ary relation added by localisation.
struct AddedSymbol {
    RelSym sym;
    Relation content;
};

struct LocalisationOutput {
    Signature sigma_prime;          // input signature + added symbols
    Structure expanded;             // sigma'-expansion of the input structure
    LocalFormula formula;           // r'-local rewriting over sigma_prime ids
    Dist radius = 0;                // certified r'
    std::vector<AddedSymbol> added; // what was appended, in id order
    std::string report_json;        // types realized, predicates added, radius
};

// Rewrites phi into a Boolean combination of local formulas and 0-ary atoms
// over an expanded signature, per the selected mode. `symbol_prefix` namespaces
// the added symbols (they are spelled _<prefix>T<i> / _<prefix>F<i>).
LocalisationOutput localise(const Expr& phi, const Structure& s, const GaifmanIndex& g,
                            const LocaliseMode& mode,
                            const NumericalPredicateRegistry& reg = builtin_registry(),
                            const std::string& symbol_prefix = "L0",
                            unsigned workers = 1);

}  // namespace focl

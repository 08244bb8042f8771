#pragma once

#include <atomic>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "focl/common.hpp"

namespace focl {

using Tuple = std::vector<Elem>;

struct TupleHash {
    std::size_t operator()(const Tuple& t) const {
        u64 h = 14695981039346656037ull;
        for (Elem e : t) h = fnv1a_u64(e, h);
        return std::size_t(h);
    }
};

using TupleSet = std::unordered_set<Tuple, TupleHash>;

// ---------------------------------------------------------------- Signature

struct RelSym {
    std::string name;
    unsigned arity = 0;

    bool operator==(const RelSym&) const = default;
};

// A finite set of relation symbols with fixed arities. Names are unique;
// arity 0 is allowed (such a relation denotes false/true).
class Signature {
public:
    Signature() = default;
    explicit Signature(std::vector<RelSym> symbols);

    int add(const std::string& name, unsigned arity);  // returns symbol id
    int id_of(const std::string& name) const;          // -1 if absent
    int require(const std::string& name) const;        // throws if absent

    const RelSym& symbol(int id) const { return symbols_.at(std::size_t(id)); }
    std::size_t size() const { return symbols_.size(); }
    const std::vector<RelSym>& symbols() const { return symbols_; }

    bool operator==(const Signature& o) const { return symbols_ == o.symbols_; }

private:
    std::vector<RelSym> symbols_;
    std::unordered_map<std::string, int> by_name_;
};

// ---------------------------------------------------------------- Structure

// One relation instance: tuples stored both in a hash set (constant-time
// membership) and as a vector (enumeration during precompute).
struct Relation {
    unsigned arity = 0;
    std::vector<Tuple> tuples;
    TupleSet set;

    bool contains(const Tuple& t) const { return set.count(t) != 0; }
    // A 0-ary relation is a truth value: {()} = true, {} = false.
    bool truth() const { return !tuples.empty(); }
};

class Structure;

// Builds a Structure incrementally; element names are interned to dense
// handles in order of first appearance.
class StructureBuilder {
public:
    explicit StructureBuilder(Signature sig) : sig_(std::move(sig)) {}

    Elem add_element(const std::string& name);
    std::optional<Elem> find_element(const std::string& name) const;
    void add_tuple(int rel, const Tuple& t);
    void add_tuple(const std::string& rel, const std::vector<std::string>& names);
    void set_zero_ary(int rel, bool value);

    const Signature& signature() const { return sig_; }
    std::size_t universe_size() const { return names_.size(); }

    Structure finish();

private:
    Signature sig_;
    std::vector<std::string> names_;
    std::unordered_map<std::string, Elem> handle_of_;
    std::vector<TupleSet> rel_sets_ = std::vector<TupleSet>(sig_.size());
};

// Immutable finite relational structure over dense element handles.
class Structure {
public:
    Structure() = default;

    const Signature& signature() const { return sig_; }
    std::size_t universe_size() const { return names_.size(); }
    const std::vector<std::string>& element_names() const { return names_; }
    const std::string& name_of(Elem e) const { return names_.at(e); }
    std::optional<Elem> handle_of(const std::string& name) const;
    Elem require_element(const std::string& name) const;

    const Relation& relation(int rel) const { return rels_.at(std::size_t(rel)); }
    const std::vector<Relation>& relations() const { return rels_; }

    // Tuples of `rel` whose position `pos` holds element `e`.
    std::span<const std::uint32_t> tuples_at(int rel, unsigned pos, Elem e) const;

    bool operator==(const Structure& o) const;

    // Expansion: same universe, old relations shared, new symbols appended.
    // `added` maps new symbol ids (offset by the old signature size) to
    // relation contents.
    Structure expand(const Signature& bigger, std::vector<Relation> added) const;

    // Induced substructure on `keep` (handles into this structure's universe).
    // Element names are preserved; handles are re-interned.
    Structure induced(const std::vector<Elem>& keep) const;

private:
    friend class StructureBuilder;

    Signature sig_;
    std::vector<std::string> names_;
    std::unordered_map<std::string, Elem> handle_of_;
    std::vector<Relation> rels_;
    // per relation, per position: postings of tuple indices keyed by element
    std::vector<std::vector<std::unordered_map<Elem, std::vector<std::uint32_t>>>> postings_;

    void build_postings();
};

// ---------------------------------------------------------------- Gaifman index

// Adjacency of the Gaifman graph: {v,w} is an edge iff v != w and some
// relation tuple contains both. Neighbor lists are sorted by handle.
class GaifmanIndex {
public:
    GaifmanIndex() = default;

    std::span<const Elem> neighbors(Elem v) const;
    std::size_t degree() const { return degree_; }
    std::size_t universe_size() const { return adj_.size(); }

    bool adjacent(Elem v, Elem w) const;

private:
    friend GaifmanIndex build_gaifman(const Structure& s);
    std::vector<std::vector<Elem>> adj_;
    std::size_t degree_ = 0;
};

GaifmanIndex build_gaifman(const Structure& s);

// BFS distance between an element (or min over a tuple's entries) and b.
// Returns kInfDist when disconnected. `cap` stops the search early.
Dist distance(const GaifmanIndex& g, std::span<const Elem> from, Elem b,
              Dist cap = kInfDist);
Dist distance(const GaifmanIndex& g, Elem a, Elem b, Dist cap = kInfDist);

// Sorted r-ball of a tuple: { b : dist(tuple, b) <= r }. Empty tuple -> {}.
std::vector<Elem> ball(const GaifmanIndex& g, std::span<const Elem> tuple, Dist r);

// Induced substructure of s on the r-ball of the tuple.
Structure induced_neighborhood(const Structure& s, const GaifmanIndex& g,
                               std::span<const Elem> tuple, Dist r);

// ---------------------------------------------------------------- access audit

// Counts oracle traffic. The learn phase must keep global_scans at zero;
// membership/neighbors are the only permitted operations there.
class AccessAudit {
public:
    struct Snapshot {
        u64 membership_queries = 0;
        u64 neighbor_queries = 0;
        u64 global_scans = 0;

        u64 local_total() const { return membership_queries + neighbor_queries; }
        bool operator==(const Snapshot&) const = default;
    };

    void count_membership() { membership_.fetch_add(1, std::memory_order_relaxed); }
    void count_neighbors() { neighbors_.fetch_add(1, std::memory_order_relaxed); }
    void count_global_scan() { scans_.fetch_add(1, std::memory_order_relaxed); }

    Snapshot snapshot() const {
        return {membership_.load(std::memory_order_relaxed),
                neighbors_.load(std::memory_order_relaxed),
                scans_.load(std::memory_order_relaxed)};
    }
    void reset() { membership_ = 0; neighbors_ = 0; scans_ = 0; }

private:
    std::atomic<u64> membership_{0};
    std::atomic<u64> neighbors_{0};
    std::atomic<u64> scans_{0};
};

// ---------------------------------------------------------------- local oracle

// The access model of the learn phase: relation membership in constant time,
// neighbor lists in time linear in their length. Every call is audited.
class LocalOracle {
public:
    LocalOracle(const Structure& s, const GaifmanIndex& g, AccessAudit& audit)
        : s_(&s), g_(&g), audit_(&audit) {}

    bool membership(int rel, const Tuple& t) const {
        audit_->count_membership();
        return s_->relation(rel).contains(t);
    }

    std::span<const Elem> neighbors(Elem v) const {
        if (v >= g_->universe_size()) throw Error("unknown element handle");
        audit_->count_neighbors();
        return g_->neighbors(v);
    }

    // Any API that touches the whole universe must pass through here.
    void universe_scan() const { audit_->count_global_scan(); }

    const Structure& structure() const { return *s_; }
    const GaifmanIndex& gaifman() const { return *g_; }
    AccessAudit& audit() const { return *audit_; }

    // Distance capped at `cap`, via neighbor queries only.
    Dist local_distance(Elem a, Elem b, Dist cap) const;
    // Sorted r-ball via neighbor queries only.
    std::vector<Elem> local_ball(std::span<const Elem> tuple, Dist r) const;
    // Induced neighborhood materialized with membership probes over the
    // ball (never by scanning relation tables).
    Structure local_neighborhood(std::span<const Elem> tuple, Dist r) const;

private:
    const Structure* s_;
    const GaifmanIndex* g_;
    AccessAudit* audit_;
};

// ---------------------------------------------------------------- ingest / persist

// JSON-lines database format:
//   {"signature":[{"name":"Author","arity":2}, ...]}
//   {"element":"a1"}                 (optional; declares isolated elements)
//   {"rel":"Author","tuple":["a1","p1"]}
// Names starting with '_' are reserved for localiser symbols; only the index
// loader may read them back.
Structure ingest(std::istream& in, bool allow_reserved = false);
Structure ingest_file(const std::string& path);
void persist(const Structure& s, std::ostream& out);
void persist_file(const Structure& s, const std::string& path);

}  // namespace focl

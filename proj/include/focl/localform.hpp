#pragma once

#include <memory>
#include <string>
#include <vector>

#include "focl/ast.hpp"
#include "focl/relstore.hpp"

namespace focl {

// ---------------------------------------------------------------- access

// The two operations of the local-access model, optionally audited. All
// structured evaluation below goes through this; nothing here can iterate
// the universe.
struct Access {
    const Structure* s = nullptr;
    const GaifmanIndex* g = nullptr;
    AccessAudit* audit = nullptr;

    bool membership(int rel, const Tuple& t) const {
        if (audit) audit->count_membership();
        return s->relation(rel).contains(t);
    }
    std::span<const Elem> neighbors(Elem v) const {
        if (audit) audit->count_neighbors();
        return g->neighbors(v);
    }

    Dist bounded_distance(Elem a, Elem b, Dist cap) const;
    std::vector<Elem> bounded_ball(std::span<const Elem> tuple, Dist r) const;
};

// ---------------------------------------------------------------- skeleton

// Boolean shape over constituent leaves, with constant folding.
struct Skeleton {
    enum class Op { True, False, Leaf, Not, And, Or };
    Op op = Op::True;
    int leaf = -1;
    std::vector<Skeleton> kids;

    static Skeleton truth() { return {}; }
    static Skeleton falsity() { return {Op::False, -1, {}}; }
    static Skeleton leaf_of(int idx) { return {Op::Leaf, idx, {}}; }
    static Skeleton negate(Skeleton a);
    static Skeleton conj(Skeleton a, Skeleton b);
    static Skeleton disj(Skeleton a, Skeleton b);
    static Skeleton conj_all(std::vector<Skeleton> xs);
    static Skeleton disj_all(std::vector<Skeleton> xs);

    bool is_true() const { return op == Op::True; }
    bool is_false() const { return op == Op::False; }

    template <class LeafFn>
    bool eval(const LeafFn& leaf_val) const {
        switch (op) {
            case Op::True: return true;
            case Op::False: return false;
            case Op::Leaf: return leaf_val(leaf);
            case Op::Not: return !kids[0].eval(leaf_val);
            case Op::And:
                for (const auto& k : kids)
                    if (!k.eval(leaf_val)) return false;
                return true;
            case Op::Or:
                for (const auto& k : kids)
                    if (k.eval(leaf_val)) return true;
                return false;
        }
        return false;
    }

    void collect_leaves(std::vector<int>& out) const;
    Skeleton substitute(const std::vector<int>& truth) const;  // -1 keep, 0 false, 1 true
    Skeleton remap_leaves(const std::vector<int>& new_idx) const;
};

// ---------------------------------------------------------------- constituents

// A relation or equality literal over variable indices.
struct Lit {
    bool positive = true;
    bool is_eq = false;
    int rel = -1;
    std::vector<int> vars;
};

struct LocalFormula;

// The atomic pieces of the structured fragment. Each kind is local around
// its variables with a radius derivable from its shape.
struct Constituent {
    enum class Kind { Lit, Dist, NearCount, Global, ExistsNear, Opaque };
    Kind kind = Kind::Lit;

    Lit lit;  // Kind::Lit

    // Kind::Dist: dist(var a, var b) <= bound
    int a = -1, b = -1;
    Dist bound = 0;

    // Kind::NearCount: |{v : dist(v, anchor vars) <= bound,
    //                       v in some type_sym relation}| >= count
    std::vector<int> anchors;
    std::vector<int> type_syms;
    i64 count = 1;

    // Kind::Global: 0-ary symbol
    int sym0 = -1;

    // Kind::ExistsNear: exists z with dist(z, anchors) <= bound and inner;
    // `quant_var` is z's index in the shared variable table.
    int quant_var = -1;
    std::shared_ptr<const LocalFormula> inner;

    // Kind::Opaque: arbitrary formula with a declared locality radius
    ExprPtr expr;
    Dist declared_radius = 0;

    Dist radius() const;
    std::vector<int> free_vars() const;  // sorted variable indices
};

// ---------------------------------------------------------------- formula

// A Boolean combination of local constituents over a shared variable table.
// The whole formula is `radius()`-local around its free variables.
struct LocalFormula {
    std::vector<std::string> var_names;
    std::vector<Constituent> parts;
    Skeleton skel;

    Dist radius() const;
    std::vector<int> free_vars() const;  // vars used by reachable constituents
    bool uses_var(int v) const;

    int add_var(const std::string& name);
    int add_part(Constituent c);  // returns leaf index

    static LocalFormula lit_conj(std::vector<std::string> vars, std::vector<Lit> lits);

    // Evaluate with assignment[i] = element for var i (kNoElem = unassigned;
    // every reachable var must be assigned).
    bool eval(const Access& acc, std::span<const Elem> assignment) const;

    // AST rendering over `sig`, for cross-checks against the naive evaluator.
    ExprPtr to_ast(const Signature& sig) const;

    // Canonical compact rendering (used for table keys and dedup).
    std::string print() const;

    // Rewrite relation symbol ids >= `base` by adding `offset` (expansion
    // merges; type_syms and 0-ary ids included).
    void shift_symbols(int base, int offset);

    LocalFormula negated() const;
    static LocalFormula conj2(const LocalFormula& a, const LocalFormula& b);
};

// Rewrites `f` assuming every cross-side pair of variables has distance
// > sep, where side_of[v] in {0,1} (side of each variable). The result's
// constituents each touch one side only. Pre: sep >= 2*f.radius() + 1.
LocalFormula separate(const LocalFormula& f, const std::vector<int>& side_of, Dist sep);

bool constituent_side_pure(const Constituent& c, const std::vector<int>& side_of,
                           int* side_out);

}  // namespace focl

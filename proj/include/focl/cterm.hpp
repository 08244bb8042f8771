#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "focl/localform.hpp"
#include "focl/locality.hpp"

namespace focl {

// A counting leaf #zs.(psi [ & delta_{H,threshold} ]) over variable blocks
// xs (instance variables), ys (parameters), zs (counted). psi's variable
// table is exactly xs ++ ys ++ zs, in that order.
struct CountingLeaf {
    std::vector<std::string> xs, ys, zs;
    LocalFormula psi;
    bool has_delta = false;
    Graph h;            // on xs+ys+zs positions when has_delta
    Dist threshold = 0; // the 2r+1 of the delta conjunct
    Dist radius = 1;    // certified locality radius of psi

    unsigned kx() const { return unsigned(xs.size()); }
    unsigned ky() const { return unsigned(ys.size()); }
    unsigned kz() const { return unsigned(zs.size()); }
    bool ground() const { return xs.empty() && ys.empty(); }

    // psi & delta at a full assignment (xs ++ ys ++ zs order).
    bool holds_at(const Access& acc, std::span<const Elem> all_vals) const;

    // Count over all of A^kz; for tests and the naive paths.
    i128 count_global(const Access& acc, std::span<const Elem> ax,
                      std::span<const Elem> by) const;

    // Count by enumerating zs over the (threshold*kz)-ball of the assigned
    // entries; exact when the delta pattern is connected (each counted
    // position chains to a free position). Requires kx+ky >= 1 and has_delta.
    i128 count_local(const Access& acc, std::span<const Elem> ax,
                     std::span<const Elem> by) const;

    std::string print() const;  // canonical key
    std::string pretty(const Signature& sig) const;  // surface-style rendering
    ExprPtr to_ast(const Signature& sig) const;
    std::size_t size_tokens() const;
};

using LeafPtr = std::shared_ptr<const CountingLeaf>;

// Arithmetic combination of integers and counting leaves.
struct CTerm {
    enum class Kind { Const, Leaf, Add, Mul };
    Kind kind = Kind::Const;
    i128 value = 0;
    LeafPtr leaf;
    std::vector<CTerm> kids;

    static CTerm constant(i128 v);
    static CTerm of_leaf(LeafPtr l);
    static CTerm sum(std::vector<CTerm> xs);      // empty -> 0
    static CTerm product(std::vector<CTerm> xs);  // empty -> 1
    static CTerm scaled(i128 c, CTerm t);         // c * t

    std::string print() const;
    std::string pretty(const Signature& sig) const;
    ExprPtr to_ast(const Signature& sig) const;
    std::size_t size_tokens() const;
    void collect_leaves(std::vector<LeafPtr>& out) const;

    using LeafEval = std::function<i128(const CountingLeaf&)>;
    i128 eval(const LeafEval& leaf_eval) const;

    // Evaluate with every leaf counted globally; test-side reference route.
    i128 eval_global(const Access& acc, const std::map<std::string, Elem>& ctx) const;
};

// Leaf evaluation helper: pull the leaf's x/y values from a name context.
std::pair<std::vector<Elem>, std::vector<Elem>> leaf_args(
    const CountingLeaf& leaf, const std::map<std::string, Elem>& ctx);

}  // namespace focl

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "focl/common.hpp"

namespace focl {

// FOC1 expressions. Formulas: Equality, Atom, Not, Or, Exists, NumPred.
// Counting terms: Count, IntConst, Add, Mul. Conjunction, universal
// quantification and subtraction are surface sugar and never appear as nodes.
enum class NodeKind {
    Equality,
    Atom,
    Not,
    Or,
    Exists,
    NumPred,
    Count,
    IntConst,
    Add,
    Mul,
};

class Expr;
using ExprPtr = std::shared_ptr<const Expr>;

class Expr {
public:
    NodeKind kind;

    // Equality: vars = {x1, x2}. Atom: rel_name + vars. Exists: vars = {x},
    // child = body. Count: vars = bound tuple (pairwise distinct, may be
    // empty), child = body. NumPred: rel_name = predicate name, children =
    // argument terms.
    std::string rel_name;
    std::vector<std::string> vars;
    std::vector<ExprPtr> children;
    i64 value = 0;  // IntConst

    const std::vector<std::string>& free_vars() const { return free_; }
    std::size_t size() const { return size_; }
    bool is_formula() const;
    bool is_term() const { return !is_formula(); }

    static ExprPtr equality(std::string x1, std::string x2);
    static ExprPtr atom(std::string rel, std::vector<std::string> vars);
    static ExprPtr negation(ExprPtr f);
    static ExprPtr disjunction(ExprPtr f, ExprPtr g);
    static ExprPtr conjunction(ExprPtr f, ExprPtr g);             // sugar
    static ExprPtr conjunction(const std::vector<ExprPtr>& fs);   // sugar, empty -> 0=0-free "true"
    static ExprPtr exists(std::string var, ExprPtr body);
    static ExprPtr forall(std::string var, ExprPtr body);         // sugar
    static ExprPtr num_pred(std::string name, std::vector<ExprPtr> args);
    static ExprPtr count(std::vector<std::string> bound, ExprPtr body);
    static ExprPtr int_const(i64 v);
    static ExprPtr add(ExprPtr a, ExprPtr b);
    static ExprPtr mul(ExprPtr a, ExprPtr b);
    static ExprPtr sub(ExprPtr a, ExprPtr b);                     // sugar

    // A formula with no free variables that always holds: the sugar used
    // for empty conjunctions. Rendered as "true" by the printer.
    static ExprPtr truth();
    static ExprPtr falsity();
    static bool is_truth(const Expr& e);
    static bool is_falsity(const Expr& e);

private:
    std::vector<std::string> free_;
    std::size_t size_ = 0;

    static ExprPtr make(Expr e);
    void finalize();
};

// Canonical rendering in the surface grammar; parse(print(e)) == e.
std::string print(const Expr& e);
inline std::string print(const ExprPtr& e) { return print(*e); }

// ---------------------------------------------------------------- registry

// Decision procedures over integer tuples. Built-ins: Peq, Pleq, Pprime,
// Pdivides. Each procedure must be total and deterministic.
class NumericalPredicateRegistry {
public:
    using Decision = bool (*)(std::span<const i128>);
    struct Entry {
        unsigned arity;
        std::function<bool(std::span<const i128>)> decide;
    };

    void register_pred(const std::string& name, unsigned arity,
                       std::function<bool(std::span<const i128>)> decide);
    bool contains(const std::string& name) const { return entries_.count(name) != 0; }
    const Entry& entry(const std::string& name) const;

private:
    std::map<std::string, Entry> entries_;
};

// Registry preloaded with Peq(2), Pleq(2), Pprime(1), Pdivides(2).
const NumericalPredicateRegistry& builtin_registry();

}  // namespace focl

#pragma once

#include <map>
#include <string>

#include "focl/ast.hpp"
#include "focl/relstore.hpp"

namespace focl {

// Assignment of elements to free variables over a structure.
struct Interpretation {
    const Structure* s = nullptr;
    std::map<std::string, Elem> assignment;

    Elem lookup(const std::string& var) const {
        auto it = assignment.find(var);
        if (it == assignment.end()) throw EvalError("unassigned free variable: " + var);
        return it->second;
    }
};

// Per-evaluation state: the predicate registry, memo table for numerical
// predicate calls, and an optional audit. Exists/Count iterate the whole
// universe, so each such node evaluation books one global scan.
class EvalSession {
public:
    explicit EvalSession(const NumericalPredicateRegistry& reg = builtin_registry(),
                         AccessAudit* audit = nullptr)
        : reg_(&reg), audit_(audit) {}

    const NumericalPredicateRegistry& registry() const { return *reg_; }
    void note_scan() const {
        if (audit_) audit_->count_global_scan();
    }
    bool pred(const std::string& name, const std::vector<i128>& args);

private:
    const NumericalPredicateRegistry* reg_;
    AccessAudit* audit_;
    std::map<std::pair<std::string, std::vector<i128>>, bool> memo_;
};

// Full FOC1 semantics, brute force over the universe.
bool eval_formula(const Expr& e, const Interpretation& it, EvalSession& session);
i128 eval_term(const Expr& e, const Interpretation& it, EvalSession& session);

// Convenience wrappers with a fresh session.
bool eval_formula(const Expr& e, const Interpretation& it);
i128 eval_term(const Expr& e, const Interpretation& it);

// Evaluates an expression declared r-local around its free variables by
// materializing the r-neighborhood of the assigned tuple through the oracle
// and evaluating on the induced substructure. Equals global evaluation
// whenever the declared locality is correct; never scans the universe.
bool eval_local_formula(const Expr& e, const Interpretation& it, const LocalOracle& oracle,
                        Dist r, EvalSession* session = nullptr);
i128 eval_local_term(const Expr& e, const Interpretation& it, const LocalOracle& oracle,
                     Dist r, EvalSession* session = nullptr);

// Locality discrepancy detector: true when local and global evaluation agree
// on the given assignment.
bool locality_agrees(const Expr& e, const Interpretation& it, const LocalOracle& oracle,
                     Dist r);

}  // namespace focl

#include "focl/eval.hpp"

#include <algorithm>

namespace focl {

bool EvalSession::pred(const std::string& name, const std::vector<i128>& args) {
    auto key = std::make_pair(name, args);
    auto it = memo_.find(key);
    if (it != memo_.end()) return it->second;
    const auto& entry = reg_->entry(name);
    if (args.size() != entry.arity)
        throw EvalError("wrong argument count for predicate " + name);
    bool v = entry.decide(args);
    memo_.emplace(std::move(key), v);
    return v;
}

namespace {

bool eval_f(const Expr& e, const Structure& s, std::map<std::string, Elem>& beta,
            EvalSession& session);
i128 eval_t(const Expr& e, const Structure& s, std::map<std::string, Elem>& beta,
            EvalSession& session);

Elem lookup(const std::map<std::string, Elem>& beta, const std::string& var) {
    auto it = beta.find(var);
    if (it == beta.end()) throw EvalError("unassigned free variable: " + var);
    return it->second;
}

bool eval_f(const Expr& e, const Structure& s, std::map<std::string, Elem>& beta,
            EvalSession& session) {
    switch (e.kind) {
        case NodeKind::Equality:
            return lookup(beta, e.vars[0]) == lookup(beta, e.vars[1]);
        case NodeKind::Atom: {
            int rel = s.signature().require(e.rel_name);
            if (s.signature().symbol(rel).arity != e.vars.size())
                throw EvalError("arity mismatch in atom " + e.rel_name);
            Tuple t;
            t.reserve(e.vars.size());
            for (const auto& v : e.vars) t.push_back(lookup(beta, v));
            return s.relation(rel).contains(t);
        }
        case NodeKind::Not:
            return !eval_f(*e.children[0], s, beta, session);
        case NodeKind::Or:
            return eval_f(*e.children[0], s, beta, session) ||
                   eval_f(*e.children[1], s, beta, session);
        case NodeKind::Exists: {
            session.note_scan();
            Elem saved = kNoElem;
            auto it = beta.find(e.vars[0]);
            bool had = it != beta.end();
            if (had) saved = it->second;
            bool found = false;
            for (Elem v = 0; v < s.universe_size() && !found; ++v) {
                beta[e.vars[0]] = v;
                found = eval_f(*e.children[0], s, beta, session);
            }
            if (had)
                beta[e.vars[0]] = saved;
            else
                beta.erase(e.vars[0]);
            return found;
        }
        case NodeKind::NumPred: {
            std::vector<i128> args;
            args.reserve(e.children.size());
            for (const auto& c : e.children) args.push_back(eval_t(*c, s, beta, session));
            return session.pred(e.rel_name, args);
        }
        default:
            throw EvalError("expected a formula");
    }
}

i128 eval_t(const Expr& e, const Structure& s, std::map<std::string, Elem>& beta,
            EvalSession& session) {
    switch (e.kind) {
        case NodeKind::IntConst:
            return i128(e.value);
        case NodeKind::Add:
            return checked_add(eval_t(*e.children[0], s, beta, session),
                               eval_t(*e.children[1], s, beta, session));
        case NodeKind::Mul:
            return checked_mul(eval_t(*e.children[0], s, beta, session),
                               eval_t(*e.children[1], s, beta, session));
        case NodeKind::Count: {
            const std::size_t k = e.vars.size();
            if (k == 0) return eval_f(*e.children[0], s, beta, session) ? 1 : 0;
            session.note_scan();
            std::vector<std::pair<bool, Elem>> saved(k);
            for (std::size_t i = 0; i < k; ++i) {
                auto it = beta.find(e.vars[i]);
                saved[i] = {it != beta.end(), it != beta.end() ? it->second : kNoElem};
            }
            i128 total = 0;
            const std::size_t n = s.universe_size();
            if (n > 0) {
                std::vector<Elem> idx(k, 0);
                while (true) {
                    for (std::size_t i = 0; i < k; ++i) beta[e.vars[i]] = idx[i];
                    if (eval_f(*e.children[0], s, beta, session)) total = checked_add(total, 1);
                    std::size_t i = 0;
                    for (; i < k; ++i) {
                        if (++idx[i] < n) break;
                        idx[i] = 0;
                    }
                    if (i == k) break;
                }
            }
            for (std::size_t i = 0; i < k; ++i) {
                if (saved[i].first)
                    beta[e.vars[i]] = saved[i].second;
                else
                    beta.erase(e.vars[i]);
            }
            return total;
        }
        default:
            throw EvalError("expected a counting term");
    }
}

}  // namespace

bool eval_formula(const Expr& e, const Interpretation& it, EvalSession& session) {
    if (!e.is_formula()) throw EvalError("expected a formula");
    auto beta = it.assignment;
    return eval_f(e, *it.s, beta, session);
}

i128 eval_term(const Expr& e, const Interpretation& it, EvalSession& session) {
    if (!e.is_term()) throw EvalError("expected a counting term");
    auto beta = it.assignment;
    return eval_t(e, *it.s, beta, session);
}

bool eval_formula(const Expr& e, const Interpretation& it) {
    EvalSession s;
    return eval_formula(e, it, s);
}

i128 eval_term(const Expr& e, const Interpretation& it) {
    EvalSession s;
    return eval_term(e, it, s);
}

namespace {

// Shared setup for the neighborhood-restricted path: materialize N_r of the
// assigned tuple and remap the assignment into the substructure.
Interpretation restrict_to_neighborhood(const Expr& e, const Interpretation& it,
                                        const LocalOracle& oracle, Dist r,
                                        Structure& out) {
    std::vector<Elem> entries;
    for (const auto& v : e.free_vars()) entries.push_back(it.lookup(v));
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    out = oracle.local_neighborhood(entries, r);
    Interpretation sub;
    sub.s = &out;
    for (const auto& [var, elem] : it.assignment) {
        auto h = out.handle_of(it.s->name_of(elem));
        if (h) sub.assignment[var] = *h;
    }
    return sub;
}

}  // namespace

bool eval_local_formula(const Expr& e, const Interpretation& it, const LocalOracle& oracle,
                        Dist r, EvalSession* session) {
    Structure sub;
    Interpretation sit = restrict_to_neighborhood(e, it, oracle, r, sub);
    EvalSession local(session ? session->registry() : builtin_registry());
    return eval_formula(e, sit, local);
}

i128 eval_local_term(const Expr& e, const Interpretation& it, const LocalOracle& oracle,
                     Dist r, EvalSession* session) {
    Structure sub;
    Interpretation sit = restrict_to_neighborhood(e, it, oracle, r, sub);
    EvalSession local(session ? session->registry() : builtin_registry());
    return eval_term(e, sit, local);
}

bool locality_agrees(const Expr& e, const Interpretation& it, const LocalOracle& oracle,
                     Dist r) {
    if (e.is_formula())
        return eval_local_formula(e, it, oracle, r) == eval_formula(e, it);
    return eval_local_term(e, it, oracle, r) == eval_term(e, it);
}

}  // namespace focl

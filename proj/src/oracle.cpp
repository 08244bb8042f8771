#include "focl/oracle.hpp"

#include <algorithm>
#include <deque>

namespace focl {
namespace oracle {

namespace {

Elem get(const std::map<std::string, Elem>& beta, const std::string& v) {
    auto it = beta.find(v);
    if (it == beta.end()) throw EvalError("unassigned free variable: " + v);
    return it->second;
}

bool f_eval(const Expr& e, const Structure& s, std::map<std::string, Elem>& beta,
            const NumericalPredicateRegistry& reg);

i128 t_eval(const Expr& e, const Structure& s, std::map<std::string, Elem>& beta,
            const NumericalPredicateRegistry& reg) {
    switch (e.kind) {
        case NodeKind::IntConst:
            return e.value;
        case NodeKind::Add:
            return t_eval(*e.children[0], s, beta, reg) +
                   t_eval(*e.children[1], s, beta, reg);
        case NodeKind::Mul:
            return t_eval(*e.children[0], s, beta, reg) *
                   t_eval(*e.children[1], s, beta, reg);
        case NodeKind::Count: {
            i128 total = 0;
            std::size_t k = e.vars.size();
            if (k == 0) return f_eval(*e.children[0], s, beta, reg) ? 1 : 0;
            std::vector<std::optional<Elem>> saved(k);
            for (std::size_t i = 0; i < k; ++i) {
                auto it = beta.find(e.vars[i]);
                if (it != beta.end()) saved[i] = it->second;
            }
            std::vector<Elem> tup(k, 0);
            std::function<void(std::size_t)> rec = [&](std::size_t at) {
                if (at == k) {
                    for (std::size_t i = 0; i < k; ++i) beta[e.vars[i]] = tup[i];
                    if (f_eval(*e.children[0], s, beta, reg)) ++total;
                    return;
                }
                for (Elem v = 0; v < s.universe_size(); ++v) {
                    tup[at] = v;
                    rec(at + 1);
                }
            };
            rec(0);
            for (std::size_t i = 0; i < k; ++i) {
                if (saved[i])
                    beta[e.vars[i]] = *saved[i];
                else
                    beta.erase(e.vars[i]);
            }
            return total;
        }
        default:
            throw EvalError("expected a counting term");
    }
}

bool f_eval(const Expr& e, const Structure& s, std::map<std::string, Elem>& beta,
            const NumericalPredicateRegistry& reg) {
    switch (e.kind) {
        case NodeKind::Equality:
            return get(beta, e.vars[0]) == get(beta, e.vars[1]);
        case NodeKind::Atom: {
            int rel = s.signature().require(e.rel_name);
            Tuple t;
            for (const auto& v : e.vars) t.push_back(get(beta, v));
            const auto& tuples = s.relation(rel).tuples;
            return std::find(tuples.begin(), tuples.end(), t) != tuples.end();
        }
        case NodeKind::Not:
            return !f_eval(*e.children[0], s, beta, reg);
        case NodeKind::Or:
            return f_eval(*e.children[0], s, beta, reg) ||
                   f_eval(*e.children[1], s, beta, reg);
        case NodeKind::Exists: {
            auto it = beta.find(e.vars[0]);
            std::optional<Elem> saved;
            if (it != beta.end()) saved = it->second;
            bool ok = false;
            for (Elem v = 0; v < s.universe_size() && !ok; ++v) {
                beta[e.vars[0]] = v;
                ok = f_eval(*e.children[0], s, beta, reg);
            }
            if (saved)
                beta[e.vars[0]] = *saved;
            else
                beta.erase(e.vars[0]);
            return ok;
        }
        case NodeKind::NumPred: {
            std::vector<i128> args;
            for (const auto& c : e.children) args.push_back(t_eval(*c, s, beta, reg));
            return reg.entry(e.rel_name).decide(args);
        }
        default:
            throw EvalError("expected a formula");
    }
}

// Adjacency recomputed from the relation tables, independent of GaifmanIndex.
std::vector<std::vector<Elem>> naive_adjacency(const Structure& s) {
    std::vector<std::vector<Elem>> adj(s.universe_size());
    for (const Relation& rel : s.relations()) {
        for (const Tuple& t : rel.tuples) {
            for (std::size_t i = 0; i < t.size(); ++i)
                for (std::size_t j = i + 1; j < t.size(); ++j)
                    if (t[i] != t[j]) {
                        adj[t[i]].push_back(t[j]);
                        adj[t[j]].push_back(t[i]);
                    }
        }
    }
    return adj;
}

Dist naive_distance(const std::vector<std::vector<Elem>>& adj, Elem a, Elem b) {
    if (a == b) return 0;
    std::vector<Dist> dist(adj.size(), kInfDist);
    std::deque<Elem> q{a};
    dist[a] = 0;
    while (!q.empty()) {
        Elem v = q.front();
        q.pop_front();
        for (Elem w : adj[v]) {
            if (dist[w] != kInfDist) continue;
            dist[w] = dist[v] + 1;
            if (w == b) return dist[w];
            q.push_back(w);
        }
    }
    return kInfDist;
}

bool leaf_holds(const CountingLeaf& leaf, const Structure& s,
                const std::vector<std::vector<Elem>>& adj,
                std::span<const Elem> vals) {
    // literals
    std::vector<int> leaves;
    leaf.psi.skel.collect_leaves(leaves);
    auto lit_val = [&](int idx) {
        const Constituent& c = leaf.psi.parts[std::size_t(idx)];
        if (c.kind != Constituent::Kind::Lit)
            throw EvalError("naive leaf counting handles literal bodies only");
        bool v;
        if (c.lit.is_eq) {
            v = vals[std::size_t(c.lit.vars[0])] == vals[std::size_t(c.lit.vars[1])];
        } else {
            Tuple t;
            for (int var : c.lit.vars) t.push_back(vals[std::size_t(var)]);
            const auto& tuples = s.relation(c.lit.rel).tuples;
            v = std::find(tuples.begin(), tuples.end(), t) != tuples.end();
        }
        return c.lit.positive ? v : !v;
    };
    if (!leaf.psi.skel.eval(lit_val)) return false;
    if (!leaf.has_delta) return true;
    for (unsigned j = 0; j < leaf.h.size(); ++j)
        for (unsigned i = 0; i < j; ++i) {
            Dist d = naive_distance(adj, vals[i], vals[j]);
            if ((d <= leaf.threshold) != leaf.h.edge(i, j)) return false;
        }
    return true;
}

i128 count_leaf_with_adj(const CountingLeaf& leaf, const Structure& s,
                         const std::vector<std::vector<Elem>>& adj,
                         std::span<const Elem> ax, std::span<const Elem> by) {
    std::vector<Elem> vals(leaf.kx() + leaf.ky() + leaf.kz(), 0);
    std::copy(ax.begin(), ax.end(), vals.begin());
    std::copy(by.begin(), by.end(), vals.begin() + long(ax.size()));
    const unsigned m = leaf.kz();
    const std::size_t base = ax.size() + by.size();
    if (m == 0) return leaf_holds(leaf, s, adj, vals) ? 1 : 0;
    i128 total = 0;
    std::function<void(unsigned)> rec = [&](unsigned at) {
        if (at == m) {
            if (leaf_holds(leaf, s, adj, vals)) ++total;
            return;
        }
        for (Elem v = 0; v < s.universe_size(); ++v) {
            vals[base + at] = v;
            rec(at + 1);
        }
    };
    rec(0);
    return total;
}

}  // namespace

bool naive_eval_formula(const Expr& e, const Structure& s,
                        const std::map<std::string, Elem>& assignment,
                        const NumericalPredicateRegistry& reg) {
    auto beta = assignment;
    return f_eval(e, s, beta, reg);
}

i128 naive_eval_term(const Expr& e, const Structure& s,
                     const std::map<std::string, Elem>& assignment,
                     const NumericalPredicateRegistry& reg) {
    auto beta = assignment;
    return t_eval(e, s, beta, reg);
}

i128 naive_count_leaf(const CountingLeaf& leaf, const Structure& s,
                      std::span<const Elem> ax, std::span<const Elem> by) {
    return count_leaf_with_adj(leaf, s, naive_adjacency(s), ax, by);
}

namespace {

i128 eval_cterm_with_adj(const CTerm& t, const Structure& s,
                         const std::vector<std::vector<Elem>>& adj,
                         const std::map<std::string, Elem>& ctx) {
    switch (t.kind) {
        case CTerm::Kind::Const:
            return t.value;
        case CTerm::Kind::Leaf: {
            std::vector<Elem> ax, by;
            for (const auto& v : t.leaf->xs) {
                auto it = ctx.find(v);
                if (it == ctx.end()) throw EvalError("unassigned variable " + v);
                ax.push_back(it->second);
            }
            for (const auto& v : t.leaf->ys) {
                auto it = ctx.find(v);
                if (it == ctx.end()) throw EvalError("unassigned variable " + v);
                by.push_back(it->second);
            }
            return count_leaf_with_adj(*t.leaf, s, adj, ax, by);
        }
        case CTerm::Kind::Add: {
            i128 acc = 0;
            for (const auto& k : t.kids) acc += eval_cterm_with_adj(k, s, adj, ctx);
            return acc;
        }
        case CTerm::Kind::Mul: {
            i128 acc = 1;
            for (const auto& k : t.kids) acc *= eval_cterm_with_adj(k, s, adj, ctx);
            return acc;
        }
    }
    throw EvalError("unhandled term kind");
}

}  // namespace

i128 naive_eval_cterm(const CTerm& t, const Structure& s,
                      const std::map<std::string, Elem>& ctx) {
    return eval_cterm_with_adj(t, s, naive_adjacency(s), ctx);
}

NaiveLearnOutcome naive_learn(const TrainingSet& s, const IndexArtifact& ix) {
    NaiveLearnOutcome out;
    if (s.contradiction()) return out;  // no hypothesis fits a contradictory set

    const Structure& a = ix.expanded;
    const std::vector<std::vector<Elem>> adj = naive_adjacency(a);
    CandidateSpace space = candidate_terms(ix);
    FOCL_CHECK(space.max_summands <= 2,
               "the naive learner covers candidate sums of at most two summands");
    const unsigned l = ix.cfg.l;
    const std::size_t ns = s.examples.size();

    // all parameter tuples over the whole universe
    std::vector<std::vector<Elem>> params;
    if (l == 0) {
        params.push_back({});
    } else {
        if (a.universe_size() == 0) return out;
        std::vector<Elem> w(l, 0);
        std::function<void(unsigned)> rec = [&](unsigned at) {
            if (at == l) {
                params.push_back(w);
                return;
            }
            for (Elem v = 0; v < a.universe_size(); ++v) {
                w[at] = v;
                rec(at + 1);
            }
        };
        rec(0);
    }

    if (s.examples.empty()) {
        out.found = true;
        out.term = CTerm::constant(space.const_pool.empty() ? 0 : space.const_pool[0]);
        out.params = params[0];
        return out;
    }

    std::vector<i128> lambda(ns);
    for (std::size_t i = 0; i < ns; ++i) lambda[i] = s.examples[i].label;

    for (const auto& w : params) {
        // unit values by naive enumeration
        std::vector<std::vector<i128>> uv(space.units.size(), std::vector<i128>(ns));
        std::vector<std::vector<i128>> leaf_val(space.leaves.size());
        std::vector<i128> ground_val(space.ground.size());
        for (std::size_t g = 0; g < space.ground.size(); ++g)
            ground_val[g] = count_leaf_with_adj(*space.ground[g], a, adj, {}, {});
        for (std::size_t li = 0; li < space.leaves.size(); ++li) {
            leaf_val[li].resize(ns);
            for (std::size_t i = 0; i < ns; ++i) {
                std::map<std::string, Elem> ctx;
                for (unsigned xi = 0; xi < ix.cfg.k; ++xi)
                    ctx["x" + std::to_string(xi + 1)] = s.examples[i].tuple[xi];
                for (unsigned yi = 0; yi < l; ++yi)
                    ctx["y" + std::to_string(yi + 1)] = w[yi];
                std::vector<Elem> ax, by;
                for (const auto& v : space.leaves[li]->xs) ax.push_back(ctx.at(v));
                for (const auto& v : space.leaves[li]->ys) by.push_back(ctx.at(v));
                leaf_val[li][i] = count_leaf_with_adj(*space.leaves[li], a, adj, ax, by);
            }
        }
        for (std::size_t u = 0; u < space.units.size(); ++u) {
            const auto& un = space.units[u];
            for (std::size_t i = 0; i < ns; ++i) {
                i128 x = 1;
                if (un.leaf >= 0) x = leaf_val[std::size_t(un.leaf)][i];
                if (un.ground >= 0) x *= ground_val[std::size_t(un.ground)];
                uv[u][i] = x;
            }
        }

        auto fits = [&](const std::vector<i128>& got) {
            for (std::size_t i = 0; i < ns; ++i)
                if (got[i] != lambda[i]) return false;
            return true;
        };
        auto done = [&](CTerm t) {
            out.found = true;
            out.term = std::move(t);
            out.params = w;
        };

        for (i64 c : space.const_pool) {
            if (fits(std::vector<i128>(ns, c))) {
                done(CTerm::constant(c));
                return out;
            }
        }
        std::vector<i128> got(ns);
        for (std::size_t u = 0; u < space.units.size(); ++u)
            for (i64 c : space.coeff_pool) {
                for (std::size_t i = 0; i < ns; ++i) got[i] = i128(c) * uv[u][i];
                if (fits(got)) {
                    done(CTerm::scaled(c, space.unit_term(u)));
                    return out;
                }
            }
        if (space.max_summands >= 2) {
            for (i64 c0 : space.const_pool)
                for (std::size_t u = 0; u < space.units.size(); ++u)
                    for (i64 c : space.coeff_pool) {
                        for (std::size_t i = 0; i < ns; ++i)
                            got[i] = i128(c0) + i128(c) * uv[u][i];
                        if (fits(got)) {
                            done(CTerm::sum({CTerm::constant(c0),
                                             CTerm::scaled(c, space.unit_term(u))}));
                            return out;
                        }
                    }
            for (std::size_t u1 = 0; u1 < space.units.size(); ++u1)
                for (std::size_t u2 = u1; u2 < space.units.size(); ++u2)
                    for (i64 c1 : space.coeff_pool)
                        for (i64 c2 : space.coeff_pool) {
                            bool ok = true;
                            for (std::size_t i = 0; i < ns && ok; ++i)
                                ok = i128(c1) * uv[u1][i] + i128(c2) * uv[u2][i] ==
                                     lambda[i];
                            if (ok) {
                                done(CTerm::sum(
                                    {CTerm::scaled(c1, space.unit_term(u1)),
                                     CTerm::scaled(c2, space.unit_term(u2))}));
                                return out;
                            }
                        }
        }
    }
    return out;
}

}  // namespace oracle
}  // namespace focl

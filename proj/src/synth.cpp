#include "focl/synth.hpp"

#include <algorithm>
#include <map>
#include <numeric>
#include <set>

namespace focl {

Structure random_degree_bounded(Rng& rng, std::size_t n, unsigned degree,
                                unsigned colors) {
    Signature sig;
    sig.add("E", 2);
    for (unsigned c = 1; c <= colors; ++c) sig.add("C" + std::to_string(c), 1);
    StructureBuilder b(sig);
    for (std::size_t i = 0; i < n; ++i) b.add_element("v" + std::to_string(i));

    std::set<std::pair<Elem, Elem>> edges;
    std::vector<unsigned> deg(n, 0);
    std::vector<Elem> order(n);
    std::iota(order.begin(), order.end(), 0);
    for (unsigned round = 0; round < degree; ++round) {
        std::shuffle(order.begin(), order.end(), rng);
        for (std::size_t i = 0; i + 1 < n; i += 2) {
            Elem u = order[i], v = order[i + 1];
            if (u == v || deg[u] >= degree || deg[v] >= degree) continue;
            auto key = std::minmax(u, v);
            if (!edges.insert({key.first, key.second}).second) continue;
            ++deg[u];
            ++deg[v];
        }
    }
    for (auto [u, v] : edges) {
        b.add_tuple(0, {u, v});
        b.add_tuple(0, {v, u});
    }
    std::uniform_int_distribution<unsigned> pick_color(1, colors);
    std::bernoulli_distribution colored(0.7);
    for (Elem v = 0; v < n; ++v)
        if (colored(rng)) b.add_tuple(int(pick_color(rng)), {v});
    return b.finish();
}

Structure random_structure(Rng& rng, std::size_t max_elems, bool with_ternary) {
    Signature sig;
    sig.add("E", 2);
    sig.add("B", 1);
    sig.add("R", 1);
    if (with_ternary) sig.add("T", 3);
    std::uniform_int_distribution<std::size_t> size_pick(1, max_elems);
    std::size_t n = size_pick(rng);
    StructureBuilder b(sig);
    for (std::size_t i = 0; i < n; ++i) b.add_element("e" + std::to_string(i));

    // sparse random relations, density tuned for interesting neighborhoods
    std::bernoulli_distribution edge(std::min(0.8, 1.8 / double(n)));
    std::bernoulli_distribution unary(0.4);
    std::uniform_int_distribution<Elem> pick(0, Elem(n - 1));
    for (Elem u = 0; u < n; ++u)
        for (Elem v = 0; v < n; ++v)
            if (u != v && edge(rng)) b.add_tuple(0, {u, v});
    for (Elem v = 0; v < n; ++v) {
        if (unary(rng)) b.add_tuple(1, {v});
        if (unary(rng)) b.add_tuple(2, {v});
    }
    if (with_ternary) {
        std::size_t t_count = n / 2;
        for (std::size_t i = 0; i < t_count; ++i)
            b.add_tuple(3, {pick(rng), pick(rng), pick(rng)});
    }
    return b.finish();
}

namespace {

struct ExprGen {
    Rng& rng;
    const Signature& sig;
    std::vector<std::string> free_pool = {"x", "y"};
    int count_depth = 0;

    std::uniform_int_distribution<int> d100{0, 99};

    std::string pick_var(const std::vector<std::string>& scope) {
        std::uniform_int_distribution<std::size_t> pick(0, scope.size() - 1);
        return scope[pick(rng)];
    }

    ExprPtr formula(std::size_t budget, std::vector<std::string> scope) {
        int roll = d100(rng);
        if (budget <= 4 || roll < 35) {  // atom or equality
            if (roll % 5 == 0 && scope.size() >= 1)
                return Expr::equality(pick_var(scope), pick_var(scope));
            std::vector<int> rels;
            for (int r = 0; r < int(sig.size()); ++r)
                if (sig.symbol(r).arity >= 1 && sig.symbol(r).arity + 1 <= budget)
                    rels.push_back(r);
            if (rels.empty()) return Expr::equality(pick_var(scope), pick_var(scope));
            std::uniform_int_distribution<std::size_t> pr(0, rels.size() - 1);
            int rel = rels[pr(rng)];
            std::vector<std::string> vars;
            for (unsigned i = 0; i < sig.symbol(rel).arity; ++i)
                vars.push_back(pick_var(scope));
            return Expr::atom(sig.symbol(rel).name, std::move(vars));
        }
        if (roll < 50) return Expr::negation(formula(budget - 1, scope));
        if (roll < 65) {
            std::size_t half = budget / 2;
            return Expr::disjunction(formula(half, scope), formula(budget - 1 - half, scope));
        }
        if (roll < 80) {
            std::string v = "q" + std::to_string(d100(rng) % 3 + 1);
            auto scope2 = scope;
            if (std::find(scope2.begin(), scope2.end(), v) == scope2.end())
                scope2.push_back(v);
            return Expr::exists(v, formula(budget - 2, scope2));
        }
        if (count_depth < 2 && budget >= 5) {  // numerical predicate over terms
            // arguments share at most the single variable the predicate anchors
            std::vector<std::string> anchor = {pick_var(scope)};
            std::uniform_int_distribution<int> pp(0, 2);
            int which = pp(rng);
            std::string name = which == 0 ? "Peq" : which == 1 ? "Pleq" : "Pprime";
            unsigned arity = which == 2 ? 1 : 2;
            std::vector<ExprPtr> args;
            std::size_t arg_budget = (budget - 1) / arity;
            for (unsigned i = 0; i < arity; ++i)
                args.push_back(term(std::max<std::size_t>(1, arg_budget), anchor));
            return Expr::num_pred(name, std::move(args));
        }
        return Expr::negation(formula(budget - 1, scope));
    }

    ExprPtr term(std::size_t budget, std::vector<std::string> scope) {
        int roll = d100(rng);
        if (budget <= 2 || roll < 30) {
            std::uniform_int_distribution<i64> pi(-3, 3);
            return Expr::int_const(pi(rng));
        }
        if (roll < 70 && count_depth < 2 && budget >= 4) {
            ++count_depth;
            std::uniform_int_distribution<unsigned> pk(0, budget >= 7 ? 2 : 1);
            unsigned k = pk(rng);
            std::vector<std::string> bound;
            auto scope2 = scope;
            for (unsigned i = 0; i < k; ++i) {
                std::string z = "z" + std::to_string(i + 1);
                bound.push_back(z);
                if (std::find(scope2.begin(), scope2.end(), z) == scope2.end())
                    scope2.push_back(z);
            }
            ExprPtr body = formula(budget - 1 - k, scope2);
            --count_depth;
            return Expr::count(std::move(bound), body);
        }
        std::size_t half = budget / 2;
        if (roll < 85)
            return Expr::add(term(half, scope), term(budget - 1 - half, scope));
        return Expr::mul(term(half, scope), term(budget - 1 - half, scope));
    }
};

}  // namespace

ExprPtr random_expression(Rng& rng, const Signature& sig, std::size_t max_size,
                          bool want_term) {
    ExprGen gen{rng, sig};
    for (int attempt = 0; attempt < 64; ++attempt) {
        ExprPtr e = want_term ? gen.term(max_size, gen.free_pool)
                              : gen.formula(max_size, gen.free_pool);
        if (e->size() <= max_size) return e;
    }
    return want_term ? Expr::int_const(1)
                     : ExprPtr(Expr::equality("x", "x"));
}

std::map<std::string, Elem> random_assignment(Rng& rng, const Expr& e,
                                              const Structure& s) {
    std::map<std::string, Elem> out;
    if (s.universe_size() == 0) return out;
    std::uniform_int_distribution<Elem> pick(0, Elem(s.universe_size() - 1));
    for (const auto& v : e.free_vars()) out[v] = pick(rng);
    return out;
}

}  // namespace focl

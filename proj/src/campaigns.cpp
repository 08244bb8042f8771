#include "focl/campaigns.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <set>
#include <sstream>

#include "focl/decompose.hpp"
#include "focl/eval.hpp"
#include "focl/oracle.hpp"
#include "focl/parser.hpp"

namespace focl {
namespace campaigns {

using Clock = std::chrono::steady_clock;

namespace {

double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------- criterion 1

Outcome eval_equivalence(u64 seed, u64 trials, std::size_t max_elems,
                         std::size_t max_size) {
    Outcome out;
    Clock::time_point t0 = Clock::now();
    Rng rng(seed);
    for (u64 t = 0; t < trials; ++t) {
        Structure s = random_structure(rng, max_elems, (t % 5) == 0);
        bool want_term = (t % 2) == 0;
        ExprPtr e = random_expression(rng, s.signature(), max_size, want_term);
        auto assignment = random_assignment(rng, *e, s);
        if (s.universe_size() == 0) continue;
        Interpretation it{&s, assignment};
        ++out.checked;
        try {
            if (want_term) {
                i128 fast = eval_term(*e, it);
                i128 slow = oracle::naive_eval_term(*e, s, assignment);
                if (fast != slow) ++out.mismatches;
            } else {
                bool fast = eval_formula(*e, it);
                bool slow = oracle::naive_eval_formula(*e, s, assignment);
                if (fast != slow) ++out.mismatches;
            }
        } catch (const EvalError&) {
            // overflow behaves identically on both paths by construction;
            // anything else would be a mismatch
            ++out.mismatches;
        }
        if (out.mismatches && out.detail.empty())
            out.detail = "first mismatch on: " + print(*e);
    }
    out.ms = ms_since(t0);
    return out;
}

// ---------------------------------------------------------------- criterion 2

Outcome delta_correctness(u64 seed, unsigned structures, std::size_t max_elems) {
    Outcome out;
    Clock::time_point t0 = Clock::now();
    Rng rng(seed);
    for (unsigned si = 0; si < structures; ++si) {
        Structure s = random_structure(rng, max_elems);
        GaifmanIndex g = build_gaifman(s);
        const std::size_t n = s.universe_size();
        std::uniform_int_distribution<Elem> pick(0, Elem(n - 1));
        for (unsigned verts = 1; verts <= 4; ++verts) {
            for (int rep = 0; rep < 2; ++rep) {
                std::vector<Elem> tuple(verts);
                for (auto& e : tuple) e = pick(rng);
                std::vector<std::string> vars;
                for (unsigned i = 0; i < verts; ++i) vars.push_back("v" + std::to_string(i + 1));
                std::map<std::string, Elem> assignment;
                for (unsigned i = 0; i < verts; ++i) assignment[vars[i]] = tuple[i];
                for (Dist r : {Dist(0), Dist(1)}) {
                    Dist thr = 2 * r + 1;
                    // the realized pattern: edges exactly where dist <= thr
                    Graph realized(verts);
                    for (unsigned j = 0; j < verts; ++j)
                        for (unsigned i = 0; i < j; ++i)
                            if (distance(g, tuple[i], tuple[j], thr + 1) <= thr)
                                realized.set_edge(i, j);
                    // component partition of the r-neighborhood
                    std::vector<Elem> ball_set = ball(g, tuple, r);
                    Structure hood = s.induced(ball_set);
                    GaifmanIndex hg = build_gaifman(hood);
                    std::vector<int> hood_comp(verts);
                    for (unsigned i = 0; i < verts; ++i) {
                        Elem hi = hood.require_element(s.name_of(tuple[i]));
                        hood_comp[i] = -1;
                        for (unsigned j = 0; j < i; ++j) {
                            Elem hj = hood.require_element(s.name_of(tuple[j]));
                            if (distance(hg, hj, hi) != kInfDist) {
                                hood_comp[i] = hood_comp[j];
                                break;
                            }
                        }
                        if (hood_comp[i] == -1) hood_comp[i] = int(i);
                    }
                    auto realized_comp = realized.component_ids();
                    auto same_partition = [&](const std::vector<int>& a,
                                              const std::vector<int>& b) {
                        for (unsigned i = 0; i < verts; ++i)
                            for (unsigned j = 0; j < verts; ++j)
                                if ((a[i] == a[j]) != (b[i] == b[j])) return false;
                        return true;
                    };
                    // the six dist formulas evaluated once through the AST path
                    std::vector<std::vector<bool>> close(verts,
                                                         std::vector<bool>(verts, false));
                    for (unsigned j = 0; j < verts; ++j)
                        for (unsigned i = 0; i < j; ++i) {
                            ExprPtr d = dist_formula(s.signature(), thr, vars[i], vars[j]);
                            close[i][j] =
                                oracle::naive_eval_formula(*d, s, assignment);
                        }
                    for (const Graph& G : Graph::all(verts)) {
                        ++out.checked;
                        bool by_ast = true;
                        for (unsigned j = 0; j < verts && by_ast; ++j)
                            for (unsigned i = 0; i < j && by_ast; ++i)
                                if (close[i][j] != G.edge(i, j)) by_ast = false;
                        bool by_bfs = delta_holds(g, {G, thr}, tuple);
                        bool expected = G == realized;
                        bool partition_ok =
                            !by_bfs || same_partition(realized_comp, hood_comp);
                        if (by_ast != by_bfs || by_bfs != expected || !partition_ok) {
                            ++out.mismatches;
                            if (out.detail.empty())
                                out.detail = "delta mismatch on " + G.print();
                        }
                    }
                }
            }
        }
    }
    out.ms = ms_since(t0);
    return out;
}

// ---------------------------------------------------------------- criterion 3

Outcome nu_bound(u64 seed, u64 samples) {
    Outcome out;
    Clock::time_point t0 = Clock::now();
    Rng rng(seed);
    // exact special cases
    auto expect = [&](bool cond) {
        ++out.checked;
        if (!cond) ++out.mismatches;
    };
    for (u64 r = 0; r <= 6; ++r) expect(nu(0, r) == 1);
    for (u64 r = 0; r <= 6; ++r) expect(nu(2, r) == 2 * r + 1);
    expect(nu(3, 1) == 4);
    expect(nu(1, 5) == 2);
    while (out.checked < samples) {
        Structure s = random_structure(rng, 10);
        GaifmanIndex g = build_gaifman(s);
        if (s.universe_size() == 0) continue;
        std::uniform_int_distribution<Elem> pick(0, Elem(s.universe_size() - 1));
        std::uniform_int_distribution<Dist> pick_r(0, 4);
        for (int i = 0; i < 4 && out.checked < samples; ++i) {
            Elem v = pick(rng);
            Dist r = pick_r(rng);
            std::vector<Elem> b = ball(g, std::span<const Elem>(&v, 1), r);
            ++out.checked;
            if (u128(b.size()) > nu(g.degree(), r)) ++out.mismatches;
        }
    }
    out.ms = ms_since(t0);
    return out;
}

// ---------------------------------------------------------------- criterion 4

namespace {

// fixture grammar for the decomposition campaign: random literal-conjunction
// counting leaves combined with small coefficients
CTerm random_plain_term(Rng& rng, const Signature& sig, unsigned k, unsigned l) {
    std::uniform_int_distribution<int> d100(0, 99);
    auto leaf = [&]() -> CTerm {
        unsigned kx = (d100(rng) < 75) ? k : 0;
        unsigned ky = l > 0 && (d100(rng) < 60) ? 1 : 0;
        unsigned m = 1 + unsigned(d100(rng) % 2);
        if (kx + ky + m > 4) m = 1;
        std::vector<std::string> xs, ys, zs;
        for (unsigned i = 0; i < kx; ++i) xs.push_back("x" + std::to_string(i + 1));
        for (unsigned i = 0; i < ky; ++i) ys.push_back("y" + std::to_string(i + 1));
        for (unsigned i = 0; i < m; ++i) zs.push_back("z" + std::to_string(i + 1));
        unsigned total = kx + ky + m;
        std::vector<std::string> names = xs;
        names.insert(names.end(), ys.begin(), ys.end());
        names.insert(names.end(), zs.begin(), zs.end());
        // 1..2 random literals over the variables
        std::vector<Lit> lits;
        unsigned n_lits = 1 + unsigned(d100(rng) % 2);
        for (unsigned i = 0; i < n_lits; ++i) {
            Lit lit;
            lit.positive = d100(rng) < 70;
            int rel = d100(rng) % 3;  // E, B, R of the random signature
            lit.rel = rel;
            unsigned arity = sig.symbol(rel).arity;
            for (unsigned a = 0; a < arity; ++a)
                lit.vars.push_back(int(u64(d100(rng)) % total));
            lits.push_back(std::move(lit));
        }
        CountingLeaf cl;
        cl.xs = xs;
        cl.ys = ys;
        cl.zs = zs;
        cl.psi = LocalFormula::lit_conj(names, std::move(lits));
        cl.has_delta = false;
        cl.radius = 1;
        return CTerm::of_leaf(std::make_shared<const CountingLeaf>(std::move(cl)));
    };
    std::vector<CTerm> summands;
    unsigned count = 1 + unsigned(d100(rng) % 2);
    const i64 coeffs[] = {1, 2, 3, -1};
    for (unsigned i = 0; i < count; ++i)
        summands.push_back(CTerm::scaled(coeffs[u64(d100(rng)) % 4], leaf()));
    if (d100(rng) < 30) summands.push_back(CTerm::constant(d100(rng) % 3));
    return CTerm::sum(std::move(summands));
}

// memoized naive evaluation of a rewritten term (they can be wide)
struct NaiveMemo {
    const Structure& s;
    std::map<std::string, i128> cache;

    i128 eval(const CTerm& t, const std::map<std::string, Elem>& ctx) {
        switch (t.kind) {
            case CTerm::Kind::Const:
                return t.value;
            case CTerm::Kind::Add: {
                i128 acc = 0;
                for (const auto& k : t.kids) acc += eval(k, ctx);
                return acc;
            }
            case CTerm::Kind::Mul: {
                i128 acc = 1;
                for (const auto& k : t.kids) acc *= eval(k, ctx);
                return acc;
            }
            case CTerm::Kind::Leaf: {
                std::string key = t.leaf->print();
                for (const auto& v : t.leaf->xs) key += "/" + std::to_string(ctx.at(v));
                for (const auto& v : t.leaf->ys) key += "/" + std::to_string(ctx.at(v));
                auto it = cache.find(key);
                if (it != cache.end()) return it->second;
                i128 v = oracle::naive_eval_cterm(t, s, ctx);
                cache.emplace(std::move(key), v);
                return v;
            }
        }
        throw InternalError("unhandled kind");
    }
};

void collect_constants(const CTerm& t, std::set<i128>& out) {
    if (t.kind == CTerm::Kind::Const) out.insert(t.value);
    for (const auto& k : t.kids) collect_constants(k, out);
}

// every counting leaf of the rewritten term carries a connected pattern at
// the uniform threshold, and every constant is either inherited from the
// input term or sits in [-1, (l*nu_d((2r'+1)m))^m]
bool leaves_connected_and_ranged(const CTerm& rewritten, const CTerm& original,
                                 u64 degree, Dist threshold, unsigned l) {
    std::vector<LeafPtr> leaves;
    rewritten.collect_leaves(leaves);
    for (const auto& leaf : leaves) {
        if (!leaf->has_delta || !leaf->h.connected()) return false;
        if (leaf->threshold != threshold) return false;
    }
    std::set<i128> inherited;
    collect_constants(original, inherited);
    u128 bound = 1;
    u128 base = u128(std::max(1u, l)) * nu(degree, u64(threshold) * 4);
    for (int i = 0; i < 4; ++i) bound = std::min(bound * base, kNuCap);
    std::function<bool(const CTerm&)> walk = [&](const CTerm& node) {
        if (node.kind == CTerm::Kind::Const) {
            if (inherited.count(node.value)) return true;
            return node.value >= -1 && u128(node.value < 0 ? 0 : node.value) <= bound;
        }
        for (const auto& k : node.kids)
            if (!walk(k)) return false;
        return true;
    };
    return walk(rewritten);
}

}  // namespace

Outcome decomposition_identity(u64 seed, unsigned terms) {
    Outcome out;
    Clock::time_point t0 = Clock::now();
    Rng rng(seed);
    for (unsigned ti = 0; ti < terms; ++ti) {
        Structure s = random_structure(rng, 8);
        if (s.universe_size() == 0) continue;
        GaifmanIndex g = build_gaifman(s);
        Access acc{&s, &g, nullptr};
        const unsigned k = 1;
        const unsigned l = (ti % 2 == 0) ? 1 : 0;
        CTerm t = random_plain_term(rng, s.signature(), k, l);

        std::uniform_int_distribution<Elem> pick(0, Elem(s.universe_size() - 1));
        std::uniform_int_distribution<std::size_t> pick_s(1, 3);
        std::size_t ns = pick_s(rng);
        std::vector<std::vector<Elem>> xvals(ns);
        for (auto& tup : xvals) {
            tup.resize(k);
            for (auto& e : tup) e = pick(rng);
        }
        std::vector<Elem> w(l);
        for (auto& e : w) e = pick(rng);

        RewriteResult rw = rewrite_term(t, acc, xvals, w, l, /*q=*/4);

        NaiveMemo memo{s};
        // reference values of the original term at the true parameter
        std::vector<i128> want(ns);
        for (std::size_t i = 0; i < ns; ++i) {
            std::map<std::string, Elem> ctx;
            for (unsigned xi = 0; xi < k; ++xi)
                ctx["x" + std::to_string(xi + 1)] = xvals[i][xi];
            for (unsigned yi = 0; yi < l; ++yi)
                ctx["y" + std::to_string(yi + 1)] = w[yi];
            want[i] = oracle::naive_eval_cterm(t, s, ctx);
        }
        // every parameter tuple agreeing with w on N_t must reproduce them
        std::vector<std::vector<Elem>> wprimes;
        if (l == 0) {
            wprimes.push_back({});
        } else {
            for (Elem e = 0; e < s.universe_size(); ++e) {
                std::vector<Elem> cand{e};
                if (tuple_eq_in_set(w, cand, rw.n_set)) wprimes.push_back(cand);
            }
        }
        bool bad = false;
        for (const auto& wp : wprimes) {
            for (std::size_t i = 0; i < ns && !bad; ++i) {
                std::map<std::string, Elem> ctx;
                for (unsigned xi = 0; xi < k; ++xi)
                    ctx["x" + std::to_string(xi + 1)] = xvals[i][xi];
                for (unsigned yi = 0; yi < l; ++yi)
                    ctx["y" + std::to_string(yi + 1)] = wp[yi];
                ++out.checked;
                if (memo.eval(rw.t_prime, ctx) != want[i]) bad = true;
            }
            if (bad) break;
        }
        // per-pattern sum identity on the original leaves, all assignments
        std::vector<LeafPtr> plain;
        t.collect_leaves(plain);
        for (const auto& leaf : plain) {
            unsigned total = leaf->kx() + leaf->ky() + leaf->kz();
            std::vector<Elem> args(leaf->kx() + leaf->ky());
            std::function<void(std::size_t)> sweep = [&](std::size_t at) {
                if (bad) return;
                if (at < args.size()) {
                    for (Elem e = 0; e < s.universe_size(); ++e) {
                        args[at] = e;
                        sweep(at + 1);
                    }
                    return;
                }
                std::span<const Elem> ax(args.data(), leaf->kx());
                std::span<const Elem> by(args.data() + leaf->kx(), leaf->ky());
                i128 whole = oracle::naive_count_leaf(*leaf, s, ax, by);
                i128 split = 0;
                for (const Graph& G : Graph::all(total)) {
                    CountingLeaf piece = *leaf;
                    piece.has_delta = true;
                    piece.h = G;
                    piece.threshold = Dist(2 * rw.radius + 1);
                    piece.radius = rw.radius;
                    split += oracle::naive_count_leaf(piece, s, ax, by);
                }
                ++out.checked;
                if (whole != split) bad = true;
            };
            sweep(0);
        }
        if (!leaves_connected_and_ranged(rw.t_prime, t, g.degree(),
                                         Dist(2 * rw.radius + 1), l))
            bad = true;
        if (bad) {
            ++out.mismatches;
            if (out.detail.empty()) out.detail = "term " + std::to_string(ti);
        }
    }
    out.ms = ms_since(t0);
    return out;
}

// ---------------------------------------------------------------- criteria 5-7

namespace {

HypothesisClassConfig planted_cfg(unsigned l) {
    HypothesisClassConfig cfg;
    cfg.k = 1;
    cfg.l = l;
    cfg.q = 6;
    cfg.ints = {2, 3};
    cfg.caps.max_count_vars = 1;
    cfg.caps.max_literals = 2;
    cfg.caps.max_summands = 2;
    cfg.caps.allow_ground_factors = false;
    cfg.caps.int_pool_cap = 2;
    return cfg;
}

}  // namespace

PlantedOutcome planted_targets(u64 seed, unsigned runs) {
    PlantedOutcome out;
    Clock::time_point t0 = Clock::now();
    Rng rng(seed);
    for (unsigned attempt = 0; out.runs < runs && attempt < 20 * runs; ++attempt) {
        Structure s = random_structure(rng, 10);
        if (s.universe_size() < 2) continue;
        const unsigned l = unsigned(out.runs) % 2;
        HypothesisClassConfig cfg = planted_cfg(l);
        IndexArtifact ix = precompute(s, cfg, 1);
        CandidateSpace space = candidate_terms(ix);

        // plant: 1-2 summands over instance-anchored leaves
        std::vector<int> anchored;
        for (int i = 0; i < int(space.leaves.size()); ++i)
            if (space.leaves[std::size_t(i)]->kx() >= 1) anchored.push_back(i);
        if (anchored.empty()) continue;
        std::uniform_int_distribution<std::size_t> pick_leaf(0, anchored.size() - 1);
        std::uniform_int_distribution<std::size_t> pick_coeff(0,
                                                              space.coeff_pool.size() - 1);
        std::uniform_int_distribution<int> d100(0, 99);
        std::vector<CTerm> summands;
        unsigned n_summands = 1 + unsigned(d100(rng) < 50);
        for (unsigned i = 0; i < n_summands; ++i)
            summands.push_back(CTerm::scaled(
                space.coeff_pool[pick_coeff(rng)],
                CTerm::of_leaf(space.leaves[std::size_t(anchored[pick_leaf(rng)])])));
        CTerm target = CTerm::sum(std::move(summands));

        std::uniform_int_distribution<Elem> pick(0, Elem(s.universe_size() - 1));
        std::vector<Elem> w(l);
        for (auto& e : w) e = pick(rng);

        std::uniform_int_distribution<std::size_t> pick_s(2, 4);
        std::size_t ns = std::min<std::size_t>(pick_s(rng), s.universe_size());
        std::vector<Elem> chosen;
        while (chosen.size() < ns) {
            Elem e = pick(rng);
            if (std::find(chosen.begin(), chosen.end(), e) == chosen.end())
                chosen.push_back(e);
        }
        TrainingSet train;
        for (Elem e : chosen) {
            std::map<std::string, Elem> ctx{{"x1", e}};
            for (unsigned yi = 0; yi < l; ++yi) ctx["y" + std::to_string(yi + 1)] = w[yi];
            TrainingExample ex;
            ex.tuple = {e};
            ex.label = to_i64(oracle::naive_eval_cterm(target, s, ctx), "label");
            train.examples.push_back(std::move(ex));
        }

        ++out.runs;
        AccessAudit audit;
        LearnResult res = learn(train, ix, audit);
        out.global_scans += audit.snapshot().global_scans;

        oracle::NaiveLearnOutcome nv = oracle::naive_learn(train, ix);
        if (std::holds_alternative<Reject>(res)) {
            ++out.rejects;
            if (nv.found) ++out.verdict_disagreements;
            continue;
        }
        if (!nv.found) ++out.verdict_disagreements;
        const Hypothesis& h = std::get<Hypothesis>(res);
        for (std::size_t i = 0; i < train.examples.size(); ++i) {
            std::map<std::string, Elem> ctx{{"x1", train.examples[i].tuple[0]}};
            for (unsigned yi = 0; yi < l; ++yi)
                ctx["y" + std::to_string(yi + 1)] = h.params[yi];
            if (oracle::naive_eval_cterm(h.term, s, ctx) != i128(train.examples[i].label))
                ++out.soundness_violations;
            AccessAudit eval_audit;
            i128 got = evaluate_hypothesis(h, ix, train.examples[i].tuple, eval_audit);
            out.global_scans += eval_audit.snapshot().global_scans;
            if (got != i128(train.examples[i].label)) ++out.eval_mismatches;
        }
    }
    out.ms = ms_since(t0);
    return out;
}

// ---------------------------------------------------------------- criterion 8

namespace {

HypothesisClassConfig bench_cfg() {
    HypothesisClassConfig cfg;
    cfg.k = 1;
    cfg.l = 0;
    cfg.q = 4;
    cfg.ints = {2};
    cfg.caps.max_count_vars = 1;
    cfg.caps.max_literals = 2;
    cfg.caps.max_summands = 2;
    cfg.caps.allow_ground_factors = false;
    cfg.caps.int_pool_cap = 2;
    return cfg;
}

}  // namespace

BenchOutcome sublinearity_bench(u64 seed, const std::vector<std::size_t>& sizes,
                                unsigned degree, std::size_t examples, unsigned workers) {
    BenchOutcome out;
    Clock::time_point whole = Clock::now();
    HypothesisClassConfig cfg = bench_cfg();
    std::vector<double> precompute_ms;
    std::vector<u64> learn_calls;
    for (std::size_t n : sizes) {
        Rng rng(seed);
        Structure s = random_degree_bounded(rng, n, degree);

        // warm caches and the allocator before timing
        precompute(s, cfg, workers);
        double best_ms = 0;
        IndexArtifact ix;
        for (int rep = 0; rep < 3; ++rep) {
            Clock::time_point t0 = Clock::now();
            IndexArtifact tmp = precompute(s, cfg, workers);
            double ms = ms_since(t0);
            if (rep == 0 || ms < best_ms) {
                best_ms = ms;
                ix = std::move(tmp);
            }
        }
        precompute_ms.push_back(best_ms);
        out.rows.push_back({n, degree, examples, "precompute", best_ms, 0, 0, 0});

        // plant a fixed-shape target so the searched space matches across n
        CandidateSpace space = candidate_terms(ix);
        int chosen = -1;
        for (int i = 0; i < int(space.leaves.size()); ++i) {
            const CountingLeaf& leaf = *space.leaves[std::size_t(i)];
            std::vector<int> ls;
            leaf.psi.skel.collect_leaves(ls);
            if (leaf.kx() == 1 && leaf.kz() == 1 && ls.size() == 2) {
                chosen = i;
                break;
            }
        }
        FOCL_CHECK(chosen >= 0, "bench: no suitable target leaf");
        CTerm target = CTerm::scaled(2, CTerm::of_leaf(space.leaves[std::size_t(chosen)]));

        Access plain{&ix.expanded, &ix.gaifman, nullptr};
        std::uniform_int_distribution<Elem> pick(0, Elem(n - 1));
        TrainingSet train;
        std::set<Elem> used;
        while (train.examples.size() < examples) {
            Elem e = pick(rng);
            if (!used.insert(e).second) continue;
            std::map<std::string, Elem> ctx{{"x1", e}};
            TrainingExample ex;
            ex.tuple = {e};
            ex.label = to_i64(target.eval([&](const CountingLeaf& leaf) {
                auto [ax, by] = leaf_args(leaf, ctx);
                return leaf.count_local(plain, ax, by);
            }),
                              "label");
            train.examples.push_back(std::move(ex));
        }

        AccessAudit audit;
        Clock::time_point t0 = Clock::now();
        LearnResult res = learn(train, ix, audit, workers);
        double lm = ms_since(t0);
        FOCL_CHECK(std::holds_alternative<Hypothesis>(res), "bench: learner rejected");
        auto snap = audit.snapshot();
        out.rows.push_back({n, degree, examples, "learn", lm, snap.membership_queries,
                            snap.neighbor_queries, snap.global_scans});
        learn_calls.push_back(snap.local_total());
    }
    double worst = 0;
    for (std::size_t i = 1; i < precompute_ms.size(); ++i)
        worst = std::max(worst, precompute_ms[i] / std::max(1e-6, precompute_ms[i - 1]));
    out.worst_precompute_ratio = worst;
    u64 lo = *std::min_element(learn_calls.begin(), learn_calls.end());
    u64 hi = *std::max_element(learn_calls.begin(), learn_calls.end());
    out.learn_call_ratio = lo == 0 ? 1e9 : double(hi) / double(lo);
    out.total_ms = ms_since(whole);
    return out;
}

std::string bench_csv(const BenchOutcome& b) {
    std::ostringstream os;
    os << "n,d,s,phase,wall_ms,membership,neighbors,global_scans\n";
    for (const auto& r : b.rows)
        os << r.n << ',' << r.d << ',' << r.s << ',' << r.phase << ',' << r.wall_ms
           << ',' << r.membership << ',' << r.neighbors << ',' << r.global_scans << '\n';
    return os.str();
}

// ---------------------------------------------------------------- criterion 9

PolyOutcome candidate_polynomiality(u64 seed, const std::vector<unsigned>& degrees) {
    PolyOutcome out;
    for (unsigned d : degrees) {
        Rng rng(seed + d);
        Structure s = random_degree_bounded(rng, 400, d);
        HypothesisClassConfig cfg;
        cfg.k = 1;
        cfg.l = 1;
        cfg.q = 1;  // the enumerated integer range is l * nu_d(3q) then
        cfg.caps.max_count_vars = 1;
        cfg.caps.max_literals = 1;
        cfg.caps.max_summands = 2;
        cfg.caps.allow_ground_factors = false;
        cfg.caps.int_pool_cap = 100000;
        IndexArtifact ix = precompute(s, cfg, 1);
        CandidateSpace space = candidate_terms(ix);
        out.counts.push_back({d, double(u64(space.realized_terms))});
    }
    for (std::size_t i = 1; i < out.counts.size(); ++i) {
        double slope = std::log(out.counts[i].second / out.counts[i - 1].second) /
                       std::log(double(out.counts[i].first) / out.counts[i - 1].first);
        out.max_slope = std::max(out.max_slope, slope);
    }
    return out;
}

// ---------------------------------------------------------------- criterion 10

Structure citations_fixture() {
    Signature sig;
    sig.add("Author", 2);
    sig.add("Citation", 2);
    StructureBuilder b(sig);
    for (const char* name : {"a1", "a2", "p1", "p2", "p3"}) b.add_element(name);
    b.add_tuple("Author", {"a1", "p1"});
    b.add_tuple("Author", {"a1", "p2"});
    b.add_tuple("Author", {"a2", "p3"});
    b.add_tuple("Citation", {"p3", "p1"});
    b.add_tuple("Citation", {"p3", "p2"});
    b.add_tuple("Citation", {"p2", "p1"});
    return b.finish();
}

Structure cake_fixture() {
    Signature sig;
    sig.add("Brought", 2);
    sig.add("Type", 2);
    StructureBuilder b(sig);
    for (const char* name :
         {"p1", "p2", "c1", "c2", "c3", "c4", "c5", "chocolate", "strawberry"})
        b.add_element(name);
    b.add_tuple("Brought", {"p1", "c1"});
    b.add_tuple("Brought", {"p1", "c2"});
    b.add_tuple("Brought", {"p2", "c3"});
    b.add_tuple("Brought", {"p2", "c4"});
    b.add_tuple("Brought", {"p2", "c5"});
    b.add_tuple("Type", {"c1", "chocolate"});
    b.add_tuple("Type", {"c2", "strawberry"});
    b.add_tuple("Type", {"c3", "chocolate"});
    b.add_tuple("Type", {"c4", "chocolate"});
    b.add_tuple("Type", {"c5", "strawberry"});
    return b.finish();
}

FixtureOutcome example_fixtures() {
    FixtureOutcome out;
    // total-citations query: values frozen from the oracle
    Structure cites = citations_fixture();
    ExprPtr term = parse("#(z1, z2).(Author(x, z1) & Citation(z2, z1))");
    i128 at_a1 = oracle::naive_eval_term(*term, cites,
                                         {{"x", cites.require_element("a1")}});
    i128 at_a2 = oracle::naive_eval_term(*term, cites,
                                         {{"x", cites.require_element("a2")}});
    Interpretation i1{&cites, {{"x", cites.require_element("a1")}}};
    Interpretation i2{&cites, {{"x", cites.require_element("a2")}}};
    out.citations_values =
        at_a1 == 3 && at_a2 == 0 && eval_term(*term, i1) == 3 && eval_term(*term, i2) == 0;

    {
        HypothesisClassConfig cfg;
        cfg.k = 1;
        cfg.l = 0;
        cfg.q = 8;
        cfg.caps.max_count_vars = 2;
        cfg.caps.max_literals = 2;
        cfg.caps.max_summands = 2;
        cfg.caps.allow_ground_factors = false;
        cfg.caps.int_pool_cap = 1;
        IndexArtifact ix = precompute(cites, cfg, 1);
        TrainingSet train;
        train.examples.push_back({{cites.require_element("a1")}, 3});
        train.examples.push_back({{cites.require_element("a2")}, 0});
        AccessAudit audit;
        LearnResult res = learn(train, ix, audit);
        out.global_scans += audit.snapshot().global_scans;
        if (std::holds_alternative<Hypothesis>(res)) {
            const Hypothesis& h = std::get<Hypothesis>(res);
            AccessAudit ea;
            std::vector<Elem> t1{cites.require_element("a1")};
            std::vector<Elem> t2{cites.require_element("a2")};
            out.citations_learned = evaluate_hypothesis(h, ix, t1, ea) == 3 &&
                                    evaluate_hypothesis(h, ix, t2, ea) == 0;
            out.global_scans += ea.snapshot().global_scans;
        } else {
            out.detail += "citations: " + std::get<Reject>(res).message + "; ";
        }
    }

    // cake popularity: two-summand term discoverable from its own labels
    Structure cake = cake_fixture();
    {
        HypothesisClassConfig cfg;
        cfg.k = 1;
        cfg.l = 1;
        cfg.q = 4;
        cfg.ints = {2};
        cfg.caps.max_count_vars = 1;
        cfg.caps.max_literals = 2;
        cfg.caps.max_summands = 2;
        cfg.caps.allow_ground_factors = false;
        cfg.caps.int_pool_cap = 2;
        IndexArtifact ix = precompute(cake, cfg, 1);
        CandidateSpace space = candidate_terms(ix);

        // the equivalent rewrite of the target: #z.(Brought & edge(x,z)) +
        // #z.(Brought & Type(z,y) & triangle); both leaves must be present
        int brought = ix.expanded.signature().require("Brought");
        int type = ix.expanded.signature().require("Type");
        LeafPtr l1, l2;
        for (const auto& leaf : space.leaves) {
            std::vector<int> ls;
            leaf->psi.skel.collect_leaves(ls);
            if (leaf->kx() == 1 && leaf->kz() == 1 && leaf->ky() == 0 && ls.size() == 1) {
                const Lit& lit = leaf->psi.parts[std::size_t(ls[0])].lit;
                if (lit.positive && lit.rel == brought && lit.vars == std::vector<int>{0, 1})
                    l1 = leaf;
            }
            if (leaf->kx() == 1 && leaf->ky() == 1 && leaf->kz() == 1 && ls.size() == 2 &&
                leaf->h.bits() == Graph::from_bits(3, 0b111).bits()) {
                const Lit& a = leaf->psi.parts[std::size_t(ls[0])].lit;
                const Lit& b = leaf->psi.parts[std::size_t(ls[1])].lit;
                auto is_brought = [&](const Lit& x) {
                    return x.positive && x.rel == brought && x.vars == std::vector<int>{0, 2};
                };
                auto is_type = [&](const Lit& x) {
                    return x.positive && x.rel == type && x.vars == std::vector<int>{2, 1};
                };
                if ((is_brought(a) && is_type(b)) || (is_brought(b) && is_type(a)))
                    l2 = leaf;
            }
        }
        Elem choc = cake.require_element("chocolate");
        std::vector<std::pair<const char*, i64>> labels;
        ExprPtr target = parse(
            "#(z).(Brought(x, z) & !Type(z, y)) + 2 * #(z).(Brought(x, z) & Type(z, y))");
        for (const char* person : {"p1", "p2"}) {
            i128 v = oracle::naive_eval_term(
                *target, cake,
                {{"x", cake.require_element(person)}, {"y", choc}});
            labels.push_back({person, to_i64(v, "label")});
        }
        if (l1 && l2) {
            CTerm rewritten = CTerm::sum({CTerm::of_leaf(l1), CTerm::of_leaf(l2)});
            bool equal = true;
            for (auto [person, want] : labels) {
                std::map<std::string, Elem> ctx{{"x1", cake.require_element(person)},
                                                {"y1", choc}};
                if (oracle::naive_eval_cterm(rewritten, cake, ctx) != i128(want))
                    equal = false;
            }
            out.cake_space = equal;
        } else {
            out.detail += "cake: rewrite leaves missing from the space; ";
        }

        TrainingSet train;
        for (auto [person, label] : labels)
            train.examples.push_back({{cake.require_element(person)}, label});
        AccessAudit audit;
        LearnResult res = learn(train, ix, audit);
        out.global_scans += audit.snapshot().global_scans;
        if (std::holds_alternative<Hypothesis>(res)) {
            const Hypothesis& h = std::get<Hypothesis>(res);
            bool sound = true;
            for (auto [person, want] : labels) {
                std::map<std::string, Elem> ctx{{"x1", cake.require_element(person)}};
                for (unsigned yi = 0; yi < 1; ++yi) ctx["y1"] = h.params[0];
                if (oracle::naive_eval_cterm(h.term, cake, ctx) != i128(want)) sound = false;
            }
            out.cake_learned = sound;
        } else {
            out.detail += "cake: " + std::get<Reject>(res).message + "; ";
        }
    }
    return out;
}

}  // namespace campaigns
}  // namespace focl

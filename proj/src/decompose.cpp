#include "focl/decompose.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

namespace focl {

ComponentSplit component_split(const Graph& g) {
    FOCL_CHECK(g.size() >= 1, "component_split needs at least one vertex");
    auto comp = g.component_ids();
    ComponentSplit out;
    for (unsigned v = 0; v < g.size(); ++v)
        (comp[v] == comp[0] ? out.c1 : out.c2).push_back(v);
    out.g1 = g.induced(out.c1);
    out.g2 = g.induced(out.c2);
    return out;
}

bool tuple_eq_in_set(std::span<const Elem> w, std::span<const Elem> w2,
                     std::span<const Elem> n_sorted) {
    if (w.size() != w2.size()) throw Error("tuple length mismatch");
    for (std::size_t i = 0; i < w.size(); ++i) {
        bool in_n = std::binary_search(n_sorted.begin(), n_sorted.end(), w[i]);
        if (in_n && w[i] != w2[i]) return false;
    }
    return true;
}

// ---------------------------------------------------------------- fv_decompose

std::vector<FvPair> fv_decompose(const LocalFormula& phi, const std::vector<int>& side_of,
                                 Dist sep) {
    LocalFormula sp = separate(phi, side_of, sep);

    std::vector<int> leaves;
    sp.skel.collect_leaves(leaves);
    std::sort(leaves.begin(), leaves.end());
    leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());

    // variable-less constituents (global facts) join side 0
    std::vector<int> side0, side1;
    for (int l : leaves) {
        const Constituent& c = sp.parts[std::size_t(l)];
        int side = -1;
        bool pure = constituent_side_pure(c, side_of, &side);
        FOCL_CHECK(pure, "separate left a mixed constituent");
        (side == 1 ? side1 : side0).push_back(l);
    }
    FOCL_CHECK(side0.size() + side1.size() <= 20, "too many constituents to decompose");

    auto conj_of = [&](const std::vector<int>& parts_idx, u64 mask) {
        LocalFormula f;
        f.var_names = sp.var_names;
        f.parts = sp.parts;
        std::vector<Skeleton> cs;
        for (std::size_t i = 0; i < parts_idx.size(); ++i) {
            Skeleton leafsk = Skeleton::leaf_of(parts_idx[i]);
            cs.push_back(((mask >> i) & 1) ? leafsk : Skeleton::negate(leafsk));
        }
        f.skel = Skeleton::conj_all(std::move(cs));
        return f;
    };

    // collect satisfying complete assignments, grouped by the side-0 pattern
    std::map<u64, std::vector<u64>> by_alpha;
    const std::size_t n0 = side0.size(), n1 = side1.size();
    for (u64 m0 = 0; m0 < (u64(1) << n0); ++m0) {
        for (u64 m1 = 0; m1 < (u64(1) << n1); ++m1) {
            std::vector<int> truth(sp.parts.size(), -1);
            for (std::size_t i = 0; i < n0; ++i)
                truth[std::size_t(side0[i])] = int((m0 >> i) & 1);
            for (std::size_t i = 0; i < n1; ++i)
                truth[std::size_t(side1[i])] = int((m1 >> i) & 1);
            Skeleton sub = sp.skel.substitute(truth);
            FOCL_CHECK(sub.is_true() || sub.is_false(),
                       "complete assignment left an open skeleton");
            if (sub.is_true()) by_alpha[m0].push_back(m1);
        }
    }

    std::vector<FvPair> pairs;
    for (const auto& [m0, m1s] : by_alpha) {
        LocalFormula alpha = conj_of(side0, m0);
        if (m1s.size() == (u64(1) << n1)) {
            LocalFormula truef;
            truef.var_names = sp.var_names;
            truef.skel = Skeleton::truth();
            pairs.push_back({std::move(alpha), std::move(truef)});
            continue;
        }
        for (u64 m1 : m1s) pairs.push_back({alpha, conj_of(side1, m1)});
    }
    return pairs;
}

// ------------------------------------------------ component-wise recursion

namespace {

// Restricts a side-pure formula to the positions of one component, rebuilding
// its variable table (block order preserved).
LocalFormula reindex_formula(const LocalFormula& f, const std::vector<unsigned>& keep,
                             const std::vector<std::string>& new_names) {
    std::vector<int> remap_var(f.var_names.size(), -1);
    for (std::size_t i = 0; i < keep.size(); ++i)
        remap_var[std::size_t(keep[i])] = int(i);

    LocalFormula out;
    out.var_names = new_names;
    out.parts = f.parts;
    for (auto& c : out.parts) {
        auto fix = [&](int& v) {
            if (v < 0) return;
            FOCL_CHECK(remap_var[std::size_t(v)] >= 0,
                       "constituent escapes its component");
            v = remap_var[std::size_t(v)];
        };
        switch (c.kind) {
            case Constituent::Kind::Lit:
                for (int& v : c.lit.vars) fix(v);
                break;
            case Constituent::Kind::Dist:
                fix(c.a);
                fix(c.b);
                break;
            case Constituent::Kind::NearCount:
                for (int& v : c.anchors) fix(v);
                break;
            case Constituent::Kind::Global:
                break;
            case Constituent::Kind::ExistsNear:
                // quantified inner formulas share the outer table; component
                // restriction of such shapes is not needed by the pipeline
                throw LocalityError(
                    "component restriction of quantified local subformulas is not "
                    "supported; re-localise the input");
            case Constituent::Kind::Opaque:
                for (int& v : c.anchors) fix(v);
                break;
        }
    }
    // NOTE: only constituents reachable from the skeleton are guaranteed to
    // be component-pure; prune the rest so the remap above cannot misfire.
    out.skel = f.skel;
    return out;
}

// Reachable-only copy: drops constituents the skeleton never touches.
LocalFormula prune_unreachable(const LocalFormula& f) {
    std::vector<int> leaves;
    f.skel.collect_leaves(leaves);
    std::sort(leaves.begin(), leaves.end());
    leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());
    LocalFormula out;
    out.var_names = f.var_names;
    std::vector<int> remap(f.parts.size(), -1);
    for (int l : leaves) {
        remap[std::size_t(l)] = int(out.parts.size());
        out.parts.push_back(f.parts[std::size_t(l)]);
    }
    out.skel = f.skel.remap_leaves(remap);
    return out;
}

struct Blocks {
    std::vector<std::string> xs, ys, zs;
    std::vector<std::vector<Elem>> xvals;
    std::vector<Elem> yvals;
};

// Splits the blocks of a component set: positions [0,kx) are x, [kx,kx+ky)
// are y, the rest z.
Blocks project_blocks(const std::vector<unsigned>& keep, const std::vector<std::string>& xs,
                      const std::vector<std::string>& ys, const std::vector<std::string>& zs,
                      const std::vector<std::vector<Elem>>& xvals,
                      const std::vector<Elem>& yvals) {
    Blocks b;
    b.xvals.resize(xvals.size());
    const unsigned kx = unsigned(xs.size()), ky = unsigned(ys.size());
    for (unsigned pos : keep) {
        if (pos < kx) {
            b.xs.push_back(xs[pos]);
            for (std::size_t i = 0; i < xvals.size(); ++i)
                b.xvals[i].push_back(xvals[i][pos]);
        } else if (pos < kx + ky) {
            b.ys.push_back(ys[pos - kx]);
            b.yvals.push_back(yvals[pos - kx]);
        } else {
            b.zs.push_back(zs[pos - kx - ky]);
        }
    }
    return b;
}

std::vector<std::string> names_of(const Blocks& b) {
    std::vector<std::string> names = b.xs;
    names.insert(names.end(), b.ys.begin(), b.ys.end());
    names.insert(names.end(), b.zs.begin(), b.zs.end());
    return names;
}

}  // namespace

CTerm decompose_component_term(const LocalFormula& psi, const std::vector<std::string>& xs,
                               const std::vector<std::string>& ys,
                               const std::vector<std::string>& zs, const Graph& g,
                               Dist threshold, Dist radius, const Access& acc,
                               const std::vector<std::vector<Elem>>& xvals,
                               const std::vector<Elem>& yvals, DecomposeStats& stats) {
    const unsigned kx = unsigned(xs.size()), ky = unsigned(ys.size()),
                   kz = unsigned(zs.size());
    FOCL_CHECK(g.size() == kx + ky + kz, "pattern size mismatch");
    FOCL_CHECK(threshold >= 2 * radius + 1, "delta threshold below 2r+1");

    auto make_leaf = [&]() {
        CountingLeaf leaf;
        leaf.xs = xs;
        leaf.ys = ys;
        leaf.zs = zs;
        leaf.psi = prune_unreachable(psi);
        leaf.has_delta = true;
        leaf.h = g;
        leaf.threshold = threshold;
        leaf.radius = radius;
        return std::make_shared<const CountingLeaf>(std::move(leaf));
    };

    if (g.connected()) {
        if (kx == 0 && ky == 0) {
            // Case 1: ground piece, kept for the lookup table
            ++stats.case4_keeps;
            return CTerm::of_leaf(make_leaf());
        }
        if (kx == 0) {
            // Case 2: parameter-only piece evaluates to a bounded constant
            auto leaf = make_leaf();
            i128 value = leaf->count_local(acc, {}, yvals);
            ++stats.case2_evals;
            stats.max_case2_constant = std::max(stats.max_case2_constant, value);
            u128 bound = 1;
            u128 base = u128(ky) * nu(acc.g->degree(), u64(threshold) * kz);
            for (unsigned i = 0; i < kz; ++i) {
                base = std::min(base, kNuCap);
                bound = std::min(u128(bound) * base, kNuCap);
            }
            FOCL_CHECK(value >= 0 && u128(value) <= bound,
                       "case-2 constant outside its certified range");
            return CTerm::constant(value);
        }
        // N = ball of the training entries at radius threshold*(l+m)
        std::vector<Elem> entries;
        for (const auto& t : xvals) entries.insert(entries.end(), t.begin(), t.end());
        std::sort(entries.begin(), entries.end());
        entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
        std::vector<Elem> n_set = acc.bounded_ball(entries, Dist(threshold * (ky + kz)));
        bool inside = std::all_of(yvals.begin(), yvals.end(), [&](Elem w) {
            return std::binary_search(n_set.begin(), n_set.end(), w);
        });
        if (!inside) {
            // Case 3: a parameter sits outside every neighborhood that a
            // connected pattern could reach, so the count is zero
            ++stats.case3_zeros;
            return CTerm::constant(0);
        }
        // Case 4: parameters pinned by =_N, keep the piece as is
        ++stats.case4_keeps;
        return CTerm::of_leaf(make_leaf());
    }

    // inductive step over the component structure
    ComponentSplit split = component_split(g);
    std::vector<int> side_of(psi.var_names.size(), -1);
    for (unsigned v : split.c1) side_of[v] = 0;
    for (unsigned v : split.c2) side_of[v] = 1;

    std::vector<FvPair> delta = fv_decompose(psi, side_of, threshold);
    stats.fv_pairs += delta.size();

    Blocks b1 = project_blocks(split.c1, xs, ys, zs, xvals, yvals);
    Blocks b2 = project_blocks(split.c2, xs, ys, zs, xvals, yvals);

    // graphs H != G agreeing with G on both halves: some cross edge present
    std::vector<Graph> corrections;
    {
        std::vector<std::pair<unsigned, unsigned>> cross;
        for (unsigned a : split.c1)
            for (unsigned b : split.c2) cross.push_back({a, b});
        FOCL_CHECK(cross.size() <= 20, "too many cross pairs to enumerate");
        for (u64 mask = 1; mask < (u64(1) << cross.size()); ++mask) {
            Graph h = g;
            for (std::size_t i = 0; i < cross.size(); ++i)
                if ((mask >> i) & 1) h.set_edge(cross[i].first, cross[i].second);
            corrections.push_back(h);
        }
    }

    std::vector<CTerm> total;
    for (const auto& [alpha, beta] : delta) {
        LocalFormula alpha1 = reindex_formula(prune_unreachable(alpha), split.c1, names_of(b1));
        LocalFormula beta2 = reindex_formula(prune_unreachable(beta), split.c2, names_of(b2));

        CTerm t_alpha = decompose_component_term(alpha1, b1.xs, b1.ys, b1.zs, split.g1,
                                                 threshold, radius, acc, b1.xvals, b1.yvals,
                                                 stats);
        CTerm t_beta = decompose_component_term(beta2, b2.xs, b2.ys, b2.zs, split.g2,
                                                threshold, radius, acc, b2.xvals, b2.yvals,
                                                stats);

        LocalFormula both = LocalFormula::conj2(prune_unreachable(alpha),
                                                prune_unreachable(beta));
        std::vector<CTerm> corr;
        for (const Graph& h : corrections) {
            ++stats.correction_terms;
            corr.push_back(decompose_component_term(both, xs, ys, zs, h, threshold, radius,
                                                    acc, xvals, yvals, stats));
        }
        CTerm piece = CTerm::sum(
            {CTerm::product({t_alpha, t_beta}),
             CTerm::scaled(-1, CTerm::sum(std::move(corr)))});
        stats.note_size(piece.size_tokens());
        total.push_back(std::move(piece));
    }
    return CTerm::sum(std::move(total));
}

// ---------------------------------------------------------------- rewrite_term

namespace {

CTerm rewrite_node(const CTerm& t, Dist r_prime, const Access& acc,
                   const std::vector<std::vector<Elem>>& xvals,
                   const std::vector<Elem>& yvals, DecomposeStats& stats,
                   std::vector<std::pair<Graph, CTerm>>& pieces) {
    switch (t.kind) {
        case CTerm::Kind::Const:
            return t;
        case CTerm::Kind::Add:
        case CTerm::Kind::Mul: {
            CTerm out = t;
            out.kids.clear();
            for (const auto& k : t.kids)
                out.kids.push_back(rewrite_node(k, r_prime, acc, xvals, yvals, stats, pieces));
            return out;
        }
        case CTerm::Kind::Leaf:
            break;
    }
    const CountingLeaf& leaf = *t.leaf;
    Dist threshold = Dist(2 * r_prime + 1);

    // project training values onto the leaf's variable subset
    // (the leaf's xs/ys are a subset of x1..xk / y1..yl by construction)
    const unsigned total = leaf.kx() + leaf.ky() + leaf.kz();

    if (leaf.has_delta) {
        FOCL_CHECK(leaf.threshold == threshold, "leaf delta threshold mismatch");
        CTerm piece = decompose_component_term(leaf.psi, leaf.xs, leaf.ys, leaf.zs, leaf.h,
                                               threshold, r_prime, acc, xvals, yvals, stats);
        pieces.push_back({leaf.h, piece});
        return piece;
    }

    // plain leaf: split over every component pattern on its positions
    std::vector<CTerm> parts;
    for (const Graph& g : Graph::all(total)) {
        CTerm piece = decompose_component_term(leaf.psi, leaf.xs, leaf.ys, leaf.zs, g,
                                               threshold, r_prime, acc, xvals, yvals, stats);
        pieces.push_back({g, piece});
        parts.push_back(std::move(piece));
    }
    return CTerm::sum(std::move(parts));
}

Dist leaf_radius_floor(const CTerm& t) {
    std::vector<LeafPtr> leaves;
    t.collect_leaves(leaves);
    Dist r = 1;
    for (const auto& l : leaves) r = std::max(r, std::max(l->radius, l->psi.radius()));
    return r;
}

}  // namespace

RewriteResult rewrite_term(const CTerm& t, const Access& acc,
                           const std::vector<std::vector<Elem>>& xvals,
                           const std::vector<Elem>& yvals, unsigned l, unsigned q) {
    RewriteResult out;
    out.radius = leaf_radius_floor(t);

    // leaf projections: each leaf sees the training tuples restricted to its
    // own variable blocks. The rewriting walks leaves one by one, so project
    // here per leaf via name positions x1..xk / y1..yl.
    // xvals rows follow x1..xk order; leaf xs name "xi" picks column i-1.
    auto project = [&](const CountingLeaf& leaf) {
        std::vector<std::vector<Elem>> xv(xvals.size());
        std::vector<Elem> yv;
        for (const auto& name : leaf.xs) {
            FOCL_CHECK(name.size() >= 2 && name[0] == 'x', "leaf x-variable naming");
            unsigned idx = unsigned(std::stoul(name.substr(1))) - 1;
            for (std::size_t i = 0; i < xvals.size(); ++i)
                xv[i].push_back(xvals[i].at(idx));
        }
        for (const auto& name : leaf.ys) {
            FOCL_CHECK(name.size() >= 2 && name[0] == 'y', "leaf y-variable naming");
            unsigned idx = unsigned(std::stoul(name.substr(1))) - 1;
            yv.push_back(yvals.at(idx));
        }
        return std::make_pair(std::move(xv), std::move(yv));
    };

    std::function<CTerm(const CTerm&)> walk = [&](const CTerm& node) -> CTerm {
        switch (node.kind) {
            case CTerm::Kind::Const:
                return node;
            case CTerm::Kind::Add:
            case CTerm::Kind::Mul: {
                CTerm copy = node;
                copy.kids.clear();
                for (const auto& k : node.kids) copy.kids.push_back(walk(k));
                return copy;
            }
            case CTerm::Kind::Leaf: {
                auto [xv, yv] = project(*node.leaf);
                return rewrite_node(node, out.radius, acc, xv, yv, out.stats,
                                    out.split_pieces);
            }
        }
        throw InternalError("unhandled term kind");
    };
    out.t_prime = walk(t);

    std::vector<Elem> entries;
    for (const auto& v : xvals) entries.insert(entries.end(), v.begin(), v.end());
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    out.n_set =
        acc.bounded_ball(entries, Dist((2 * out.radius + 1) * (l + q)));
    return out;
}

std::string rewrite_trace_json(const RewriteResult& r) {
    nlohmann::json pieces = nlohmann::json::array();
    for (const auto& [g, term] : r.split_pieces)
        pieces.push_back({{"pattern", g.print()},
                          {"term", term.print()},
                          {"size", term.size_tokens()}});
    nlohmann::json j{{"radius", r.radius},
                     {"result", r.t_prime.print()},
                     {"neighborhood_size", r.n_set.size()},
                     {"pieces", pieces},
                     {"stats",
                      {{"fv_pairs", r.stats.fv_pairs},
                       {"correction_terms", r.stats.correction_terms},
                       {"case2_evals", r.stats.case2_evals},
                       {"case3_zeros", r.stats.case3_zeros},
                       {"case4_keeps", r.stats.case4_keeps},
                       {"max_case2_constant", i128_to_string(r.stats.max_case2_constant)},
                       {"max_term_size", r.stats.max_term_size}}}};
    return j.dump();
}

}  // namespace focl

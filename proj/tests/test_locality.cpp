#include <doctest.h>

#include "focl/campaigns.hpp"
#include "focl/eval.hpp"
#include "focl/locality.hpp"
#include "focl/oracle.hpp"
#include "focl/parser.hpp"
#include "focl/synth.hpp"

using namespace focl;

namespace {

Structure colored_graph(const std::vector<std::pair<const char*, const char*>>& edges,
                        const std::vector<const char*>& blue,
                        const std::vector<const char*>& extra = {}) {
    Signature sig;
    sig.add("E", 2);
    sig.add("Blue", 1);
    StructureBuilder b(sig);
    for (auto [u, v] : edges) {
        b.add_tuple("E", {u, v});
        b.add_tuple("E", {v, u});
    }
    for (const char* v : blue) b.add_tuple("Blue", {std::string(v)});
    for (const char* v : extra) b.add_element(v);
    return b.finish();
}

Structure with_eb_signature(const Structure& raw) {
    Signature sig;
    sig.add("E", 2);
    sig.add("Blue", 1);
    StructureBuilder b(sig);
    for (Elem e = 0; e < raw.universe_size(); ++e) b.add_element(raw.name_of(e));
    for (const Tuple& t : raw.relation(0).tuples) b.add_tuple(0, t);
    for (const Tuple& t : raw.relation(1).tuples) b.add_tuple(1, t);
    return b.finish();
}

// check the localiser output against the input formula on every tuple
bool equivalent_everywhere(const Expr& phi, const Structure& s,
                           const LocalisationOutput& out) {
    const auto& fv = phi.free_vars();
    GaifmanIndex g = build_gaifman(out.expanded);
    Access acc{&out.expanded, &g, nullptr};
    if (s.universe_size() == 0) return true;
    std::vector<Elem> vals(fv.size(), 0);
    std::function<bool(std::size_t)> sweep = [&](std::size_t at) -> bool {
        if (at == fv.size()) {
            std::map<std::string, Elem> assignment;
            std::vector<Elem> table(out.formula.var_names.size(), kNoElem);
            for (std::size_t i = 0; i < fv.size(); ++i) {
                assignment[fv[i]] = vals[i];
                for (std::size_t v = 0; v < out.formula.var_names.size(); ++v)
                    if (out.formula.var_names[v] == fv[i]) table[v] = vals[i];
            }
            bool want = oracle::naive_eval_formula(phi, s, assignment);
            bool got = out.formula.eval(acc, table);
            return want == got;
        }
        for (Elem e = 0; e < s.universe_size(); ++e) {
            vals[at] = e;
            if (!sweep(at + 1)) return false;
        }
        return true;
    };
    return sweep(0);
}

}  // namespace

TEST_CASE("nu formula") {
    for (u64 r = 0; r <= 5; ++r) CHECK(nu(0, r) == 1);
    CHECK(nu(3, 1) == 4);
    CHECK(nu(2, 3) == 7);
    for (u64 r = 0; r <= 6; ++r) CHECK(nu(2, r) <= 2 * r + 1);
    for (u64 r = 1; r <= 6; ++r) CHECK(nu(1, r) == 2);
    CHECK(nu(3, 200) == kNuCap);  // saturates instead of overflowing
    CHECK(nu_clamped(3, 200, 1000) == 1000);
}

TEST_CASE("small graphs") {
    CHECK(Graph::all(3).size() == 8);
    CHECK(Graph::all_connected(3).size() == 4);
    CHECK(Graph::all_connected(1).size() == 1);
    Graph g(3);
    g.set_edge(0, 1);
    CHECK(g.connected() == false);
    auto comp = g.component_ids();
    CHECK(comp[0] == comp[1]);
    CHECK(comp[0] != comp[2]);
    Graph sub = g.induced({0, 1});
    CHECK(sub.size() == 2);
    CHECK(sub.edge(0, 1));
}

TEST_CASE("dist formulas match BFS distances") {
    Structure s = colored_graph({{"a", "b"}, {"b", "c"}}, {});
    GaifmanIndex g = build_gaifman(s);

    ExprPtr d0 = dist_formula(s.signature(), 0);
    CHECK(print(*d0) == print(*Expr::equality("x", "y")));

    for (Dist r = 0; r <= 3; ++r) {
        ExprPtr dr = dist_formula(s.signature(), r);
        for (Elem u = 0; u < s.universe_size(); ++u)
            for (Elem v = 0; v < s.universe_size(); ++v) {
                bool want = distance(g, u, v, r + 1) <= r;
                bool got = oracle::naive_eval_formula(*dr, s, {{"x", u}, {"y", v}});
                CHECK(want == got);
            }
    }
}

TEST_CASE("delta formulas encode component patterns") {
    Structure cites = campaigns::citations_fixture();
    GaifmanIndex g = build_gaifman(cites);

    // complete pattern on equal entries holds at any threshold
    Graph complete(3);
    complete.set_edge(0, 1);
    complete.set_edge(0, 2);
    complete.set_edge(1, 2);
    Elem a1 = cites.require_element("a1");
    std::vector<Elem> same{a1, a1, a1};
    CHECK(delta_holds(g, {complete, 1}, same));

    // edgeless pattern fails on an adjacent pair
    Graph edgeless(2);
    Elem p1 = cites.require_element("p1");
    std::vector<Elem> adj{a1, p1};
    CHECK_FALSE(delta_holds(g, {edgeless, 1}, adj));

    // single edge at threshold 1 holds at a distance-1 pair
    Graph edge(2);
    edge.set_edge(0, 1);
    std::vector<Elem> pair{a1, cites.require_element("p2")};
    CHECK(delta_holds(g, {edge, 1}, pair));

    // AST route equals the BFS route
    ExprPtr ast = delta_formula(cites.signature(), {edge, 1}, {"v1", "v2"});
    CHECK(oracle::naive_eval_formula(*ast, cites, {{"v1", a1}, {"v2", pair[1]}}));
}

TEST_CASE("delta campaign at small scale") {
    campaigns::Outcome o = campaigns::delta_correctness(5, 10, 8);
    CHECK(o.mismatches == 0);
    CHECK(o.checked > 500);
}

TEST_CASE("canonical keys identify isomorphic neighborhoods") {
    Structure s1 = colored_graph({{"c", "l1"}, {"c", "l2"}}, {"l1"});
    Structure s2 = colored_graph({{"m", "k2"}, {"m", "k1"}}, {"k2"});
    CHECK(canonical_key(s1, s1.require_element("c")) ==
          canonical_key(s2, s2.require_element("m")));
    // coloring the center breaks the isomorphism
    Structure s3 = colored_graph({{"c", "l1"}, {"c", "l2"}}, {"c"});
    CHECK(canonical_key(s1, s1.require_element("c")) !=
          canonical_key(s3, s3.require_element("c")));
    // the center is distinguished
    CHECK(canonical_key(s1, s1.require_element("c")) !=
          canonical_key(s1, s1.require_element("l2")));
}

TEST_CASE("type index partitions by neighborhood shape") {
    Structure s = colored_graph({{"a", "b"}, {"c", "d"}}, {"a", "c"});
    GaifmanIndex g = build_gaifman(s);
    TypeIndex t = compute_types(s, g, 1, 2);
    CHECK(t.num_types() == 2);  // blue endpoint vs plain endpoint
    CHECK(t.type_of[s.require_element("a")] == t.type_of[s.require_element("c")]);
    CHECK(t.type_of[s.require_element("b")] == t.type_of[s.require_element("d")]);
    CHECK(t.type_of[s.require_element("a")] != t.type_of[s.require_element("b")]);
    CHECK(t.count[std::size_t(t.type_of[s.require_element("a")])] == 2);
}

TEST_CASE("localise keeps atoms unchanged at radius 1") {
    Structure s = colored_graph({{"a", "b"}}, {});
    GaifmanIndex g = build_gaifman(s);
    ExprPtr atom = parse("E(x, y)");
    LocalisationOutput out = localise(*atom, s, g, LocaliseMode::hanf());
    CHECK(out.radius == 1);
    CHECK(out.added.empty());
    CHECK(out.expanded == s);
    CHECK(equivalent_everywhere(*atom, s, out));
}

TEST_CASE("localise rewrites has-blue-neighbor to a unary type predicate") {
    Structure s = colored_graph({{"a", "b"}, {"b", "c"}, {"d", "e"}}, {"c", "d"});
    GaifmanIndex g = build_gaifman(s);
    ExprPtr phi = parse("exists z. (E(x, z) & Blue(z))");
    LocalisationOutput out = localise(*phi, s, g, LocaliseMode::hanf());
    CHECK(out.radius == 1);
    CHECK(!out.added.empty());
    for (const auto& a : out.added) CHECK(a.sym.arity <= 1);
    CHECK(equivalent_everywhere(*phi, s, out));
    // expansion conservativity: old relations unchanged
    for (std::size_t r = 0; r < s.signature().size(); ++r)
        CHECK(out.expanded.relation(int(r)).tuples == s.relation(int(r)).tuples);
}

TEST_CASE("localise handles far witnesses through threshold facts") {
    // exists z (Blue(z) & !E(x,z)): the witness may be anywhere
    ExprPtr phi = parse("exists z. (Blue(z) & !E(x, z))");
    Rng rng(17);
    for (int i = 0; i < 30; ++i) {
        Structure s = with_eb_signature(random_structure(rng, 6));
        GaifmanIndex g = build_gaifman(s);
        LocalisationOutput out = localise(*phi, s, g, LocaliseMode::hanf(3, 2));
        CHECK(equivalent_everywhere(*phi, s, out));
    }
}

TEST_CASE("localise turns sentences into 0-ary facts") {
    Structure s = colored_graph({{"a", "b"}}, {"b"});
    GaifmanIndex g = build_gaifman(s);
    ExprPtr phi = parse("Blue(x) | exists z. (Blue(z))");
    LocalisationOutput out = localise(*phi, s, g, LocaliseMode::hanf());
    bool has_zero_ary = false;
    for (const auto& a : out.added) has_zero_ary = has_zero_ary || a.sym.arity == 0;
    CHECK(has_zero_ary);
    CHECK(equivalent_everywhere(*phi, s, out));
}

TEST_CASE("localise supports chained counting inside numerical predicates") {
    Structure s = colored_graph({{"a", "b"}, {"a", "c"}, {"d", "e"}}, {});
    GaifmanIndex g = build_gaifman(s);
    ExprPtr phi = parse("Pleq(2, #(z).(E(x, z)))");  // at least two neighbors
    LocalisationOutput out = localise(*phi, s, g, LocaliseMode::hanf());
    CHECK(equivalent_everywhere(*phi, s, out));

    // a ground count is a global fact, fine to localise
    ExprPtr ground = parse("Pleq(1, #(z).(Blue(z)))");
    CHECK_NOTHROW(localise(*ground, s, g, LocaliseMode::hanf()));

    // an unchained count with a free variable is outside the fragment
    ExprPtr bad = parse("Pleq(1, #(z).(Blue(z) & !E(x, z)))");
    CHECK_THROWS_AS(localise(*bad, s, g, LocaliseMode::hanf()), LocalityError);
}

TEST_CASE("localise enforces the quantifier cap") {
    Structure s = colored_graph({{"a", "b"}}, {});
    GaifmanIndex g = build_gaifman(s);
    ExprPtr deep =
        parse("exists u. (exists v. (exists w. (E(x, u) & E(u, v) & E(v, w))))");
    CHECK_THROWS_AS(localise(*deep, s, g, LocaliseMode::hanf(3, 2)), LocalityError);
    LocalisationOutput out = localise(*deep, s, g, LocaliseMode::hanf(4, 3));
    CHECK(equivalent_everywhere(*deep, s, out));
}

TEST_CASE("localise hanf equivalence on random supported formulas") {
    Rng rng(23);
    const char* shapes[] = {
        "exists z. (E(x, z) & Blue(z))",
        "exists z. (E(z, x) & !Blue(z))",
        "Blue(x) & exists z. (Blue(z) & !E(x, z))",
        "exists z. (Blue(z)) | E(x, x)",
        "!(exists z. (E(x, z) & exists w. (E(z, w) & Blue(w))))",
        "exists z. (!E(x, z) & !Blue(z))",
    };
    for (int i = 0; i < 72; ++i) {
        Structure s = with_eb_signature(random_structure(rng, 8));
        GaifmanIndex g = build_gaifman(s);
        ExprPtr phi = parse(shapes[i % 6]);
        LocalisationOutput out = localise(*phi, s, g, LocaliseMode::hanf(5, 2));
        CHECK(equivalent_everywhere(*phi, s, out));
        CHECK(out.radius <= 11);
    }
}

TEST_CASE("localiser output renders to an equivalent plain formula") {
    // the AST bridge for type atoms, near-counts, global facts and bounded
    // witnesses must agree with both the structured evaluation and the input
    Rng rng(67);
    const char* shapes[] = {
        "exists z. (E(x, z) & Blue(z))",
        "exists z. (Blue(z) & !E(x, z))",
        "Blue(x) | exists z. (Blue(z))",
    };
    for (int i = 0; i < 12; ++i) {
        Structure s = with_eb_signature(random_structure(rng, 5));
        if (s.universe_size() == 0) continue;
        GaifmanIndex g = build_gaifman(s);
        ExprPtr phi = parse(shapes[i % 3]);
        LocalisationOutput out = localise(*phi, s, g, LocaliseMode::hanf(3, 2));
        ExprPtr rendered = out.formula.to_ast(out.expanded.signature());
        for (Elem v = 0; v < s.universe_size(); ++v) {
            bool want = oracle::naive_eval_formula(*phi, s, {{"x", v}});
            bool via_ast =
                oracle::naive_eval_formula(*rendered, out.expanded, {{"x", v}});
            CHECK(want == via_ast);
        }
    }
}

TEST_CASE("already_local certifies literal shapes and rejects non-local ones") {
    Structure s = colored_graph({{"a", "b"}}, {"b"}, {"far"});
    GaifmanIndex g = build_gaifman(s);

    ExprPtr atom = parse("E(x, y)");
    LocalisationOutput out = localise(*atom, s, g, LocaliseMode::already_local(1));
    CHECK(out.radius == 1);
    CHECK(out.added.empty());
    CHECK(equivalent_everywhere(*atom, s, out));

    // the only blue element sits far from u, so the conjunction with a
    // global witness claim is not 1-local
    Signature sig2;
    sig2.add("E", 2);
    sig2.add("Blue", 1);
    StructureBuilder b(sig2);
    b.add_tuple("E", {"u", "v"});
    b.add_tuple("Blue", {"w"});
    Structure s2 = b.finish();
    GaifmanIndex g2 = build_gaifman(s2);
    ExprPtr nonlocal = Expr::conjunction(Expr::equality("x", "x"),
                                         Expr::exists("z", Expr::atom("Blue", {"z"})));
    CHECK_THROWS_AS(localise(*nonlocal, s2, g2, LocaliseMode::already_local(1)),
                    LocalityError);

    // sentences cannot be certified
    ExprPtr sentence = parse("exists z. (Blue(z))");
    CHECK_THROWS_AS(localise(*sentence, s, g, LocaliseMode::already_local(2)),
                    LocalityError);
}

TEST_CASE("delta formulas certify as already r-local") {
    Structure s = campaigns::citations_fixture();
    GaifmanIndex g = build_gaifman(s);
    Graph edge(2);
    edge.set_edge(0, 1);
    ExprPtr d = delta_formula(s.signature(), {edge, 3}, {"x", "y"});
    LocalisationOutput out = localise(*d, s, g, LocaliseMode::already_local(1));
    CHECK(out.radius == 1);
    CHECK(out.added.empty());
    CHECK(equivalent_everywhere(*d, s, out));
}

TEST_CASE("literal combinations pass already_local with the structural radius") {
    Structure s = colored_graph({{"a", "b"}}, {"a"});
    GaifmanIndex g = build_gaifman(s);
    ExprPtr phi = parse("E(x, y) & !Blue(y)");
    LocalisationOutput out = localise(*phi, s, g, LocaliseMode::already_local(1));
    CHECK(out.radius == 1);
    CHECK(equivalent_everywhere(*phi, s, out));
}

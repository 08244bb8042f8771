#include <doctest.h>

#include "focl/campaigns.hpp"
#include "focl/locality.hpp"
#include "focl/eval.hpp"
#include "focl/oracle.hpp"
#include "focl/parser.hpp"
#include "focl/synth.hpp"

using namespace focl;

TEST_CASE("formula semantics basics") {
    Structure cites = campaigns::citations_fixture();
    Elem a1 = cites.require_element("a1");

    Interpretation same{&cites, {{"x", a1}, {"y", a1}}};
    CHECK(eval_formula(*parse("x = y"), same));

    Signature sig;
    sig.add("R", 0);
    StructureBuilder b(sig);
    b.set_zero_ary(0, true);
    Structure s0 = b.finish();
    Interpretation i0{&s0, {}};
    CHECK(eval_formula(*Expr::atom("R", {}), i0));

    // a1 has two papers, so the count is not <= 1
    Interpretation ia{&cites, {{"x", a1}}};
    CHECK_FALSE(eval_formula(*parse("Pleq(#(z).(Author(x,z)), 1)"), ia));
}

TEST_CASE("citations term evaluates to the total-citation counts") {
    Structure cites = campaigns::citations_fixture();
    ExprPtr t = parse("#(z1,z2).(Author(x,z1) & Citation(z2,z1))");
    Interpretation a1{&cites, {{"x", cites.require_element("a1")}}};
    Interpretation a2{&cites, {{"x", cites.require_element("a2")}}};
    CHECK(eval_term(*t, a1) == 3);
    CHECK(eval_term(*t, a2) == 0);
}

TEST_CASE("empty-tuple counts are sentence indicators") {
    Structure cites = campaigns::citations_fixture();
    Interpretation it{&cites, {}};
    CHECK(eval_term(*parse("#().(true)"), it) == 1);
    CHECK(eval_term(*parse("#().(false)"), it) == 0);
}

TEST_CASE("multiplication by an empty count") {
    Signature sig;
    sig.add("Brought", 2);
    StructureBuilder b(sig);
    b.add_element("lonely");
    b.add_tuple("Brought", {"p", "c"});
    Structure s = b.finish();
    Interpretation it{&s, {{"x", s.require_element("lonely")}}};
    CHECK(eval_term(*parse("2 * #(z).(Brought(x,z))"), it) == 0);
}

TEST_CASE("overflow is an error, never a wrap") {
    Structure cites = campaigns::citations_fixture();
    Interpretation it{&cites, {}};
    i64 big = i64(1) << 62;
    ExprPtr t = Expr::int_const(big);
    for (int i = 0; i < 2; ++i) t = Expr::mul(t, Expr::int_const(big));
    CHECK_THROWS_AS(eval_term(*t, it), EvalError);
}

TEST_CASE("unassigned free variables are reported") {
    Structure cites = campaigns::citations_fixture();
    Interpretation it{&cites, {}};
    CHECK_THROWS_AS(eval_formula(*parse("Author(x, z)"), it), EvalError);
}

TEST_CASE("numerical predicate calls are memoized per session") {
    int calls = 0;
    NumericalPredicateRegistry reg;
    reg.register_pred("Pzero", 1, [&calls](std::span<const i128> a) {
        ++calls;
        return a[0] == 0;
    });
    Structure cites = campaigns::citations_fixture();
    ExprPtr f = Expr::disjunction(Expr::num_pred("Pzero", {Expr::int_const(5)}),
                                  Expr::num_pred("Pzero", {Expr::int_const(5)}));
    EvalSession session(reg);
    Interpretation it{&cites, {}};
    CHECK_FALSE(eval_formula(*f, it, session));
    CHECK(calls == 1);
}

TEST_CASE("audited evaluation books global scans, local path books none") {
    Structure cites = campaigns::citations_fixture();
    GaifmanIndex g = build_gaifman(cites);
    AccessAudit audit;
    EvalSession session(builtin_registry(), &audit);
    Interpretation it{&cites, {{"x", cites.require_element("a1")}}};
    eval_term(*parse("#(z).(Author(x,z))"), it, session);
    CHECK(audit.snapshot().global_scans == 1);

    AccessAudit local_audit;
    LocalOracle oracle(cites, g, local_audit);
    ExprPtr atom = parse("Author(x, z)");
    Interpretation both{&cites,
                        {{"x", cites.require_element("a1")},
                         {"z", cites.require_element("p1")}}};
    CHECK(eval_local_formula(*atom, both, oracle, 1) == eval_formula(*atom, both));
    CHECK(local_audit.snapshot().global_scans == 0);
}

TEST_CASE("locality discrepancy detector flags non-local sentences") {
    // a blue element far away: exists z. B(z) is true globally but not in
    // the 1-neighborhood of x
    Signature sig;
    sig.add("E", 2);
    sig.add("B", 1);
    StructureBuilder b(sig);
    b.add_tuple("E", {"x0", "x1"});
    b.add_element("far");
    b.add_tuple("B", {"far"});
    Structure s = b.finish();
    GaifmanIndex g = build_gaifman(s);
    AccessAudit audit;
    LocalOracle oracle(s, g, audit);
    ExprPtr phi = Expr::conjunction(Expr::equality("x", "x"),
                                    Expr::exists("z", Expr::atom("B", {"z"})));
    Interpretation it{&s, {{"x", s.require_element("x0")}}};
    CHECK_FALSE(locality_agrees(*phi, it, oracle, 1));

    // delta formulas at threshold 2r+1 evaluated locally at radius... the
    // r-local pieces of the pipeline agree both ways
    ExprPtr local_phi = parse("E(x, y)");
    Interpretation pair{&s, {{"x", s.require_element("x0")}, {"y", s.require_element("x1")}}};
    CHECK(locality_agrees(*local_phi, pair, oracle, 1));
}

TEST_CASE("counts over an empty universe are zero") {
    Signature sig;
    sig.add("B", 1);
    Structure s = StructureBuilder(sig).finish();
    Interpretation it{&s, {}};
    CHECK(eval_term(*parse("#(z).(B(z))"), it) == 0);
    CHECK(oracle::naive_eval_term(*parse("#(z).(B(z))"), s, {}) == 0);
}

TEST_CASE("count values stay within 0..|A|^k") {
    Rng rng(77);
    for (int i = 0; i < 60; ++i) {
        Structure s = random_structure(rng, 6);
        if (s.universe_size() == 0) continue;
        ExprPtr t = random_expression(rng, s.signature(), 6, true);
        if (t->kind != NodeKind::Count) continue;
        auto assignment = random_assignment(rng, *t, s);
        Interpretation it{&s, assignment};
        i128 v = eval_term(*t, it);
        i128 cap = 1;
        for (std::size_t j = 0; j < t->vars.size(); ++j) cap *= i128(s.universe_size());
        CHECK(v >= 0);
        CHECK(v <= cap);
    }
}

TEST_CASE("delta formulas are r-local at threshold 2r+1") {
    Rng rng(83);
    for (int i = 0; i < 15; ++i) {
        Structure s = random_structure(rng, 8);
        if (s.universe_size() < 2) continue;
        GaifmanIndex g = build_gaifman(s);
        AccessAudit audit;
        LocalOracle oracle_(s, g, audit);
        for (Dist r : {Dist(0), Dist(1)}) {
            Graph edge(2);
            edge.set_edge(0, 1);
            ExprPtr d = delta_formula(s.signature(), {edge, Dist(2 * r + 1)}, {"x", "y"});
            std::uniform_int_distribution<Elem> pick(0, Elem(s.universe_size() - 1));
            for (int rep = 0; rep < 6; ++rep) {
                Interpretation it{&s, {{"x", pick(rng)}, {"y", pick(rng)}}};
                CHECK(locality_agrees(*d, it, oracle_, r));
            }
        }
    }
}

TEST_CASE("evaluator agrees with the oracle on random triples") {
    campaigns::Outcome o = campaigns::eval_equivalence(101, 400, 8, 8);
    CHECK(o.mismatches == 0);
    CHECK(o.checked > 300);
}

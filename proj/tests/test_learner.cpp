#include <doctest.h>

#include <set>
#include <sstream>

#include "focl/campaigns.hpp"
#include "focl/learner.hpp"
#include "focl/oracle.hpp"
#include "focl/precompute.hpp"
#include "focl/synth.hpp"

using namespace focl;

namespace {

HypothesisClassConfig cites_cfg() {
    HypothesisClassConfig cfg;
    cfg.k = 1;
    cfg.l = 0;
    cfg.q = 8;
    cfg.caps.max_count_vars = 2;
    cfg.caps.max_literals = 2;
    cfg.caps.max_summands = 2;
    cfg.caps.allow_ground_factors = false;
    cfg.caps.int_pool_cap = 1;
    return cfg;
}

TrainingSet cites_training(const Structure& s) {
    TrainingSet t;
    t.examples.push_back({{s.require_element("a1")}, 3});
    t.examples.push_back({{s.require_element("a2")}, 0});
    return t;
}

}  // namespace

TEST_CASE("parameter candidates") {
    Structure s = campaigns::citations_fixture();

    HypothesisClassConfig cfg = cites_cfg();
    IndexArtifact ix = precompute(s, cfg, 1);
    TrainingSet train = cites_training(s);
    AccessAudit audit;
    auto params = parameter_candidates(train, ix, audit);
    CHECK(params == std::vector<std::vector<Elem>>{{}});  // l = 0

    HypothesisClassConfig cfg1 = cites_cfg();
    cfg1.l = 1;
    IndexArtifact ix1 = precompute(s, cfg1, 1);
    TrainingSet one;
    one.examples.push_back({{s.require_element("a1")}, 3});
    auto params1 = parameter_candidates(one, ix1, audit);
    // N at this radius covers a1's component
    std::vector<Elem> seen;
    for (const auto& w : params1) seen.push_back(w[0]);
    for (const char* name : {"a1", "p1", "p2", "p3"})
        CHECK(std::find(seen.begin(), seen.end(), s.require_element(name)) != seen.end());
    CHECK(audit.snapshot().global_scans == 0);

    // an isolated training vertex yields only itself
    Signature sig;
    sig.add("E", 2);
    StructureBuilder b(sig);
    b.add_tuple("E", {"u", "v"});
    b.add_element("lone");
    Structure iso = b.finish();
    IndexArtifact ixi = precompute(iso, cfg1, 1);
    TrainingSet lone;
    lone.examples.push_back({{iso.require_element("lone")}, 0});
    auto params_iso = parameter_candidates(lone, ixi, audit);
    CHECK(params_iso == std::vector<std::vector<Elem>>{{iso.require_element("lone")}});
}

TEST_CASE("learning the citations query") {
    Structure s = campaigns::citations_fixture();
    IndexArtifact ix = precompute(s, cites_cfg(), 1);
    TrainingSet train = cites_training(s);
    AccessAudit audit;
    LearnResult res = learn(train, ix, audit);
    REQUIRE(std::holds_alternative<Hypothesis>(res));
    const Hypothesis& h = std::get<Hypothesis>(res);
    CHECK(audit.snapshot().global_scans == 0);

    AccessAudit ea;
    std::vector<Elem> a1{s.require_element("a1")}, a2{s.require_element("a2")};
    CHECK(evaluate_hypothesis(h, ix, a1, ea) == 3);
    CHECK(evaluate_hypothesis(h, ix, a2, ea) == 0);
    CHECK(ea.snapshot().global_scans == 0);

    // soundness re-checked through the oracle
    std::map<std::string, Elem> c1{{"x1", a1[0]}}, c2{{"x1", a2[0]}};
    CHECK(oracle::naive_eval_cterm(h.term, s, c1) == 3);
    CHECK(oracle::naive_eval_cterm(h.term, s, c2) == 0);
}

TEST_CASE("learn is deterministic") {
    Structure s = campaigns::citations_fixture();
    IndexArtifact ix = precompute(s, cites_cfg(), 1);
    TrainingSet train = cites_training(s);
    AccessAudit a1, a2;
    LearnResult r1 = learn(train, ix, a1);
    LearnResult r2 = learn(train, ix, a2, 2);
    REQUIRE(std::holds_alternative<Hypothesis>(r1));
    REQUIRE(std::holds_alternative<Hypothesis>(r2));
    CHECK(std::get<Hypothesis>(r1).term.print() == std::get<Hypothesis>(r2).term.print());
    CHECK(std::get<Hypothesis>(r1).params == std::get<Hypothesis>(r2).params);
}

TEST_CASE("empty training sets are vacuously consistent") {
    Structure s = campaigns::citations_fixture();
    IndexArtifact ix = precompute(s, cites_cfg(), 1);
    TrainingSet empty;
    AccessAudit audit;
    LearnResult res = learn(empty, ix, audit);
    REQUIRE(std::holds_alternative<Hypothesis>(res));
    CHECK(std::get<Hypothesis>(res).term.kind == CTerm::Kind::Const);
}

TEST_CASE("contradictory training sets are rejected before search") {
    Structure s = campaigns::citations_fixture();
    IndexArtifact ix = precompute(s, cites_cfg(), 1);
    TrainingSet bad;
    bad.examples.push_back({{s.require_element("a1")}, 0});
    bad.examples.push_back({{s.require_element("a1")}, 1});
    AccessAudit audit;
    LearnResult res = learn(bad, ix, audit);
    REQUIRE(std::holds_alternative<Reject>(res));
    CHECK(std::get<Reject>(res).reason == Reject::Reason::ContradictoryLabels);
    CHECK(std::get<Reject>(res).message.find("contradictory") != std::string::npos);
}

TEST_CASE("unreachable labels are rejected and the oracle agrees") {
    // a single element with no facts cannot produce label 7 under tiny caps
    Signature sig;
    sig.add("E", 2);
    StructureBuilder b(sig);
    b.add_element("only");
    Structure s = b.finish();
    HypothesisClassConfig cfg = cites_cfg();
    cfg.ints = {};
    cfg.caps.max_count_vars = 1;
    cfg.caps.int_pool_cap = 1;
    IndexArtifact ix = precompute(s, cfg, 1);
    TrainingSet train;
    train.examples.push_back({{s.require_element("only")}, 7});
    AccessAudit audit;
    LearnResult res = learn(train, ix, audit);
    CHECK(std::holds_alternative<Reject>(res));
    CHECK_FALSE(oracle::naive_learn(train, ix).found);
}

TEST_CASE("hypothesis files round-trip and guard against stale indexes") {
    Structure s = campaigns::citations_fixture();
    IndexArtifact ix = precompute(s, cites_cfg(), 1);
    TrainingSet train = cites_training(s);
    AccessAudit audit;
    LearnResult res = learn(train, ix, audit);
    REQUIRE(std::holds_alternative<Hypothesis>(res));
    const Hypothesis& h = std::get<Hypothesis>(res);

    std::string text = h.to_json(ix);
    Hypothesis back = Hypothesis::from_json(text, ix);
    CHECK(back.term.print() == h.term.print());
    CHECK(back.params == h.params);

    HypothesisClassConfig other = cites_cfg();
    other.q = 9;
    IndexArtifact stale = precompute(s, other, 1);
    CHECK_THROWS_AS(Hypothesis::from_json(text, stale), FormatError);
}

TEST_CASE("ground subterms read identically from table and recomputation") {
    Signature sig;
    sig.add("E", 2);
    sig.add("B", 1);
    StructureBuilder bld(sig);
    bld.add_tuple("E", {"a", "b"});
    bld.add_tuple("E", {"b", "a"});
    bld.add_tuple("B", {"a"});
    bld.add_tuple("B", {"c"});
    Structure s = bld.finish();
    HypothesisClassConfig cfg = cites_cfg();
    cfg.caps.allow_ground_factors = true;
    cfg.caps.max_count_vars = 1;
    IndexArtifact ix = precompute(s, cfg, 1);
    CandidateSpace space = candidate_terms(ix);
    REQUIRE(!space.ground.empty());
    REQUIRE(!space.leaves.empty());

    // hypothesis with one ground factor
    Hypothesis h;
    h.term = CTerm::product({CTerm::of_leaf(space.leaves[0]), CTerm::of_leaf(space.ground[0])});
    h.index_hash = ix.cfg_hash;
    AccessAudit audit;
    std::vector<Elem> at{s.require_element("a")};
    i128 via_table = evaluate_hypothesis(h, ix, at, audit);
    std::map<std::string, Elem> ctx{{"x1", at[0]}};
    i128 via_global = oracle::naive_eval_cterm(h.term, s, ctx);
    CHECK(via_table == via_global);
    CHECK(audit.snapshot().global_scans == 0);
}

TEST_CASE("candidate space is deterministic and counts its size") {
    Structure s = campaigns::citations_fixture();
    IndexArtifact ix = precompute(s, cites_cfg(), 1);
    CandidateSpace s1 = candidate_terms(ix);
    CandidateSpace s2 = candidate_terms(ix);
    REQUIRE(s1.leaves.size() == s2.leaves.size());
    for (std::size_t i = 0; i < s1.leaves.size(); ++i)
        CHECK(s1.leaves[i]->print() == s2.leaves[i]->print());
    CHECK(s1.realized_terms == s2.realized_terms);
    CHECK(s1.realized_terms > 0);
    // integer pool honors I and the [-1, cap] window
    CHECK(std::find(s1.const_pool.begin(), s1.const_pool.end(), -1) != s1.const_pool.end());
    CHECK(std::find(s1.coeff_pool.begin(), s1.coeff_pool.end(), 0) == s1.coeff_pool.end());
}

TEST_CASE("planted targets at small scale") {
    campaigns::PlantedOutcome p = campaigns::planted_targets(47, 12);
    CHECK(p.runs >= 10);
    CHECK(p.rejects == 0);
    CHECK(p.soundness_violations == 0);
    CHECK(p.verdict_disagreements == 0);
    CHECK(p.eval_mismatches == 0);
    CHECK(p.global_scans == 0);
}

TEST_CASE("constant hypotheses evaluate to their constant everywhere") {
    Structure s = campaigns::citations_fixture();
    IndexArtifact ix = precompute(s, cites_cfg(), 1);
    Hypothesis h;
    h.term = CTerm::constant(5);
    h.index_hash = ix.cfg_hash;
    AccessAudit audit;
    for (const char* name : {"a1", "a2", "p1", "p2", "p3"}) {
        std::vector<Elem> t{s.require_element(name)};
        CHECK(evaluate_hypothesis(h, ix, t, audit) == 5);
    }
    CHECK(audit.snapshot() == AccessAudit::Snapshot{});
}

TEST_CASE("targets outside the pattern library reject on both searchers") {
    // plant a two-literal body under a one-literal cap; wherever the capped
    // grammar cannot express the labels, the fast and naive learners must
    // both reject (scoped completeness)
    Rng rng(59);
    unsigned rejects_agreeing = 0;
    for (int round = 0; round < 40 && rejects_agreeing < 3; ++round) {
        Structure s = random_structure(rng, 9);
        if (s.universe_size() < 3) continue;
        HypothesisClassConfig cfg;
        cfg.k = 1;
        cfg.l = 0;
        cfg.q = 6;
        cfg.caps.max_count_vars = 1;
        cfg.caps.max_literals = 1;  // the plant below uses two literals
        cfg.caps.max_summands = 1;
        cfg.caps.allow_ground_factors = false;
        cfg.caps.int_pool_cap = 1;
        IndexArtifact ix = precompute(s, cfg, 1);

        CountingLeaf target;
        target.xs = {"x1"};
        target.zs = {"z1"};
        target.psi = LocalFormula::lit_conj(
            {"x1", "z1"}, {Lit{true, false, 0, {0, 1}}, Lit{true, false, 1, {1}}});
        target.has_delta = true;
        target.h = Graph(2);
        target.h.set_edge(0, 1);
        target.threshold = ix.threshold();
        target.radius = ix.r_prime;
        CTerm t = CTerm::of_leaf(std::make_shared<const CountingLeaf>(target));

        TrainingSet train;
        std::uniform_int_distribution<Elem> pick(0, Elem(s.universe_size() - 1));
        std::set<Elem> used;
        while (train.examples.size() < 3) {
            Elem e = pick(rng);
            if (!used.insert(e).second) continue;
            std::map<std::string, Elem> ctx{{"x1", e}};
            train.examples.push_back(
                {{e}, to_i64(oracle::naive_eval_cterm(t, s, ctx), "label")});
        }
        AccessAudit audit;
        LearnResult res = learn(train, ix, audit);
        bool fast_found = std::holds_alternative<Hypothesis>(res);
        bool naive_found = oracle::naive_learn(train, ix).found;
        CHECK(fast_found == naive_found);  // verdicts agree either way
        if (!fast_found) ++rejects_agreeing;
    }
    CHECK(rejects_agreeing >= 3);
}

TEST_CASE("pair classification stays sound at k = 2") {
    Structure s = campaigns::citations_fixture();
    HypothesisClassConfig cfg;
    cfg.k = 2;
    cfg.l = 0;
    cfg.q = 6;
    cfg.caps.max_count_vars = 1;
    cfg.caps.max_literals = 2;
    cfg.caps.max_summands = 2;
    cfg.caps.allow_ground_factors = false;
    cfg.caps.int_pool_cap = 1;
    IndexArtifact ix = precompute(s, cfg, 1);
    // label pairs by whether the first authored the second
    TrainingSet train;
    train.examples.push_back(
        {{s.require_element("a1"), s.require_element("p1")}, 1});
    train.examples.push_back(
        {{s.require_element("a2"), s.require_element("p1")}, 0});
    train.examples.push_back(
        {{s.require_element("a1"), s.require_element("p2")}, 1});
    AccessAudit audit;
    LearnResult res = learn(train, ix, audit);
    if (std::holds_alternative<Hypothesis>(res)) {
        const Hypothesis& h = std::get<Hypothesis>(res);
        for (const auto& ex : train.examples) {
            std::map<std::string, Elem> ctx{{"x1", ex.tuple[0]}, {"x2", ex.tuple[1]}};
            CHECK(oracle::naive_eval_cterm(h.term, s, ctx) == i128(ex.label));
        }
        CHECK(audit.snapshot().global_scans == 0);
    }
    // arity validation
    TrainingSet wrong;
    wrong.examples.push_back({{s.require_element("a1")}, 1});
    CHECK_THROWS_AS(learn(wrong, ix, audit), FormatError);
}

TEST_CASE("learning over a template-expanded signature") {
    // the localiser's unary type predicates join the candidate vocabulary
    Signature sig;
    sig.add("E", 2);
    sig.add("Blue", 1);
    StructureBuilder b(sig);
    auto edge = [&](const char* u, const char* v) {
        b.add_tuple("E", {u, v});
        b.add_tuple("E", {v, u});
    };
    edge("a", "b");
    edge("a", "c");
    edge("d", "e");
    edge("f", "g");
    b.add_tuple("Blue", {"b"});
    b.add_tuple("Blue", {"e"});
    Structure s = b.finish();

    HypothesisClassConfig cfg;
    cfg.k = 1;
    cfg.l = 0;
    cfg.q = 6;
    cfg.caps.max_count_vars = 1;
    cfg.caps.max_literals = 1;
    cfg.caps.max_summands = 1;
    cfg.caps.allow_ground_factors = false;
    cfg.caps.int_pool_cap = 1;
    cfg.templates = {"exists w. (E(x, w) & Blue(w))"};
    IndexArtifact ix = precompute(s, cfg, 1);
    REQUIRE(ix.expanded.signature().size() > s.signature().size());

    // plant a target whose body uses an added type predicate
    CandidateSpace space = candidate_terms(ix);
    LeafPtr planted;
    for (const auto& leaf : space.leaves) {
        std::vector<int> ls;
        leaf->psi.skel.collect_leaves(ls);
        if (leaf->kx() != 1 || leaf->kz() != 1 || ls.size() != 1) continue;
        const Lit& lit = leaf->psi.parts[std::size_t(ls[0])].lit;
        if (!lit.is_eq && lit.positive && lit.rel >= int(s.signature().size()) &&
            lit.vars == std::vector<int>{1}) {
            planted = leaf;
            break;
        }
    }
    REQUIRE(planted);  // counts pattern-linked z's of the realized type
    CTerm target = CTerm::of_leaf(planted);

    TrainingSet train;
    for (const char* name : {"a", "d", "f", "c"}) {
        Elem e = ix.expanded.require_element(name);
        std::map<std::string, Elem> ctx{{"x1", e}};
        train.examples.push_back(
            {{e}, to_i64(oracle::naive_eval_cterm(target, ix.expanded, ctx), "label")});
    }
    AccessAudit audit;
    LearnResult res = learn(train, ix, audit);
    REQUIRE(std::holds_alternative<Hypothesis>(res));
    const Hypothesis& h = std::get<Hypothesis>(res);
    for (const auto& ex : train.examples) {
        std::map<std::string, Elem> ctx{{"x1", ex.tuple[0]}};
        CHECK(oracle::naive_eval_cterm(h.term, ix.expanded, ctx) == i128(ex.label));
    }
    CHECK(audit.snapshot().global_scans == 0);
}

TEST_CASE("training sets parse from JSON lines") {
    Structure s = campaigns::citations_fixture();
    std::stringstream in(R"({"tuple":["a1"],"label":3}
{"tuple":["a1"],"label":3}
{"tuple":["a2"],"label":0})");
    TrainingSet t = TrainingSet::from_jsonl(in, s, 1);
    CHECK(t.examples.size() == 2);  // duplicates collapse
    CHECK(!t.contradiction());

    std::stringstream bad(R"({"tuple":["nope"],"label":3})");
    CHECK_THROWS_AS(TrainingSet::from_jsonl(bad, s, 1), FormatError);
    std::stringstream wrong(R"({"tuple":["a1","a2"],"label":3})");
    CHECK_THROWS_AS(TrainingSet::from_jsonl(wrong, s, 1), FormatError);
}

#include <doctest.h>

#include <random>
#include <set>
#include <sstream>

#include "focl/campaigns.hpp"
#include "focl/relstore.hpp"
#include "focl/synth.hpp"

using namespace focl;

namespace {

Structure path_abc() {
    Signature sig;
    sig.add("E", 2);
    StructureBuilder b(sig);
    b.add_tuple("E", {"a", "b"});
    b.add_tuple("E", {"b", "c"});
    return b.finish();
}

// brute-force Gaifman edges straight from the definition
std::set<std::pair<Elem, Elem>> brute_edges(const Structure& s) {
    std::set<std::pair<Elem, Elem>> out;
    for (const Relation& rel : s.relations())
        for (const Tuple& t : rel.tuples)
            for (Elem v : t)
                for (Elem w : t)
                    if (v != w) out.insert({std::min(v, w), std::max(v, w)});
    return out;
}

}  // namespace

TEST_CASE("gaifman graph follows the edge criterion") {
    Signature sig;
    sig.add("Author", 2);
    StructureBuilder b(sig);
    b.add_tuple("Author", {"a1", "p1"});
    Structure s = b.finish();
    GaifmanIndex g = build_gaifman(s);
    CHECK(g.degree() == 1);
    CHECK(g.adjacent(s.require_element("a1"), s.require_element("p1")));
}

TEST_CASE("unary-only structures have no edges") {
    Signature sig;
    sig.add("Blue", 1);
    StructureBuilder b(sig);
    b.add_tuple("Blue", {"a"});
    b.add_tuple("Blue", {"b"});
    Structure s = b.finish();
    CHECK(build_gaifman(s).degree() == 0);
}

TEST_CASE("citations fixture has degree 3 at p1") {
    Structure s = campaigns::citations_fixture();
    GaifmanIndex g = build_gaifman(s);
    CHECK(g.degree() == 3);
    Elem p1 = s.require_element("p1");
    auto ns = g.neighbors(p1);
    std::vector<Elem> want{s.require_element("a1"), s.require_element("p2"),
                           s.require_element("p3")};
    std::sort(want.begin(), want.end());
    CHECK(std::vector<Elem>(ns.begin(), ns.end()) == want);
}

TEST_CASE("gaifman edges match brute force on random structures") {
    Rng rng(7);
    for (int i = 0; i < 50; ++i) {
        Structure s = random_structure(rng, 10, true);
        GaifmanIndex g = build_gaifman(s);
        auto brute = brute_edges(s);
        std::set<std::pair<Elem, Elem>> fast;
        std::size_t max_deg = 0;
        for (Elem v = 0; v < s.universe_size(); ++v) {
            max_deg = std::max(max_deg, g.neighbors(v).size());
            for (Elem w : g.neighbors(v)) fast.insert({std::min(v, w), std::max(v, w)});
        }
        CHECK(fast == brute);
        CHECK(g.degree() == max_deg);
    }
}

TEST_CASE("distances via BFS") {
    Structure s = path_abc();
    GaifmanIndex g = build_gaifman(s);
    Elem a = s.require_element("a"), c = s.require_element("c");
    CHECK(distance(g, a, a) == 0);
    CHECK(distance(g, a, c) == 2);

    Signature sig;
    sig.add("E", 2);
    StructureBuilder b(sig);
    b.add_tuple("E", {"u", "v"});
    b.add_element("w");
    Structure two = b.finish();
    GaifmanIndex g2 = build_gaifman(two);
    CHECK(distance(g2, two.require_element("u"), two.require_element("w")) == kInfDist);
    CHECK_THROWS_AS(distance(g2, Elem(99), Elem(0)), Error);
}

TEST_CASE("balls") {
    Structure s = path_abc();
    GaifmanIndex g = build_gaifman(s);
    Elem a = s.require_element("a"), b = s.require_element("b");
    std::vector<Elem> tup{a};
    CHECK(ball(g, tup, 0) == std::vector<Elem>{a});
    std::vector<Elem> want{std::min(a, b), std::max(a, b)};
    CHECK(ball(g, tup, 1) == want);
    CHECK(ball(g, {}, 3).empty());  // empty tuple convention

    Structure cites = campaigns::citations_fixture();
    GaifmanIndex cg = build_gaifman(cites);
    std::vector<Elem> a1{cites.require_element("a1")};
    std::vector<Elem> got = ball(cg, a1, 1);
    std::vector<Elem> expect{cites.require_element("a1"), cites.require_element("p1"),
                             cites.require_element("p2")};
    std::sort(expect.begin(), expect.end());
    CHECK(got == expect);
}

TEST_CASE("ball monotonicity on random structures") {
    Rng rng(21);
    for (int i = 0; i < 30; ++i) {
        Structure s = random_structure(rng, 10);
        if (s.universe_size() == 0) continue;
        GaifmanIndex g = build_gaifman(s);
        std::uniform_int_distribution<Elem> pick(0, Elem(s.universe_size() - 1));
        Elem v = pick(rng);
        std::vector<Elem> prev;
        for (Dist r = 0; r <= 4; ++r) {
            std::vector<Elem> cur = ball(g, std::span<const Elem>(&v, 1), r);
            CHECK(std::includes(cur.begin(), cur.end(), prev.begin(), prev.end()));
            prev = cur;
        }
    }
}

TEST_CASE("induced neighborhoods") {
    Structure cites = campaigns::citations_fixture();
    GaifmanIndex g = build_gaifman(cites);

    // large radius covers the connected structure
    std::vector<Elem> a1{cites.require_element("a1")};
    Structure whole = induced_neighborhood(cites, g, a1, 10);
    CHECK(whole.universe_size() == 5);
    CHECK(whole.relation(0).tuples.size() == 3);
    CHECK(whole.relation(1).tuples.size() == 3);

    // radius 0 keeps unary facts, drops binary ones
    Signature sig;
    sig.add("Blue", 1);
    sig.add("E", 2);
    StructureBuilder b(sig);
    b.add_tuple("Blue", {"a"});
    b.add_tuple("E", {"a", "b"});
    Structure s = b.finish();
    GaifmanIndex sg = build_gaifman(s);
    std::vector<Elem> av{s.require_element("a")};
    Structure zero = induced_neighborhood(s, sg, av, 0);
    CHECK(zero.universe_size() == 1);
    CHECK(zero.relation(0).tuples.size() == 1);
    CHECK(zero.relation(1).tuples.empty());

    // N_1(a2) in the citations fixture
    std::vector<Elem> a2{cites.require_element("a2")};
    Structure hood = induced_neighborhood(cites, g, a2, 1);
    CHECK(hood.universe_size() == 2);
    CHECK(hood.relation(0).tuples.size() == 1);  // Author(a2,p3)
    CHECK(hood.relation(1).tuples.empty());

    // inducing twice on the same ball is idempotent
    std::vector<Elem> all(hood.universe_size());
    for (Elem e = 0; e < hood.universe_size(); ++e) all[e] = e;
    CHECK(hood.induced(all) == hood);
}

TEST_CASE("local oracle answers and audits") {
    Structure cites = campaigns::citations_fixture();
    GaifmanIndex g = build_gaifman(cites);
    AccessAudit audit;
    LocalOracle oracle(cites, g, audit);

    int author = cites.signature().require("Author");
    CHECK(oracle.membership(author,
                            {cites.require_element("a1"), cites.require_element("p1")}));
    CHECK(audit.snapshot().membership_queries == 1);

    auto ns = oracle.neighbors(cites.require_element("a2"));
    CHECK(std::vector<Elem>(ns.begin(), ns.end()) ==
          std::vector<Elem>{cites.require_element("p3")});
    auto snap = audit.snapshot();
    CHECK(snap.neighbor_queries == 1);
    CHECK(snap.global_scans == 0);

    // the probe-based materialization equals the direct induced substructure
    std::vector<Elem> a1{cites.require_element("a1")};
    for (Dist r = 0; r <= 3; ++r)
        CHECK(oracle.local_neighborhood(a1, r) == induced_neighborhood(cites, g, a1, r));
    CHECK(audit.snapshot().global_scans == 0);
}

TEST_CASE("ingest and persist round-trip") {
    Structure cites = campaigns::citations_fixture();
    std::stringstream buf;
    persist(cites, buf);
    Structure back = ingest(buf);
    CHECK(back == cites);
    CHECK(back.universe_size() == 5);
    CHECK(back.relation(0).tuples.size() == 3);
    CHECK(back.relation(1).tuples.size() == 3);

    Rng rng(5);
    for (int i = 0; i < 20; ++i) {
        Structure s = random_structure(rng, 9, true);
        std::stringstream io;
        persist(s, io);
        CHECK(ingest(io) == s);
    }
}

TEST_CASE("ingest errors carry positions") {
    std::stringstream empty_rel(R"({"signature":[{"name":"R","arity":1}]})");
    Structure s = ingest(empty_rel);
    CHECK(s.universe_size() == 0);
    CHECK(s.relation(0).tuples.empty());

    std::stringstream bad_arity(
        "{\"signature\":[{\"name\":\"R\",\"arity\":2}]}\n"
        "{\"rel\":\"R\",\"tuple\":[\"a\"]}\n");
    try {
        ingest(bad_arity);
        FAIL("expected an arity error");
    } catch (const FormatError& e) {
        CHECK(std::string(e.what()).find('R') != std::string::npos);
        CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }

    std::stringstream unknown(
        "{\"signature\":[]}\n"
        "{\"rel\":\"Nope\",\"tuple\":[]}\n");
    CHECK_THROWS_AS(ingest(unknown), FormatError);

    std::stringstream reserved(R"({"signature":[{"name":"_X","arity":1}]})");
    CHECK_THROWS_AS(ingest(reserved), FormatError);
}

TEST_CASE("0-ary relations are truth values") {
    Signature sig;
    sig.add("Flag", 0);
    StructureBuilder b(sig);
    b.set_zero_ary(0, true);
    Structure s = b.finish();
    CHECK(s.relation(0).truth());
    CHECK(s.relation(0).contains({}));
    std::stringstream io;
    persist(s, io);
    CHECK(ingest(io) == s);
}

TEST_CASE("per-position postings find tuples by entry") {
    Structure s = campaigns::citations_fixture();
    int author = s.signature().require("Author");
    Elem a1 = s.require_element("a1");
    auto hits = s.tuples_at(author, 0, a1);
    CHECK(hits.size() == 2);  // a1 wrote p1 and p2
    for (auto idx : hits) CHECK(s.relation(author).tuples[idx][0] == a1);
    CHECK(s.tuples_at(author, 1, a1).empty());
}

TEST_CASE("audit tolerates concurrent increments") {
    AccessAudit audit;
    parallel_for(1000, 4, [&](unsigned, std::size_t b, std::size_t e) {
        for (std::size_t i = b; i < e; ++i) audit.count_membership();
    });
    CHECK(audit.snapshot().membership_queries == 1000);
}

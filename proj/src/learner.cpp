#include "focl/learner.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

namespace focl {

using nlohmann::json;

// ---------------------------------------------------------------- training sets

TrainingSet TrainingSet::from_jsonl(std::istream& in, const Structure& s, unsigned k) {
    TrainingSet out;
    std::string line;
    std::size_t lineno = 0;
    std::set<std::pair<std::vector<Elem>, i64>> seen;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(std::string("bad JSON: ") + e.what(), lineno);
        }
        if (!j.contains("tuple") || !j.contains("label"))
            throw FormatError("training record needs tuple and label", lineno);
        TrainingExample ex;
        for (const auto& name : j["tuple"]) {
            auto h = s.handle_of(name.get<std::string>());
            if (!h)
                throw FormatError("unknown element in training tuple: " +
                                      name.get<std::string>(),
                                  lineno);
            ex.tuple.push_back(*h);
        }
        if (ex.tuple.size() != k)
            throw FormatError("training tuple arity " + std::to_string(ex.tuple.size()) +
                                  ", expected " + std::to_string(k),
                              lineno);
        ex.label = j["label"].get<i64>();
        if (seen.insert({ex.tuple, ex.label}).second) out.examples.push_back(std::move(ex));
    }
    return out;
}

TrainingSet TrainingSet::from_file(const std::string& path, const Structure& s,
                                   unsigned k) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open training file: " + path);
    return from_jsonl(in, s, k);
}

std::optional<std::vector<Elem>> TrainingSet::contradiction() const {
    std::map<std::vector<Elem>, i64> labels;
    for (const auto& ex : examples) {
        auto [it, fresh] = labels.emplace(ex.tuple, ex.label);
        if (!fresh && it->second != ex.label) return ex.tuple;
    }
    return std::nullopt;
}

// ---------------------------------------------------------------- candidate space

namespace {

std::vector<std::string> numbered(const char* stem, unsigned lo, unsigned n) {
    std::vector<std::string> out;
    for (unsigned i = 0; i < n; ++i) out.push_back(stem + std::to_string(lo + i));
    return out;
}

// all tuples of pairwise-distinct indices from [0,n), length a
void distinct_tuples(unsigned n, unsigned a, std::vector<std::vector<int>>& out) {
    std::vector<int> cur;
    std::function<void()> rec = [&] {
        if (cur.size() == a) {
            out.push_back(cur);
            return;
        }
        for (unsigned v = 0; v < n; ++v) {
            if (std::find(cur.begin(), cur.end(), int(v)) != cur.end()) continue;
            cur.push_back(int(v));
            rec();
            cur.pop_back();
        }
    };
    rec();
}

struct LeafBuilder {
    const Signature& sig;
    const HypothesisClassConfig& cfg;
    Dist r_prime;

    // candidate literal: relation + distinct variable indices
    struct Atom {
        int rel;
        std::vector<int> vars;
    };

    // All atoms over `total` variables.
    std::vector<Atom> atom_pool(unsigned total) const {
        std::vector<Atom> pool;
        for (int r = 0; r < int(sig.size()); ++r) {
            unsigned a = sig.symbol(r).arity;
            if (a < 1 || a > cfg.caps.max_atom_arity || a > total) continue;
            std::vector<std::vector<int>> tuples;
            distinct_tuples(total, a, tuples);
            for (auto& t : tuples) pool.push_back({r, std::move(t)});
        }
        return pool;
    }

    // Positive literals over a cross pair that is not an edge of H cannot
    // hold under the delta conjunct (non-edges mean distance > 2r+1 >= 1).
    static bool compatible(const Atom& at, bool positive, const Graph& h) {
        if (!positive) return true;
        for (std::size_t i = 0; i < at.vars.size(); ++i)
            for (std::size_t j = i + 1; j < at.vars.size(); ++j) {
                if (at.vars[i] == at.vars[j]) continue;
                if (!h.edge(unsigned(at.vars[i]), unsigned(at.vars[j]))) return false;
            }
        return true;
    }

    CountingLeaf build(const std::vector<std::string>& xs,
                       const std::vector<std::string>& ys,
                       const std::vector<std::string>& zs,
                       const std::vector<std::pair<Atom, bool>>& lits,
                       const Graph& h) const {
        CountingLeaf leaf;
        leaf.xs = xs;
        leaf.ys = ys;
        leaf.zs = zs;
        std::vector<std::string> names = xs;
        names.insert(names.end(), ys.begin(), ys.end());
        names.insert(names.end(), zs.begin(), zs.end());
        std::vector<Lit> ls;
        for (const auto& [at, pos] : lits) {
            Lit l;
            l.positive = pos;
            l.rel = at.rel;
            l.vars = at.vars;
            ls.push_back(std::move(l));
        }
        leaf.psi = LocalFormula::lit_conj(names, std::move(ls));
        leaf.has_delta = true;
        leaf.h = h;
        leaf.threshold = Dist(2 * r_prime + 1);
        leaf.radius = r_prime;
        return leaf;
    }
};

// canonical z-permutation filter: keep a leaf only when no z-permutation
// yields a lexicographically smaller print (permuted copies go back through
// the sorted-conjunct normal form)
bool z_canonical(const CountingLeaf& leaf) {
    const unsigned m = leaf.kz();
    if (m < 2) return true;
    std::string self = leaf.print();
    std::vector<unsigned> perm(m);
    for (unsigned i = 0; i < m; ++i) perm[i] = i;
    const unsigned base = leaf.kx() + leaf.ky();
    while (std::next_permutation(perm.begin(), perm.end())) {
        std::vector<Lit> lits;
        for (const auto& part : leaf.psi.parts) {
            if (part.kind != Constituent::Kind::Lit) continue;
            Lit l = part.lit;
            for (int& v : l.vars)
                if (v >= int(base)) v = int(base + perm[std::size_t(v) - base]);
            lits.push_back(std::move(l));
        }
        CountingLeaf other = leaf;
        other.psi = LocalFormula::lit_conj(leaf.psi.var_names, std::move(lits));
        Graph h(other.h.size());
        for (unsigned j = 0; j < other.h.size(); ++j)
            for (unsigned i = 0; i < j; ++i) {
                if (!other.h.edge(i, j)) continue;
                auto mapv = [&](unsigned v) {
                    return v < base ? v : base + perm[v - base];
                };
                h.set_edge(mapv(i), mapv(j));
            }
        other.h = h;
        if (other.print() < self) return false;
    }
    return true;
}

}  // namespace

CTerm CandidateSpace::unit_term(std::size_t u) const {
    const Unit& un = units.at(u);
    std::vector<CTerm> factors;
    if (un.leaf >= 0) factors.push_back(CTerm::of_leaf(leaves[std::size_t(un.leaf)]));
    if (un.ground >= 0) factors.push_back(CTerm::of_leaf(ground[std::size_t(un.ground)]));
    return CTerm::product(std::move(factors));
}

CandidateSpace candidate_terms(const Signature& sigma_prime, std::size_t sigma_size,
                               const HypothesisClassConfig& cfg, Dist r_prime,
                               u64 degree) {
    (void)sigma_size;
    cfg.validate();
    CandidateSpace space;
    space.max_summands = cfg.caps.max_summands;
    LeafBuilder lb{sigma_prime, cfg, r_prime};

    std::set<std::string> seen;
    const unsigned k = cfg.k, l = cfg.l;
    for (u64 xmask = 0; xmask < (u64(1) << k); ++xmask) {
        for (u64 ymask = 0; ymask < (u64(1) << l); ++ymask) {
            std::vector<std::string> xs, ys;
            for (unsigned i = 0; i < k; ++i)
                if ((xmask >> i) & 1) xs.push_back("x" + std::to_string(i + 1));
            for (unsigned i = 0; i < l; ++i)
                if ((ymask >> i) & 1) ys.push_back("y" + std::to_string(i + 1));
            for (unsigned m = 0; m <= cfg.caps.max_count_vars; ++m) {
                const unsigned total = unsigned(xs.size() + ys.size()) + m;
                if (total == 0) continue;
                if (total > 6)
                    throw FormatError(
                        "candidate enumeration cap exceeded: a leaf over " +
                        std::to_string(total) + " variables is not enumerable (" +
                        std::to_string(space.leaves.size() + space.ground.size()) +
                        " leaves realized so far); lower k, l or max_count_vars");
                const bool is_ground = xs.empty() && ys.empty();
                if (is_ground && m == 0) continue;
                std::vector<std::string> zs = numbered("z", 1, m);
                auto pool = lb.atom_pool(total);
                for (const Graph& h : Graph::all_connected(total)) {
                    // enumerate bodies: subsets of signed literals, size <= P
                    std::vector<std::pair<LeafBuilder::Atom, bool>> lits;
                    std::function<void(std::size_t)> rec = [&](std::size_t from) {
                        // coverage rule: a nonempty body names every counted
                        // variable (an empty body is the bare pattern count)
                        bool covered = true;
                        if (!lits.empty()) {
                            for (unsigned zi = 0; zi < m && covered; ++zi) {
                                int var = int(total - m + zi);
                                covered = false;
                                for (const auto& [at, pos] : lits)
                                    if (std::find(at.vars.begin(), at.vars.end(), var) !=
                                        at.vars.end()) {
                                        covered = true;
                                        break;
                                    }
                            }
                        }
                        if (covered) {
                            CountingLeaf leaf = lb.build(xs, ys, zs, lits, h);
                            if (z_canonical(leaf)) {
                                std::string key = leaf.print();
                                if (seen.insert(key).second) {
                                    auto ptr =
                                        std::make_shared<const CountingLeaf>(std::move(leaf));
                                    (is_ground ? space.ground : space.leaves)
                                        .push_back(std::move(ptr));
                                }
                            }
                        }
                        if (lits.size() >= cfg.caps.max_literals) return;
                        for (std::size_t i = from; i < pool.size(); ++i) {
                            for (bool pos : {true, false}) {
                                if (!LeafBuilder::compatible(pool[i], pos, h)) continue;
                                lits.push_back({pool[i], pos});
                                rec(i + 1);
                                lits.pop_back();
                            }
                        }
                    };
                    rec(0);
                }
            }
        }
    }

    // integer pools: I plus [-1, min((l*nu_d((2r'+1)q))^q, cap)]
    u128 bound = 0;
    if (cfg.l > 0) {
        u128 base = u128(cfg.l) * nu(degree, u64(2 * r_prime + 1) * cfg.q);
        bound = 1;
        for (unsigned i = 0; i < cfg.q; ++i) bound = std::min(bound * base, kNuCap);
        if (cfg.q == 0) bound = 1;
    }
    space.int_pool_clamped = cfg.l > 0 && bound > u128(cfg.caps.int_pool_cap);
    i64 hi = i64(std::min<u128>(bound, cfg.caps.int_pool_cap));
    std::set<i64> consts(cfg.ints.begin(), cfg.ints.end());
    for (i64 v = -1; v <= hi; ++v) consts.insert(v);
    space.const_pool.assign(consts.begin(), consts.end());
    std::set<i64> coeffs = consts;
    coeffs.erase(0);
    coeffs.insert(1);
    space.coeff_pool.assign(coeffs.begin(), coeffs.end());

    // units: leaf | leaf*ground | ground
    for (int i = 0; i < int(space.leaves.size()); ++i) space.units.push_back({i, -1});
    if (cfg.caps.allow_ground_factors)
        for (int i = 0; i < int(space.leaves.size()); ++i)
            for (int g = 0; g < int(space.ground.size()); ++g)
                space.units.push_back({i, g});
    for (int g = 0; g < int(space.ground.size()); ++g) space.units.push_back({-1, g});

    // realized |T*| under the caps
    u128 t = u128(space.units.size()) * space.coeff_pool.size();
    u128 total = space.const_pool.size();  // bare constants
    total += t;                            // one summand
    if (cfg.caps.max_summands >= 2) {
        total += u128(space.const_pool.size()) * t;  // constant + summand
        total += t * (t + 1) / 2;                    // two summands
    }
    if (cfg.caps.max_summands >= 3) {
        total += u128(space.const_pool.size()) * (t * (t + 1) / 2);
        total += t * (t + 1) * (t + 2) / 6;
    }
    space.realized_terms = total;
    return space;
}

// ---------------------------------------------------------------- hypotheses

namespace {

json localform_to_json(const LocalFormula& f) {
    // hypothesis bodies are literal conjunctions by construction
    json lits = json::array();
    std::vector<int> leaves;
    f.skel.collect_leaves(leaves);
    for (int l : leaves) {
        const Constituent& c = f.parts[std::size_t(l)];
        FOCL_CHECK(c.kind == Constituent::Kind::Lit,
                   "hypothesis bodies must be literal conjunctions");
        lits.push_back({{"pos", c.lit.positive},
                        {"eq", c.lit.is_eq},
                        {"rel", c.lit.rel},
                        {"vars", c.lit.vars}});
    }
    return json{{"vars", f.var_names}, {"lits", lits}};
}

LocalFormula localform_from_json(const json& j) {
    std::vector<std::string> vars = j["vars"].get<std::vector<std::string>>();
    std::vector<Lit> lits;
    for (const auto& lj : j["lits"]) {
        Lit l;
        l.positive = lj["pos"].get<bool>();
        l.is_eq = lj["eq"].get<bool>();
        l.rel = lj["rel"].get<int>();
        l.vars = lj["vars"].get<std::vector<int>>();
        lits.push_back(std::move(l));
    }
    return LocalFormula::lit_conj(std::move(vars), std::move(lits));
}

json cterm_to_json(const CTerm& t) {
    switch (t.kind) {
        case CTerm::Kind::Const:
            return json{{"kind", "const"}, {"value", to_i64(t.value, "hypothesis constant")}};
        case CTerm::Kind::Leaf: {
            const CountingLeaf& l = *t.leaf;
            json edges = json::array();
            for (unsigned j = 0; j < l.h.size(); ++j)
                for (unsigned i = 0; i < j; ++i)
                    if (l.h.edge(i, j)) edges.push_back({i, j});
            return json{{"kind", "leaf"},
                        {"xs", l.xs},
                        {"ys", l.ys},
                        {"zs", l.zs},
                        {"psi", localform_to_json(l.psi)},
                        {"has_delta", l.has_delta},
                        {"edges", edges},
                        {"threshold", l.threshold},
                        {"radius", l.radius}};
        }
        case CTerm::Kind::Add:
        case CTerm::Kind::Mul: {
            json kids = json::array();
            for (const auto& k : t.kids) kids.push_back(cterm_to_json(k));
            return json{{"kind", t.kind == CTerm::Kind::Add ? "add" : "mul"},
                        {"kids", kids}};
        }
    }
    throw InternalError("unhandled term kind");
}

CTerm cterm_from_json(const json& j, const Signature& sig) {
    std::string kind = j["kind"].get<std::string>();
    if (kind == "const") return CTerm::constant(j["value"].get<i64>());
    if (kind == "leaf") {
        CountingLeaf leaf;
        leaf.xs = j["xs"].get<std::vector<std::string>>();
        leaf.ys = j["ys"].get<std::vector<std::string>>();
        leaf.zs = j["zs"].get<std::vector<std::string>>();
        leaf.psi = localform_from_json(j["psi"]);
        leaf.has_delta = j["has_delta"].get<bool>();
        leaf.h = Graph(unsigned(leaf.xs.size() + leaf.ys.size() + leaf.zs.size()));
        for (const auto& e : j["edges"])
            leaf.h.set_edge(e[0].get<unsigned>(), e[1].get<unsigned>());
        leaf.threshold = j["threshold"].get<Dist>();
        leaf.radius = j["radius"].get<Dist>();
        for (const auto& part : leaf.psi.parts)
            if (part.kind == Constituent::Kind::Lit && !part.lit.is_eq)
                FOCL_CHECK(part.lit.rel >= 0 && part.lit.rel < int(sig.size()),
                           "hypothesis references an unknown relation");
        return CTerm::of_leaf(std::make_shared<const CountingLeaf>(std::move(leaf)));
    }
    std::vector<CTerm> kids;
    for (const auto& kj : j["kids"]) kids.push_back(cterm_from_json(kj, sig));
    if (kind == "add") return CTerm::sum(std::move(kids));
    if (kind == "mul") return CTerm::product(std::move(kids));
    throw FormatError("unknown term node kind: " + kind);
}

}  // namespace

std::string Hypothesis::to_json(const IndexArtifact& ix) const {
    json j{{"version", 1},
           {"index_hash", index_hash},
           {"k", ix.cfg.k},
           {"l", ix.cfg.l},
           {"params", param_names},
           {"surface", surface},
           {"term", cterm_to_json(term)}};
    return j.dump(2);
}

Hypothesis Hypothesis::from_json(const std::string& text, const IndexArtifact& ix) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad hypothesis JSON: ") + e.what());
    }
    if (j.value("version", 0) != 1) throw FormatError("unsupported hypothesis version");
    Hypothesis h;
    h.index_hash = j["index_hash"].get<u64>();
    if (h.index_hash != ix.cfg_hash)
        throw FormatError("stale index: hypothesis was learned against a different index");
    h.param_names = j["params"].get<std::vector<std::string>>();
    for (const auto& name : h.param_names)
        h.params.push_back(ix.expanded.require_element(name));
    h.surface = j.value("surface", "");
    h.term = cterm_from_json(j["term"], ix.expanded.signature());
    return h;
}

// ---------------------------------------------------------------- learn

std::vector<std::vector<Elem>> parameter_candidates(const TrainingSet& s,
                                                    const IndexArtifact& ix,
                                                    AccessAudit& audit) {
    const unsigned l = ix.cfg.l;
    if (l == 0) return {{}};
    Access acc{&ix.expanded, &ix.gaifman, &audit};
    std::vector<Elem> entries;
    for (const auto& ex : s.examples)
        entries.insert(entries.end(), ex.tuple.begin(), ex.tuple.end());
    std::sort(entries.begin(), entries.end());
    entries.erase(std::unique(entries.begin(), entries.end()), entries.end());
    std::vector<Elem> n_set;
    if (!entries.empty()) {
        Dist radius = Dist(ix.threshold() * (ix.cfg.l + ix.cfg.q));
        n_set = acc.bounded_ball(entries, radius);
    } else if (ix.anchor) {
        n_set = {*ix.anchor};  // empty training set: fall back to the anchor
    }
    if (n_set.empty()) return {};
    u128 count = 1;
    for (unsigned i = 0; i < l; ++i) {
        count *= n_set.size();
        if (count > 2'000'000)
            throw Error("parameter space over the training neighborhood is too large (" +
                        std::to_string(n_set.size()) + "^" + std::to_string(l) +
                        " tuples); lower l or q");
    }
    std::vector<std::vector<Elem>> out;
    std::vector<std::size_t> idx(l, 0);
    for (;;) {
        std::vector<Elem> w(l);
        for (unsigned i = 0; i < l; ++i) w[i] = n_set[idx[i]];
        out.push_back(std::move(w));
        unsigned i = l;
        for (;;) {
            if (i == 0) return out;
            --i;
            if (++idx[i] < n_set.size()) break;
            idx[i] = 0;
        }
    }
}

namespace {

struct VecHash {
    std::size_t operator()(const std::vector<i128>& v) const {
        u64 h = 14695981039346656037ull;
        for (i128 x : v) {
            h = fnv1a_u64(u64(u128(x)), h);
            h = fnv1a_u64(u64(u128(x) >> 64), h);
        }
        return std::size_t(h);
    }
};

using VecMap = std::unordered_map<std::vector<i128>, std::vector<int>, VecHash>;

struct Summand {
    i64 coeff;
    int unit;  // -1 for a bare constant
};

// Canonical assembly: summands sorted by their printed form.
CTerm assemble(const CandidateSpace& space, std::vector<Summand> summands) {
    std::vector<CTerm> terms;
    for (const auto& s : summands) {
        if (s.unit < 0)
            terms.push_back(CTerm::constant(s.coeff));
        else
            terms.push_back(CTerm::scaled(s.coeff, space.unit_term(std::size_t(s.unit))));
    }
    std::sort(terms.begin(), terms.end(),
              [](const CTerm& a, const CTerm& b) { return a.print() < b.print(); });
    return CTerm::sum(std::move(terms));
}

std::string term_key(const CTerm& t) {
    std::size_t summands = t.kind == CTerm::Kind::Add ? t.kids.size() : 1;
    return std::to_string(summands) + "|" + t.print();
}

bool divides_vector(const std::vector<i128>& num, i64 den, std::vector<i128>& out) {
    out.resize(num.size());
    for (std::size_t i = 0; i < num.size(); ++i) {
        i128 q = num[i] / den;
        if (q * den != num[i]) return false;
        out[i] = q;
    }
    return true;
}

}  // namespace

LearnResult learn(const TrainingSet& s, const IndexArtifact& ix, AccessAudit& audit,
                  unsigned workers) {
    const AccessAudit::Snapshot before = audit.snapshot();
    if (auto bad = s.contradiction()) {
        std::string names;
        for (Elem e : *bad) names += (names.empty() ? "" : ",") + ix.expanded.name_of(e);
        return Reject{Reject::Reason::ContradictoryLabels,
                      "reject: contradictory labels for tuple (" + names + ")"};
    }
    for (const auto& ex : s.examples)
        if (ex.tuple.size() != ix.cfg.k)
            throw FormatError("training tuple arity does not match k");

    CandidateSpace space = candidate_terms(ix);
    std::vector<std::vector<Elem>> params = parameter_candidates(s, ix, audit);
    if (params.empty())
        return Reject{Reject::Reason::NoConsistentHypothesis,
                      "reject: no parameter tuple exists (empty universe)"};

    auto finish = [&](CTerm term, std::size_t param_idx) -> LearnResult {
        Hypothesis h;
        h.term = std::move(term);
        h.params = params[param_idx];
        for (Elem e : h.params) h.param_names.push_back(ix.expanded.name_of(e));
        h.index_hash = ix.cfg_hash;
        h.surface = h.term.pretty(ix.expanded.signature());
        FOCL_CHECK(audit.snapshot().global_scans == before.global_scans,
                   "learn phase performed a global scan");
        return h;
    };

    // vacuous consistency: the canonically first constant candidate
    if (s.examples.empty()) {
        FOCL_CHECK(!space.const_pool.empty(), "empty integer pool");
        i64 chosen = space.const_pool.front();
        std::string chosen_key = term_key(CTerm::constant(chosen));
        for (i64 c : space.const_pool) {
            std::string key = term_key(CTerm::constant(c));
            if (key < chosen_key) {
                chosen = c;
                chosen_key = key;
            }
        }
        return finish(CTerm::constant(chosen), 0);
    }

    const std::size_t ns = s.examples.size();
    std::vector<i128> lambda(ns);
    for (std::size_t i = 0; i < ns; ++i) lambda[i] = s.examples[i].label;

    // ground leaves resolve through the lookup table (never recomputed here)
    std::vector<i128> ground_val(space.ground.size());
    for (std::size_t g = 0; g < space.ground.size(); ++g) {
        auto it = ix.table.find(space.ground[g]->print());
        FOCL_CHECK(it != ix.table.end(), "ground candidate missing from the lookup table");
        ground_val[g] = it->second.value;
    }

    Access acc{&ix.expanded, &ix.gaifman, &audit};

    // parameter-independent rendering of every c * unit summand, so hits can
    // be key-compared without materializing terms
    const std::size_t nu_ = space.units.size();
    std::vector<std::string> unit_print(nu_);
    std::vector<std::map<i64, std::string>> summand_print(nu_);
    for (std::size_t u = 0; u < nu_; ++u) {
        CTerm t = space.unit_term(u);
        unit_print[u] = t.print();
        for (i64 c : space.coeff_pool)
            summand_print[u][c] = CTerm::scaled(c, space.unit_term(u)).print();
    }

    struct Hit {
        std::string key;
        std::size_t param = 0;
        std::vector<Summand> summands;
    };
    std::optional<Hit> best;
    auto offer = [&](std::string key, std::size_t param, std::vector<Summand> ss) {
        if (!best || key < best->key || (key == best->key && param < best->param))
            best = Hit{std::move(key), param, std::move(ss)};
    };
    auto key1 = [&](const std::string& summand) { return "1|" + summand; };
    auto key2 = [&](const std::string& a, const std::string& b) {
        const std::string& lo = a <= b ? a : b;
        const std::string& hi = a <= b ? b : a;
        return "2|(" + lo + " + " + hi + ")";
    };
    auto key3 = [&](std::string a, std::string b, std::string c) {
        std::array<std::string, 3> xs{std::move(a), std::move(b), std::move(c)};
        std::sort(xs.begin(), xs.end());
        return "3|(" + xs[0] + " + " + xs[1] + " + " + xs[2] + ")";
    };

    // cached per-parameter unit values and value buckets
    std::vector<std::vector<std::vector<i128>>> unit_val_cache(params.size());
    std::vector<VecMap> bucket_cache(params.size());
    std::vector<bool> cached(params.size(), false);
    auto matrices = [&](std::size_t p)
        -> std::pair<const std::vector<std::vector<i128>>&, const VecMap&> {
        if (!cached[p]) {
            const std::vector<Elem>& w = params[p];
            std::map<std::string, Elem> ctx;
            for (unsigned i = 0; i < ix.cfg.l; ++i)
                ctx["y" + std::to_string(i + 1)] = w[i];
            std::vector<std::vector<i128>> leaf_val(space.leaves.size(),
                                                    std::vector<i128>(ns));
            parallel_for(space.leaves.size(), workers,
                         [&](unsigned, std::size_t b, std::size_t e) {
                             for (std::size_t li = b; li < e; ++li) {
                                 const CountingLeaf& leaf = *space.leaves[li];
                                 for (std::size_t i = 0; i < ns; ++i) {
                                     std::map<std::string, Elem> cx = ctx;
                                     for (unsigned xi = 0; xi < ix.cfg.k; ++xi)
                                         cx["x" + std::to_string(xi + 1)] =
                                             s.examples[i].tuple[xi];
                                     auto [ax, by] = leaf_args(leaf, cx);
                                     leaf_val[li][i] = leaf.count_local(acc, ax, by);
                                 }
                             }
                         });
            auto& uv = unit_val_cache[p];
            uv.assign(nu_, std::vector<i128>(ns));
            for (std::size_t u = 0; u < nu_; ++u) {
                const auto& un = space.units[u];
                for (std::size_t i = 0; i < ns; ++i) {
                    i128 x = 1;
                    if (un.leaf >= 0) x = leaf_val[std::size_t(un.leaf)][i];
                    if (un.ground >= 0)
                        x = checked_mul(x, ground_val[std::size_t(un.ground)]);
                    uv[u][i] = x;
                }
            }
            auto& buckets = bucket_cache[p];
            for (std::size_t u = 0; u < nu_; ++u) buckets[uv[u]].push_back(int(u));
            cached[p] = true;
        }
        return {unit_val_cache[p], bucket_cache[p]};
    };

    // the canonically smallest c * u over a bucket of equal-valued units
    auto bucket_best = [&](const std::vector<int>& bucket, i64 c) {
        int unit = bucket[0];
        const std::string* s_min = &summand_print[std::size_t(unit)].at(c);
        for (std::size_t i = 1; i < bucket.size(); ++i) {
            const std::string& cand = summand_print[std::size_t(bucket[i])].at(c);
            if (cand < *s_min) {
                s_min = &cand;
                unit = bucket[i];
            }
        }
        return std::make_pair(unit, s_min);
    };

    std::vector<i128> target;
    // search level by level: every 1-summand key precedes every 2-summand key
    for (unsigned level = 1; level <= space.max_summands && !best; ++level) {
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto [uv, buckets] = matrices(p);
            auto lookup = [&](const std::vector<i128>& v) -> const std::vector<int>* {
                auto it = buckets.find(v);
                return it == buckets.end() ? nullptr : &it->second;
            };
            if (level == 1) {
                for (i64 c : space.const_pool) {
                    if (std::all_of(lambda.begin(), lambda.end(),
                                    [&](i128 v) { return v == i128(c); }))
                        offer(key1(i128_to_string(c)), p, {{c, -1}});
                }
                for (i64 c : space.coeff_pool) {
                    if (!divides_vector(lambda, c, target)) continue;
                    if (const auto* b = lookup(target)) {
                        auto [u, sp] = bucket_best(*b, c);
                        offer(key1(*sp), p, {{c, u}});
                    }
                }
            } else if (level == 2) {
                for (i64 c0 : space.const_pool) {
                    std::vector<i128> goal(ns);
                    for (std::size_t i = 0; i < ns; ++i) goal[i] = lambda[i] - c0;
                    for (i64 c : space.coeff_pool) {
                        if (!divides_vector(goal, c, target)) continue;
                        if (const auto* b = lookup(target)) {
                            auto [u, sp] = bucket_best(*b, c);
                            offer(key2(i128_to_string(c0), *sp), p, {{c0, -1}, {c, u}});
                        }
                    }
                }
                std::vector<i128> rest(ns);
                for (std::size_t u2 = 0; u2 < nu_; ++u2) {
                    for (i64 c2 : space.coeff_pool) {
                        for (std::size_t i = 0; i < ns; ++i)
                            rest[i] = lambda[i] - i128(c2) * uv[u2][i];
                        for (i64 c1 : space.coeff_pool) {
                            if (!divides_vector(rest, c1, target)) continue;
                            if (const auto* b = lookup(target)) {
                                auto [u1, sp] = bucket_best(*b, c1);
                                offer(key2(*sp, summand_print[u2].at(c2)), p,
                                      {{c1, u1}, {c2, int(u2)}});
                            }
                        }
                    }
                }
            } else {
                // level 3: constant + two units, or three units
                std::vector<i128> rest(ns), goal(ns);
                auto join2 = [&](const std::vector<i128>& base, const std::string& sfx,
                                 const std::vector<Summand>& prefix) {
                    for (std::size_t u2 = 0; u2 < nu_; ++u2) {
                        for (i64 c2 : space.coeff_pool) {
                            for (std::size_t i = 0; i < ns; ++i)
                                rest[i] = base[i] - i128(c2) * uv[u2][i];
                            for (i64 c1 : space.coeff_pool) {
                                if (!divides_vector(rest, c1, target)) continue;
                                if (const auto* b = lookup(target)) {
                                    auto [u1, sp] = bucket_best(*b, c1);
                                    std::vector<Summand> ss = prefix;
                                    ss.push_back({c1, u1});
                                    ss.push_back({c2, int(u2)});
                                    offer(key3(*sp, summand_print[u2].at(c2), sfx), p,
                                          std::move(ss));
                                }
                            }
                        }
                    }
                };
                for (i64 c0 : space.const_pool) {
                    for (std::size_t i = 0; i < ns; ++i) goal[i] = lambda[i] - c0;
                    std::vector<i128> base = goal;
                    join2(base, i128_to_string(c0), {{c0, -1}});
                }
                for (std::size_t u3 = 0; u3 < nu_; ++u3) {
                    for (i64 c3 : space.coeff_pool) {
                        for (std::size_t i = 0; i < ns; ++i)
                            goal[i] = lambda[i] - i128(c3) * uv[u3][i];
                        join2(goal, summand_print[u3].at(c3), {{c3, int(u3)}});
                    }
                }
            }
        }
    }

    if (!best)
        return Reject{Reject::Reason::NoConsistentHypothesis,
                      "reject: no candidate hypothesis is consistent with the training set"};
    CTerm winner = assemble(space, best->summands);
    FOCL_CHECK(term_key(winner) == best->key, "canonical key mismatch in hit assembly");
    return finish(std::move(winner), best->param);
}

i128 evaluate_hypothesis(const Hypothesis& h, const IndexArtifact& ix,
                         std::span<const Elem> tuple, AccessAudit& audit) {
    if (h.index_hash != ix.cfg_hash)
        throw FormatError("stale index: hypothesis was learned against a different index");
    if (tuple.size() != ix.cfg.k) throw FormatError("tuple arity does not match k");
    const AccessAudit::Snapshot before = audit.snapshot();
    std::map<std::string, Elem> ctx;
    for (unsigned i = 0; i < ix.cfg.k; ++i) ctx["x" + std::to_string(i + 1)] = tuple[i];
    for (unsigned i = 0; i < ix.cfg.l; ++i) ctx["y" + std::to_string(i + 1)] = h.params[i];
    Access acc{&ix.expanded, &ix.gaifman, &audit};
    i128 out = h.term.eval([&](const CountingLeaf& leaf) -> i128 {
        if (leaf.ground()) {
            auto it = ix.table.find(leaf.print());
            FOCL_CHECK(it != ix.table.end(), "ground subterm missing from the lookup table");
            return it->second.value;
        }
        auto [ax, by] = leaf_args(leaf, ctx);
        return leaf.count_local(acc, ax, by);
    });
    FOCL_CHECK(audit.snapshot().global_scans == before.global_scans,
               "hypothesis evaluation performed a global scan");
    return out;
}

}  // namespace focl

#include "focl/locality.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>

#include <json.hpp>

#include "focl/eval.hpp"

namespace focl {

using nlohmann::json;

// ---------------------------------------------------------------- nu

u128 nu(u64 d, u64 r) {
    if (d == 0 || r == 0) return 1;
    u128 sum = 0;  // sum_{0 <= i < r} (d-1)^i
    u128 pow = 1;
    for (u64 i = 0; i < r; ++i) {
        sum += pow;
        if (sum >= kNuCap) return kNuCap;
        if (d > 1) {
            pow *= (d - 1);
            if (pow >= kNuCap) pow = kNuCap;
        } else {
            pow = 0;
        }
    }
    u128 out = 1 + u128(d) * sum;
    return out >= kNuCap ? kNuCap : out;
}

u64 nu_clamped(u64 d, u64 r, u64 cap) {
    u128 v = nu(d, r);
    if (v > u128(cap)) return cap;
    return u64(v);
}

// ---------------------------------------------------------------- Graph

Graph::Graph(unsigned n) : n_(n) {
    FOCL_CHECK(n <= kMaxGraphVertices, "graph too large");
}

unsigned Graph::pair_index(unsigned i, unsigned j) {
    if (i > j) std::swap(i, j);
    return j * (j - 1) / 2 + i;
}

bool Graph::edge(unsigned i, unsigned j) const {
    FOCL_CHECK(i < n_ && j < n_, "vertex out of range");
    if (i == j) return false;
    return (bits_ >> pair_index(i, j)) & 1;
}

void Graph::set_edge(unsigned i, unsigned j, bool on) {
    FOCL_CHECK(i < n_ && j < n_ && i != j, "bad edge");
    u128 bit = u128(1) << pair_index(i, j);
    if (on)
        bits_ |= bit;
    else
        bits_ &= ~bit;
}

Graph Graph::from_bits(unsigned n, u128 bits) {
    Graph g(n);
    g.bits_ = bits;
    return g;
}

std::vector<int> Graph::component_ids() const {
    std::vector<int> comp(n_, -1);
    int next = 0;
    for (unsigned s = 0; s < n_; ++s) {
        if (comp[s] != -1) continue;
        comp[s] = next;
        std::vector<unsigned> stack{s};
        while (!stack.empty()) {
            unsigned v = stack.back();
            stack.pop_back();
            for (unsigned w = 0; w < n_; ++w)
                if (comp[w] == -1 && edge(v, w)) {
                    comp[w] = next;
                    stack.push_back(w);
                }
        }
        ++next;
    }
    return comp;
}

bool Graph::connected() const {
    if (n_ <= 1) return true;
    auto comp = component_ids();
    return std::all_of(comp.begin(), comp.end(), [](int c) { return c == 0; });
}

Graph Graph::induced(const std::vector<unsigned>& keep) const {
    Graph g(unsigned(keep.size()));
    for (unsigned i = 0; i < keep.size(); ++i)
        for (unsigned j = i + 1; j < keep.size(); ++j)
            if (edge(keep[i], keep[j])) g.set_edge(i, j);
    return g;
}

std::string Graph::print() const {
    std::string s = "G" + std::to_string(n_) + "[";
    bool first = true;
    for (unsigned j = 0; j < n_; ++j)
        for (unsigned i = 0; i < j; ++i)
            if (edge(i, j)) {
                if (!first) s += ",";
                s += std::to_string(i) + "-" + std::to_string(j);
                first = false;
            }
    return s + "]";
}

std::vector<Graph> Graph::all(unsigned n) {
    Graph proto(n);
    unsigned pairs = proto.num_pairs();
    FOCL_CHECK(pairs <= 24, "too many graphs to enumerate");
    std::vector<Graph> out;
    out.reserve(std::size_t(1) << pairs);
    for (u64 bits = 0; bits < (u64(1) << pairs); ++bits)
        out.push_back(from_bits(n, bits));
    return out;
}

std::vector<Graph> Graph::all_connected(unsigned n) {
    std::vector<Graph> out;
    for (const Graph& g : all(n))
        if (g.connected()) out.push_back(g);
    return out;
}

// ---------------------------------------------------------------- dist / delta

namespace {

// Some relation tuple holds both a and b: the adjacency step of dist
// formulas (it also fires when a = b occurs in a tuple, which is harmless
// under the x=y base case).
ExprPtr adjacency_formula(const Signature& sig, const std::string& a,
                          const std::string& b) {
    std::vector<ExprPtr> cases;
    for (int r = 0; r < int(sig.size()); ++r) {
        const RelSym& sym = sig.symbol(r);
        if (sym.arity < 2) continue;
        for (unsigned i = 0; i < sym.arity; ++i) {
            for (unsigned j = 0; j < sym.arity; ++j) {
                if (i == j) continue;
                std::vector<std::string> vars(sym.arity);
                std::vector<std::string> bound;
                for (unsigned p = 0; p < sym.arity; ++p) {
                    if (p == i)
                        vars[p] = a;
                    else if (p == j)
                        vars[p] = b;
                    else {
                        std::string v = "ad" + std::to_string(p + 1);
                        while (v == a || v == b) v += "q";
                        vars[p] = v;
                        bound.push_back(v);
                    }
                }
                ExprPtr f = Expr::atom(sym.name, vars);
                for (auto it = bound.rbegin(); it != bound.rend(); ++it)
                    f = Expr::exists(*it, f);
                cases.push_back(f);
            }
        }
    }
    if (cases.empty()) return Expr::falsity();
    ExprPtr f = cases[0];
    for (std::size_t i = 1; i < cases.size(); ++i) f = Expr::disjunction(f, cases[i]);
    return f;
}

}  // namespace

ExprPtr dist_formula(const Signature& sig, Dist r, const std::string& x,
                     const std::string& y) {
    if (r == 0) return Expr::equality(x, y);
    std::string hop = "dh" + std::to_string(r);
    while (hop == x || hop == y) hop += "q";
    ExprPtr tail = dist_formula(sig, r - 1, hop, y);
    ExprPtr step =
        Expr::exists(hop, Expr::conjunction(adjacency_formula(sig, x, hop), tail));
    return Expr::disjunction(Expr::equality(x, y), step);
}

ExprPtr delta_formula(const Signature& sig, const ComponentPattern& p,
                      const std::vector<std::string>& vars) {
    FOCL_CHECK(vars.size() == p.g.size(), "delta: one variable per vertex");
    std::vector<ExprPtr> conj;
    for (unsigned j = 0; j < p.g.size(); ++j) {
        for (unsigned i = 0; i < j; ++i) {
            ExprPtr d = dist_formula(sig, p.threshold, vars[i], vars[j]);
            conj.push_back(p.g.edge(i, j) ? d : Expr::negation(d));
        }
    }
    return Expr::conjunction(conj);
}

bool delta_holds(const GaifmanIndex& g, const ComponentPattern& p,
                 std::span<const Elem> tuple) {
    FOCL_CHECK(tuple.size() == p.g.size(), "delta: one element per vertex");
    for (unsigned j = 0; j < p.g.size(); ++j) {
        for (unsigned i = 0; i < j; ++i) {
            Dist d = distance(g, tuple[i], tuple[j], p.threshold + 1);
            bool close = d <= p.threshold;
            if (close != p.g.edge(i, j)) return false;
        }
    }
    return true;
}

// ---------------------------------------------------------------- canonical types

namespace {

struct Canonizer {
    const Structure& s;
    Elem center;
    std::size_t n;
    std::vector<std::vector<std::pair<int, std::uint32_t>>> occurrences;

    explicit Canonizer(const Structure& st, Elem c)
        : s(st), center(c), n(st.universe_size()) {
        occurrences.resize(n);
        for (int r = 0; r < int(s.signature().size()); ++r) {
            const auto& tuples = s.relation(r).tuples;
            for (std::uint32_t t = 0; t < tuples.size(); ++t) {
                std::set<Elem> seen(tuples[t].begin(), tuples[t].end());
                for (Elem e : seen) occurrences[e].push_back({r, t});
            }
        }
    }

    std::vector<int> refine(std::vector<int> color) const {
        while (true) {
            std::vector<std::string> sigs(n);
            for (Elem v = 0; v < n; ++v) {
                std::ostringstream os;
                os << color[v] << '|';
                std::vector<std::string> occ;
                for (auto [r, t] : occurrences[v]) {
                    std::ostringstream to;
                    to << r << ':';
                    for (Elem e : s.relation(r).tuples[t])
                        to << (e == v ? -1 : color[e]) << ',';
                    occ.push_back(to.str());
                }
                std::sort(occ.begin(), occ.end());
                for (const auto& o : occ) os << o << ';';
                sigs[v] = os.str();
            }
            std::map<std::string, int> ids;
            for (Elem v = 0; v < n; ++v) ids.emplace(sigs[v], 0);
            int k = 0;
            for (auto& [key, id] : ids) id = k++;
            std::vector<int> next(n);
            for (Elem v = 0; v < n; ++v) next[v] = ids[sigs[v]];
            if (next == color) return color;
            color = std::move(next);
        }
    }

    std::string certificate(const std::vector<Elem>& order) const {
        std::vector<int> rank(n);
        for (std::size_t i = 0; i < n; ++i) rank[order[i]] = int(i);
        std::ostringstream os;
        os << 'n' << n << 'c' << rank[center] << '/';
        for (int r = 0; r < int(s.signature().size()); ++r) {
            const RelSym& sym = s.signature().symbol(r);
            os << sym.name << '#' << sym.arity << '{';
            std::vector<std::string> ts;
            for (const Tuple& t : s.relation(r).tuples) {
                std::string e;
                for (Elem x : t) e += std::to_string(rank[x]) + ".";
                ts.push_back(e);
            }
            std::sort(ts.begin(), ts.end());
            for (const auto& t : ts) os << t << '|';
            os << '}';
        }
        return os.str();
    }

    std::string search(std::vector<int> color) const {
        color = refine(std::move(color));
        std::map<int, std::vector<Elem>> cells;
        for (Elem v = 0; v < n; ++v) cells[color[v]].push_back(v);
        const std::vector<Elem>* split = nullptr;
        for (auto& [c, mem] : cells)
            if (mem.size() > 1) {
                split = &mem;
                break;
            }
        if (!split) {
            std::vector<Elem> order(n);
            for (Elem v = 0; v < n; ++v) order[std::size_t(color[v])] = v;
            return certificate(order);
        }
        std::string best;
        for (Elem m : *split) {
            std::vector<int> c2 = color;
            for (Elem v = 0; v < n; ++v) c2[v] = 2 * c2[v] + 2;
            c2[m] = 0;
            std::string cand = search(std::move(c2));
            if (best.empty() || cand < best) best = cand;
        }
        return best;
    }
};

}  // namespace

std::string canonical_key(const Structure& s, Elem center) {
    FOCL_CHECK(center < s.universe_size(), "center outside universe");
    FOCL_CHECK(s.universe_size() <= 512, "neighborhood too large to canonicalize");
    Canonizer cz(s, center);
    std::size_t n = s.universe_size();
    std::vector<std::string> init(n);
    for (Elem v = 0; v < n; ++v) {
        std::string key = v == center ? "C" : "c";
        for (int r = 0; r < int(s.signature().size()); ++r)
            if (s.signature().symbol(r).arity == 1)
                key += s.relation(r).contains({v}) ? '1' : '0';
        init[v] = key;
    }
    std::map<std::string, int> ids;
    for (auto& k : init) ids.emplace(k, 0);
    int next = 0;
    for (auto& [k, id] : ids) id = next++;
    std::vector<int> color(n);
    for (Elem v = 0; v < n; ++v) color[v] = ids[init[v]];
    return cz.search(std::move(color));
}

TypeIndex compute_types(const Structure& s, const GaifmanIndex& g, Dist radius,
                        unsigned workers) {
    TypeIndex t;
    t.radius = radius;
    std::size_t n = s.universe_size();
    std::vector<std::string> keys(n);
    std::vector<Structure> hoods(n);
    std::vector<Elem> centers(n);
    parallel_for(n, workers, [&](unsigned, std::size_t b, std::size_t e) {
        for (std::size_t v = b; v < e; ++v) {
            Elem ev = Elem(v);
            Structure hood =
                induced_neighborhood(s, g, std::span<const Elem>(&ev, 1), radius);
            Elem c = hood.require_element(s.name_of(ev));
            keys[v] = canonical_key(hood, c);
            hoods[v] = std::move(hood);
            centers[v] = c;
        }
    });
    std::map<std::string, int> ids;
    t.type_of.resize(n);
    for (std::size_t v = 0; v < n; ++v) {
        auto [it, fresh] = ids.emplace(keys[v], int(t.rep.size()));
        if (fresh) {
            t.rep.push_back(std::move(hoods[v]));
            t.rep_center.push_back(centers[v]);
            t.count.push_back(0);
        }
        t.type_of[v] = it->second;
        ++t.count[std::size_t(it->second)];
    }
    return t;
}

// ---------------------------------------------------------------- localise

namespace {

// Recognizes (possibly desugared) conjunctions of literals; empty result
// encodes "true". Returns nullopt outside that shape.
std::optional<std::vector<std::pair<bool, const Expr*>>> flatten_literals(const Expr& e) {
    using Out = std::vector<std::pair<bool, const Expr*>>;
    if (Expr::is_truth(e)) return Out{};
    switch (e.kind) {
        case NodeKind::Equality:
        case NodeKind::Atom:
            return Out{{true, &e}};
        case NodeKind::Not: {
            const Expr& inner = *e.children[0];
            if (inner.kind == NodeKind::Equality || inner.kind == NodeKind::Atom)
                return Out{{false, &inner}};
            if (inner.kind == NodeKind::Not) return flatten_literals(*inner.children[0]);
            // !(!(a) | !(b)) is the desugared (a & b)
            if (inner.kind == NodeKind::Or) {
                const Expr& l = *inner.children[0];
                const Expr& r = *inner.children[1];
                if (l.kind == NodeKind::Not && r.kind == NodeKind::Not) {
                    auto a = flatten_literals(*l.children[0]);
                    auto b = flatten_literals(*r.children[0]);
                    if (a && b) {
                        a->insert(a->end(), b->begin(), b->end());
                        return a;
                    }
                }
            }
            return std::nullopt;
        }
        default:
            return std::nullopt;
    }
}

struct HanfLocaliser {
    const Structure& A;
    const GaifmanIndex& G;
    const LocaliseMode& mode;
    const NumericalPredicateRegistry& reg;
    std::string prefix;
    unsigned workers;

    Signature sig_prime;
    std::vector<AddedSymbol> added;
    Structure A_cur;  // base structure expanded by the symbols added so far
    LocalFormula lf;  // shared variable table + constituents under construction
    std::map<std::string, int> scope;

    std::map<Dist, TypeIndex> types;  // sigma-neighborhood types of the base structure
    std::map<std::pair<Dist, int>, int> type_sym;  // (radius, type) -> symbol id
    std::map<int, Dist> sym_sem_radius;            // added symbol -> defining radius
    std::map<std::string, int> fact_sym;           // cache key -> symbol id
    int n_type_syms = 0, n_fact_syms = 0;

    HanfLocaliser(const Structure& a, const GaifmanIndex& g, const LocaliseMode& m,
                  const NumericalPredicateRegistry& r, std::string pfx, unsigned w)
        : A(a), G(g), mode(m), reg(r), prefix(std::move(pfx)), workers(w),
          sig_prime(A.signature().symbols()) {
        A_cur = A.expand(sig_prime, {});
    }

    void rebuild_expansion() {
        std::vector<Relation> rels;
        for (auto& a : added) rels.push_back(a.content);
        A_cur = A.expand(sig_prime, std::move(rels));
    }

    const TypeIndex& type_index(Dist r) {
        auto it = types.find(r);
        if (it == types.end()) it = types.emplace(r, compute_types(A, G, r, workers)).first;
        return it->second;
    }

    int symbol_for_type(Dist r, int type) {
        auto key = std::make_pair(r, type);
        auto it = type_sym.find(key);
        if (it != type_sym.end()) return it->second;
        const TypeIndex& ti = type_index(r);
        std::string name = "_" + prefix + "T" + std::to_string(n_type_syms++);
        int id = sig_prime.add(name, 1);
        Relation rel;
        rel.arity = 1;
        for (Elem v = 0; v < A.universe_size(); ++v)
            if (ti.type_of[v] == type) {
                rel.tuples.push_back({v});
                rel.set.insert({v});
            }
        added.push_back({{name, 1}, std::move(rel)});
        type_sym.emplace(key, id);
        sym_sem_radius[id] = r;
        rebuild_expansion();
        return id;
    }

    int symbol_for_fact(bool truth, const std::string& cache_key) {
        auto it = fact_sym.find(cache_key);
        if (it != fact_sym.end()) return it->second;
        std::string name = "_" + prefix + "F" + std::to_string(n_fact_syms++);
        int id = sig_prime.add(name, 0);
        Relation rel;
        rel.arity = 0;
        if (truth) {
            rel.tuples.push_back({});
            rel.set.insert(Tuple{});
        }
        added.push_back({{name, 0}, std::move(rel)});
        fact_sym.emplace(cache_key, id);
        rebuild_expansion();
        return id;
    }

    // sigma-semantic determination radius: how far into the *base* structure
    // one must look to fix a constituent's truth. Type-predicate atoms carry
    // their defining radius; everything else follows the locality radius.
    Dist sem_radius_of_part(const Constituent& c) const {
        switch (c.kind) {
            case Constituent::Kind::Lit: {
                if (c.lit.is_eq || c.lit.rel < 0) return 0;
                auto it = sym_sem_radius.find(c.lit.rel);
                return it == sym_sem_radius.end() ? 1 : it->second;
            }
            case Constituent::Kind::Dist:
                return c.bound;
            case Constituent::Kind::NearCount: {
                Dist m = 0;
                for (int sym : c.type_syms) {
                    auto it = sym_sem_radius.find(sym);
                    m = std::max(m, it == sym_sem_radius.end() ? Dist(1) : it->second);
                }
                return c.bound + m;
            }
            case Constituent::Kind::Global:
                return 0;
            case Constituent::Kind::ExistsNear:
                return c.bound + sem_radius_of(*c.inner);
            case Constituent::Kind::Opaque:
                return c.declared_radius;
        }
        return 0;
    }

    Dist sem_radius_of(const LocalFormula& f) const {
        Dist r = 0;
        std::vector<int> leaves;
        f.skel.collect_leaves(leaves);
        for (int l : leaves) r = std::max(r, sem_radius_of_part(f.parts[std::size_t(l)]));
        return r;
    }

    // Classifies a single-variable formula over the current expansion:
    // evaluates it locally at every element, checks that the extension is a
    // union of sigma-type classes at `sem`, and returns the satisfied types.
    std::vector<int> classify(const LocalFormula& f, int var, Dist sem,
                              std::vector<bool>* extension_out = nullptr) {
        if (sem > mode.radius_cap)
            throw LocalityError("subformula radius " + std::to_string(sem) +
                                " exceeds the localisation radius cap " +
                                std::to_string(mode.radius_cap));
        std::size_t n = A.universe_size();
        std::vector<bool> ext(n, false);
        // additions have arity <= 1, so the base Gaifman graph still applies
        Access acc{&A_cur, &G, nullptr};
        parallel_for(n, workers, [&](unsigned, std::size_t b, std::size_t e) {
            std::vector<Elem> assignment(lf.var_names.size(), kNoElem);
            for (std::size_t v = b; v < e; ++v) {
                assignment[std::size_t(var)] = Elem(v);
                ext[v] = f.eval(acc, assignment);
            }
        });
        const TypeIndex& ti = type_index(sem);
        std::vector<int> seen(std::size_t(ti.num_types()), -1);
        for (std::size_t v = 0; v < n; ++v) {
            int t = ti.type_of[v];
            int val = ext[v] ? 1 : 0;
            if (seen[std::size_t(t)] == -1)
                seen[std::size_t(t)] = val;
            else
                FOCL_CHECK(seen[std::size_t(t)] == val,
                           "type classes disagree with local evaluation (radius "
                           "bookkeeping bug)");
        }
        std::vector<int> sat;
        for (int t = 0; t < ti.num_types(); ++t)
            if (seen[std::size_t(t)] == 1) sat.push_back(t);
        if (extension_out) *extension_out = std::move(ext);
        return sat;
    }

    Dist reachable_radius(const Skeleton& sk) const {
        std::vector<int> leaves;
        sk.collect_leaves(leaves);
        Dist r = 0;
        for (int l : leaves) r = std::max(r, lf.parts[std::size_t(l)].radius());
        return r;
    }

    std::vector<int> reachable_vars(const Skeleton& sk) const {
        std::vector<int> leaves;
        sk.collect_leaves(leaves);
        std::set<int> vs;
        for (int l : leaves)
            for (int v : lf.parts[std::size_t(l)].free_vars()) vs.insert(v);
        return {vs.begin(), vs.end()};
    }

    int fresh_var(const std::string& base) {
        std::string name = base;
        int suffix = 1;
        while (std::find(lf.var_names.begin(), lf.var_names.end(), name) !=
               lf.var_names.end())
            name = base + "_" + std::to_string(++suffix);
        lf.var_names.push_back(name);
        return int(lf.var_names.size()) - 1;
    }

    // ---- fragment analysis for counting terms inside numerical predicates

    // Witness radius of #zs.(literal conjunction) around x: every counted
    // variable must be chained to x through positive literals.
    std::optional<Dist> count_witness_radius(const Expr& count, const std::string& x) {
        auto lits = flatten_literals(*count.children[0]);
        if (!lits) return std::nullopt;
        std::vector<std::string> nodes = {x};
        for (const auto& z : count.vars) nodes.push_back(z);
        auto node_id = [&](const std::string& v) -> int {
            for (std::size_t i = 0; i < nodes.size(); ++i)
                if (nodes[i] == v) return int(i);
            return -1;
        };
        std::vector<Dist> dist(nodes.size(), kInfDist);
        dist[0] = 0;
        for (bool changed = true; changed;) {
            changed = false;
            for (const auto& [pos, lit] : *lits) {
                if (!pos) continue;
                Dist w = lit->kind == NodeKind::Equality ? 0 : 1;
                const auto& vs = lit->vars;
                for (const auto& va : vs) {
                    int ia = node_id(va);
                    if (ia < 0 || dist[std::size_t(ia)] == kInfDist) continue;
                    for (const auto& vb : vs) {
                        int ib = node_id(vb);
                        if (ib < 0) continue;
                        Dist nd = dist[std::size_t(ia)] + w;
                        if (nd < dist[std::size_t(ib)]) {
                            dist[std::size_t(ib)] = nd;
                            changed = true;
                        }
                    }
                }
            }
        }
        Dist r = 0;
        for (std::size_t i = 1; i < nodes.size(); ++i) {
            if (dist[i] == kInfDist) return std::nullopt;
            r = std::max(r, dist[i]);
        }
        return r;
    }

    std::optional<Dist> term_witness_radius(const Expr& t, const std::string& x) {
        switch (t.kind) {
            case NodeKind::IntConst:
                return Dist(0);
            case NodeKind::Add:
            case NodeKind::Mul: {
                auto a = term_witness_radius(*t.children[0], x);
                auto b = term_witness_radius(*t.children[1], x);
                if (!a || !b) return std::nullopt;
                return std::max(*a, *b);
            }
            case NodeKind::Count:
                if (t.free_vars().empty()) return Dist(0);  // ground subterm
                return count_witness_radius(t, x);
            default:
                return std::nullopt;
        }
    }

    // ---- main recursion

    Skeleton loc(const Expr& e, unsigned depth) {
        switch (e.kind) {
            case NodeKind::Equality: {
                Constituent c;
                c.kind = Constituent::Kind::Lit;
                c.lit = {true, true, -1, {var_of(e.vars[0]), var_of(e.vars[1])}};
                return Skeleton::leaf_of(lf.add_part(std::move(c)));
            }
            case NodeKind::Atom: {
                int rel = sig_prime.require(e.rel_name);
                if (sig_prime.symbol(rel).arity != e.vars.size())
                    throw LocalityError("arity mismatch in atom " + e.rel_name);
                if (sig_prime.symbol(rel).arity == 0) {
                    Constituent c;
                    c.kind = Constituent::Kind::Global;
                    c.sym0 = rel;
                    return Skeleton::leaf_of(lf.add_part(std::move(c)));
                }
                Constituent c;
                c.kind = Constituent::Kind::Lit;
                c.lit.positive = true;
                c.lit.is_eq = false;
                c.lit.rel = rel;
                for (const auto& v : e.vars) c.lit.vars.push_back(var_of(v));
                return Skeleton::leaf_of(lf.add_part(std::move(c)));
            }
            case NodeKind::Not:
                return Skeleton::negate(loc(*e.children[0], depth));
            case NodeKind::Or:
                return Skeleton::disj(loc(*e.children[0], depth),
                                      loc(*e.children[1], depth));
            case NodeKind::NumPred:
                return loc_numpred(e);
            case NodeKind::Exists:
                return loc_exists(e, depth);
            default:
                throw LocalityError("localise expects a formula");
        }
    }

    int var_of(const std::string& name) {
        auto it = scope.find(name);
        if (it == scope.end()) throw LocalityError("variable out of scope: " + name);
        return it->second;
    }

    Skeleton loc_numpred(const Expr& e) {
        const auto& fv = e.free_vars();
        if (fv.empty()) {
            // ground numerical fact: evaluate once, store as a 0-ary atom
            Interpretation it{&A, {}};
            EvalSession session(reg);
            bool truth = eval_formula(e, it, session);
            int sym = symbol_for_fact(truth, "P:" + print(e));
            Constituent c;
            c.kind = Constituent::Kind::Global;
            c.sym0 = sym;
            return Skeleton::leaf_of(lf.add_part(std::move(c)));
        }
        const std::string& x = fv[0];
        Dist rho = 0;
        for (const auto& arg : e.children) {
            auto r = term_witness_radius(*arg, x);
            if (!r)
                throw LocalityError(
                    "unsupported fragment: a counting term inside a numerical predicate "
                    "does not chain its counted variables to the free variable; use "
                    "already_local mode instead");
            rho = std::max(rho, *r);
        }
        if (rho > mode.radius_cap)
            throw LocalityError("witness radius exceeds the localisation radius cap");
        // truth at v is determined by the rho-neighborhood of v: evaluate it
        // there for every element, then express the extension through types
        std::size_t n = A.universe_size();
        std::vector<bool> ext(n, false);
        parallel_for(n, workers, [&](unsigned, std::size_t b, std::size_t en) {
            for (std::size_t v = b; v < en; ++v) {
                Elem ev = Elem(v);
                Structure hood =
                    induced_neighborhood(A, G, std::span<const Elem>(&ev, 1), rho);
                Interpretation it{&hood, {{x, hood.require_element(A.name_of(ev))}}};
                EvalSession session(reg);
                ext[v] = eval_formula(e, it, session);
            }
        });
        const TypeIndex& ti = type_index(rho);
        std::vector<int> seen(std::size_t(ti.num_types()), -1);
        for (std::size_t v = 0; v < n; ++v) {
            int t = ti.type_of[v];
            int val = ext[v] ? 1 : 0;
            if (seen[std::size_t(t)] == -1)
                seen[std::size_t(t)] = val;
            else
                FOCL_CHECK(seen[std::size_t(t)] == val,
                           "numerical predicate not type-determined at its witness radius");
        }
        std::vector<Skeleton> alts;
        for (int t = 0; t < ti.num_types(); ++t) {
            if (seen[std::size_t(t)] != 1) continue;
            Constituent c;
            c.kind = Constituent::Kind::Lit;
            c.lit = {true, false, symbol_for_type(rho, t), {var_of(x)}};
            alts.push_back(Skeleton::leaf_of(lf.add_part(std::move(c))));
        }
        return Skeleton::disj_all(std::move(alts));
    }

    Skeleton loc_exists(const Expr& e, unsigned depth) {
        if (depth + 1 > mode.quantifier_cap)
            throw LocalityError("quantifier depth exceeds the localisation cap");
        const std::string& name = e.vars[0];
        int z = fresh_var(name);
        auto old = scope.find(name);
        std::optional<int> saved =
            old != scope.end() ? std::optional<int>(old->second) : std::nullopt;
        scope[name] = z;
        Skeleton inner = loc(*e.children[0], depth + 1);
        if (saved)
            scope[name] = *saved;
        else
            scope.erase(name);

        if (inner.is_false()) return Skeleton::falsity();
        std::vector<int> used = reachable_vars(inner);
        if (!std::binary_search(used.begin(), used.end(), z)) {
            // exists z phi with z unused: phi on a nonempty universe
            Constituent c;
            c.kind = Constituent::Kind::Global;
            c.sym0 = symbol_for_fact(A.universe_size() > 0, "@nonempty");
            return Skeleton::conj(inner, Skeleton::leaf_of(lf.add_part(std::move(c))));
        }
        std::vector<int> anchors;
        for (int v : used)
            if (v != z) anchors.push_back(v);

        LocalFormula inner_lf;
        inner_lf.var_names = lf.var_names;
        inner_lf.parts = lf.parts;
        inner_lf.skel = inner;

        if (anchors.empty()) {
            // sentence: some element satisfies a single-variable local formula
            Dist sem = sem_radius_of(inner_lf);
            std::vector<bool> ext;
            classify(inner_lf, z, sem, &ext);
            bool truth = std::find(ext.begin(), ext.end(), true) != ext.end();
            int sym = symbol_for_fact(
                truth, "E:" + std::to_string(sem) + ":" + inner_lf.print());
            Constituent c;
            c.kind = Constituent::Kind::Global;
            c.sym0 = sym;
            return Skeleton::leaf_of(lf.add_part(std::move(c)));
        }

        std::optional<Dist> forced = forced_nearness(inner, z, anchors);
        if (forced) {
            Constituent en;
            en.kind = Constituent::Kind::ExistsNear;
            en.anchors = anchors;
            en.bound = *forced;
            en.quant_var = z;
            en.inner = std::make_shared<const LocalFormula>(std::move(inner_lf));
            return maybe_type_rewrite(std::move(en));
        }

        // far witnesses: Hanf threshold rewriting
        Dist r0 = reachable_radius(inner);
        Dist D = 2 * r0 + 1;

        Constituent near;
        near.kind = Constituent::Kind::ExistsNear;
        near.anchors = anchors;
        near.bound = D;
        near.quant_var = z;
        near.inner = std::make_shared<const LocalFormula>(inner_lf);
        Skeleton near_sk = maybe_type_rewrite(std::move(near));

        std::vector<int> side_of(lf.var_names.size(), -1);
        for (int v : anchors) side_of[std::size_t(v)] = 0;
        side_of[std::size_t(z)] = 1;
        LocalFormula sep = separate(inner_lf, side_of, D);

        std::vector<int> sep_leaves;
        sep.skel.collect_leaves(sep_leaves);
        std::sort(sep_leaves.begin(), sep_leaves.end());
        sep_leaves.erase(std::unique(sep_leaves.begin(), sep_leaves.end()),
                         sep_leaves.end());
        std::vector<int> z_parts;
        for (int l : sep_leaves) {
            auto vs = sep.parts[std::size_t(l)].free_vars();
            if (std::binary_search(vs.begin(), vs.end(), z)) z_parts.push_back(l);
        }
        FOCL_CHECK(z_parts.size() <= 16, "too many witness-side constituents");

        std::vector<Skeleton> far_cases;
        for (u64 mask = 0; mask < (u64(1) << z_parts.size()); ++mask) {
            std::vector<int> truth(sep.parts.size(), -1);
            for (std::size_t i = 0; i < z_parts.size(); ++i)
                truth[std::size_t(z_parts[i])] = int((mask >> i) & 1);
            Skeleton skel_x = sep.skel.substitute(truth);
            if (skel_x.is_false()) continue;
            // beta: the witness-side pattern of this assignment
            LocalFormula beta;
            beta.var_names = sep.var_names;
            beta.parts = sep.parts;
            std::vector<Skeleton> conj;
            for (std::size_t i = 0; i < z_parts.size(); ++i) {
                Skeleton leafsk = Skeleton::leaf_of(z_parts[i]);
                conj.push_back(((mask >> i) & 1) ? leafsk : Skeleton::negate(leafsk));
            }
            beta.skel = Skeleton::conj_all(std::move(conj));
            Dist sem = sem_radius_of(beta);
            auto sat = classify(beta, z, sem);
            const TypeIndex& ti = type_index(sem);
            u64 global_count = 0;
            for (int t : sat) global_count += ti.count[std::size_t(t)];
            if (global_count == 0) continue;  // no witness of this pattern at all
            std::vector<int> sat_syms;
            for (int t : sat) sat_syms.push_back(symbol_for_type(sem, t));
            u64 B = nu_clamped(G.degree(), D, u64(A.universe_size()));
            B = std::min<u64>(B * anchors.size(), u64(A.universe_size()));
            std::vector<Skeleton> count_cases;
            for (u64 c = 0; c <= B && c + 1 <= global_count; ++c) {
                int fact = symbol_for_fact(true, "#:" + std::to_string(sem) + ":" +
                                                     beta.print() + ">=" +
                                                     std::to_string(c + 1));
                Constituent gc;
                gc.kind = Constituent::Kind::Global;
                gc.sym0 = fact;
                Constituent nc;
                nc.kind = Constituent::Kind::NearCount;
                nc.anchors = anchors;
                nc.bound = D;
                nc.type_syms = sat_syms;
                nc.count = i64(c + 1);
                count_cases.push_back(
                    Skeleton::conj(Skeleton::leaf_of(lf.add_part(std::move(gc))),
                                   Skeleton::negate(
                                       Skeleton::leaf_of(lf.add_part(std::move(nc))))));
            }
            std::vector<int> remap(sep.parts.size(), -1);
            std::vector<int> x_used;
            skel_x.collect_leaves(x_used);
            for (int l : x_used)
                if (remap[std::size_t(l)] < 0)
                    remap[std::size_t(l)] = lf.add_part(sep.parts[std::size_t(l)]);
            far_cases.push_back(Skeleton::conj(
                skel_x.remap_leaves(remap), Skeleton::disj_all(std::move(count_cases))));
        }
        return Skeleton::disj(near_sk, Skeleton::disj_all(std::move(far_cases)));
    }

    // Replaces a single-anchor exists-near constituent by the disjunction of
    // the neighborhood types realizing it.
    Skeleton maybe_type_rewrite(Constituent en) {
        Dist sem = sem_radius_of_part(en);
        if (en.anchors.size() == 1 && sem <= mode.radius_cap) {
            int x = en.anchors[0];
            LocalFormula probe;
            probe.var_names = lf.var_names;
            probe.skel = Skeleton::leaf_of(probe.add_part(en));
            auto sat = classify(probe, x, sem);
            std::vector<Skeleton> alts;
            for (int t : sat) {
                Constituent c;
                c.kind = Constituent::Kind::Lit;
                c.lit = {true, false, symbol_for_type(sem, t), {x}};
                alts.push_back(Skeleton::leaf_of(lf.add_part(std::move(c))));
            }
            return Skeleton::disj_all(std::move(alts));
        }
        return Skeleton::leaf_of(lf.add_part(std::move(en)));
    }

    // Max over satisfying assignments of the tightest positive link between
    // z and an anchor; nullopt when some branch leaves z unlinked.
    std::optional<Dist> forced_nearness(const Skeleton& inner, int z,
                                        const std::vector<int>& anchors) {
        std::vector<int> leaves;
        inner.collect_leaves(leaves);
        std::sort(leaves.begin(), leaves.end());
        leaves.erase(std::unique(leaves.begin(), leaves.end()), leaves.end());
        if (leaves.size() > 16) return std::nullopt;
        auto link_bound = [&](const Constituent& c) -> std::optional<Dist> {
            auto vs = c.free_vars();
            if (!std::binary_search(vs.begin(), vs.end(), z)) return std::nullopt;
            bool touches_anchor = false;
            for (int a : anchors)
                if (std::binary_search(vs.begin(), vs.end(), a)) touches_anchor = true;
            if (!touches_anchor) return std::nullopt;
            switch (c.kind) {
                case Constituent::Kind::Lit:
                    if (!c.lit.positive) return std::nullopt;
                    return c.lit.is_eq ? Dist(0) : Dist(1);
                case Constituent::Kind::Dist:
                    return c.bound;
                default:
                    return std::nullopt;
            }
        };
        Dist worst = 0;
        for (u64 mask = 0; mask < (u64(1) << leaves.size()); ++mask) {
            std::vector<int> truth(lf.parts.size(), -1);
            for (std::size_t i = 0; i < leaves.size(); ++i)
                truth[std::size_t(leaves[i])] = int((mask >> i) & 1);
            if (!inner.substitute(truth).is_true()) continue;
            Dist best = kInfDist;
            for (std::size_t i = 0; i < leaves.size(); ++i) {
                if (!((mask >> i) & 1)) continue;
                auto lb = link_bound(lf.parts[std::size_t(leaves[i])]);
                if (lb) best = std::min(best, *lb);
            }
            if (best == kInfDist) return std::nullopt;
            worst = std::max(worst, best);
        }
        return worst;
    }
};

LocalisationOutput already_local_output(const Expr& phi, const Structure& s,
                                        const GaifmanIndex& g, const LocaliseMode& mode) {
    const auto& fv = phi.free_vars();
    if (fv.empty()) throw LocalityError("already_local mode cannot certify sentences");

    LocalFormula lf;
    for (const auto& v : fv) lf.add_var(v);

    auto lits = flatten_literals(phi);
    if (lits) {
        std::vector<Lit> ls;
        for (const auto& [pos, lit] : *lits) {
            Lit l;
            l.positive = pos;
            if (lit->kind == NodeKind::Equality) {
                l.is_eq = true;
                l.vars = {lf.add_var(lit->vars[0]), lf.add_var(lit->vars[1])};
            } else {
                l.rel = s.signature().require(lit->rel_name);
                for (const auto& v : lit->vars) l.vars.push_back(lf.add_var(v));
            }
            ls.push_back(std::move(l));
        }
        lf = LocalFormula::lit_conj(lf.var_names, std::move(ls));
    } else {
        Constituent c;
        c.kind = Constituent::Kind::Opaque;
        c.expr = std::make_shared<const Expr>(phi);
        c.declared_radius = mode.declared_radius;
        for (const auto& v : fv) c.anchors.push_back(lf.add_var(v));
        lf.skel = Skeleton::leaf_of(lf.add_part(std::move(c)));
    }

    // sampling certification: local and global evaluation must agree
    AccessAudit audit;
    LocalOracle oracle(s, g, audit);
    std::mt19937_64 rng(mode.seed);
    std::size_t n = s.universe_size();
    u64 space = 1;
    bool exhaustive = true;
    for (std::size_t i = 0; i < fv.size() && exhaustive; ++i) {
        space *= n ? n : 1;
        if (space > mode.samples) exhaustive = false;
    }
    std::size_t checked = 0;
    auto check_one = [&](const std::vector<Elem>& vals) {
        Interpretation it{&s, {}};
        for (std::size_t i = 0; i < fv.size(); ++i) it.assignment[fv[i]] = vals[i];
        if (!locality_agrees(phi, it, oracle, mode.declared_radius))
            throw LocalityError("already_local certification failed: formula is not " +
                                std::to_string(mode.declared_radius) + "-local");
        ++checked;
    };
    if (n > 0) {
        if (exhaustive) {
            std::vector<Elem> vals(fv.size(), 0);
            while (true) {
                check_one(vals);
                std::size_t i = 0;
                for (; i < vals.size(); ++i) {
                    if (++vals[i] < n) break;
                    vals[i] = 0;
                }
                if (i == vals.size()) break;
            }
        } else {
            std::uniform_int_distribution<Elem> pick(0, Elem(n - 1));
            for (unsigned k = 0; k < mode.samples; ++k) {
                std::vector<Elem> vals(fv.size());
                for (auto& v : vals) v = pick(rng);
                check_one(vals);
            }
        }
    }

    LocalisationOutput out;
    out.sigma_prime = Signature(s.signature().symbols());
    out.expanded = s.expand(out.sigma_prime, {});
    out.formula = std::move(lf);
    out.radius = std::max(mode.declared_radius, out.formula.radius());
    out.report_json = json{{"mode", "already_local"},
                           {"radius", out.radius},
                           {"samples_checked", checked},
                           {"predicates_added", json::array()}}
                          .dump();
    return out;
}

}  // namespace

LocalisationOutput localise(const Expr& phi, const Structure& s, const GaifmanIndex& g,
                            const LocaliseMode& mode, const NumericalPredicateRegistry& reg,
                            const std::string& symbol_prefix, unsigned workers) {
    if (!phi.is_formula()) throw LocalityError("localise expects a formula");
    if (mode.kind == LocaliseMode::Kind::AlreadyLocal)
        return already_local_output(phi, s, g, mode);

    HanfLocaliser h(s, g, mode, reg, symbol_prefix, workers);
    for (const auto& v : phi.free_vars()) h.scope[v] = h.lf.add_var(v);
    h.lf.skel = h.loc(phi, 0);

    LocalisationOutput out;
    out.sigma_prime = std::move(h.sig_prime);
    std::vector<Relation> rels;
    for (auto& a : h.added) rels.push_back(a.content);
    out.expanded = s.expand(out.sigma_prime, std::move(rels));
    out.added = std::move(h.added);
    out.formula = std::move(h.lf);
    out.radius = out.formula.radius();

    json types_realized = json::array();
    for (const auto& [r, ti] : h.types)
        types_realized.push_back({{"radius", r}, {"types", ti.num_types()}});
    json names = json::array();
    for (const auto& a : out.added) names.push_back(a.sym.name);
    out.report_json = json{{"mode", "hanf"},
                           {"radius", out.radius},
                           {"types_realized", types_realized},
                           {"predicates_added", names}}
                          .dump();
    return out;
}

}  // namespace focl

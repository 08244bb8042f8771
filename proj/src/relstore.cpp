#include "focl/relstore.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace focl {

using nlohmann::json;

// ---------------------------------------------------------------- Signature

Signature::Signature(std::vector<RelSym> symbols) {
    for (auto& s : symbols) add(s.name, s.arity);
}

int Signature::add(const std::string& name, unsigned arity) {
    if (name.empty()) throw FormatError("relation symbol name must be non-empty");
    if (by_name_.count(name)) throw FormatError("duplicate relation symbol: " + name);
    int id = int(symbols_.size());
    symbols_.push_back({name, arity});
    by_name_[name] = id;
    return id;
}

int Signature::id_of(const std::string& name) const {
    auto it = by_name_.find(name);
    return it == by_name_.end() ? -1 : it->second;
}

int Signature::require(const std::string& name) const {
    int id = id_of(name);
    if (id < 0) throw FormatError("unknown relation symbol: " + name);
    return id;
}

// ---------------------------------------------------------------- StructureBuilder

Elem StructureBuilder::add_element(const std::string& name) {
    auto it = handle_of_.find(name);
    if (it != handle_of_.end()) return it->second;
    Elem h = Elem(names_.size());
    names_.push_back(name);
    handle_of_.emplace(name, h);
    return h;
}

std::optional<Elem> StructureBuilder::find_element(const std::string& name) const {
    auto it = handle_of_.find(name);
    if (it == handle_of_.end()) return std::nullopt;
    return it->second;
}

void StructureBuilder::add_tuple(int rel, const Tuple& t) {
    const RelSym& sym = sig_.symbol(rel);
    if (t.size() != sym.arity)
        throw FormatError("arity mismatch for " + sym.name + ": got " +
                          std::to_string(t.size()) + ", expected " +
                          std::to_string(sym.arity));
    for (Elem e : t)
        if (e >= names_.size()) throw FormatError("unknown element handle in tuple");
    rel_sets_[std::size_t(rel)].insert(t);
}

void StructureBuilder::add_tuple(const std::string& rel,
                                 const std::vector<std::string>& names) {
    int id = sig_.require(rel);
    Tuple t;
    t.reserve(names.size());
    for (const auto& n : names) t.push_back(add_element(n));
    add_tuple(id, t);
}

void StructureBuilder::set_zero_ary(int rel, bool value) {
    const RelSym& sym = sig_.symbol(rel);
    if (sym.arity != 0) throw FormatError(sym.name + " is not 0-ary");
    if (value)
        rel_sets_[std::size_t(rel)].insert(Tuple{});
    else
        rel_sets_[std::size_t(rel)].clear();
}

Structure StructureBuilder::finish() {
    Structure s;
    s.sig_ = std::move(sig_);
    s.names_ = std::move(names_);
    s.handle_of_ = std::move(handle_of_);
    s.rels_.resize(s.sig_.size());
    for (std::size_t r = 0; r < s.rels_.size(); ++r) {
        Relation& rel = s.rels_[r];
        rel.arity = s.sig_.symbol(int(r)).arity;
        rel.set = std::move(rel_sets_[r]);
        rel.tuples.assign(rel.set.begin(), rel.set.end());
        std::sort(rel.tuples.begin(), rel.tuples.end());
    }
    s.build_postings();
    return s;
}

// ---------------------------------------------------------------- Structure

std::optional<Elem> Structure::handle_of(const std::string& name) const {
    auto it = handle_of_.find(name);
    if (it == handle_of_.end()) return std::nullopt;
    return it->second;
}

Elem Structure::require_element(const std::string& name) const {
    auto h = handle_of(name);
    if (!h) throw Error("unknown element id: " + name);
    return *h;
}

void Structure::build_postings() {
    postings_.clear();
    postings_.resize(rels_.size());
    for (std::size_t r = 0; r < rels_.size(); ++r) {
        postings_[r].resize(rels_[r].arity);
        for (std::uint32_t i = 0; i < rels_[r].tuples.size(); ++i) {
            const Tuple& t = rels_[r].tuples[i];
            for (unsigned p = 0; p < t.size(); ++p) postings_[r][p][t[p]].push_back(i);
        }
    }
}

std::span<const std::uint32_t> Structure::tuples_at(int rel, unsigned pos, Elem e) const {
    const auto& idx = postings_.at(std::size_t(rel)).at(pos);
    auto it = idx.find(e);
    if (it == idx.end()) return {};
    return it->second;
}

bool Structure::operator==(const Structure& o) const {
    if (!(sig_ == o.sig_) || names_ != o.names_) return false;
    for (std::size_t r = 0; r < rels_.size(); ++r)
        if (rels_[r].tuples != o.rels_[r].tuples) return false;
    return true;
}

Structure Structure::expand(const Signature& bigger, std::vector<Relation> added) const {
    FOCL_CHECK(bigger.size() == sig_.size() + added.size(),
               "expansion signature size mismatch");
    for (std::size_t r = 0; r < sig_.size(); ++r)
        FOCL_CHECK(bigger.symbol(int(r)) == sig_.symbol(int(r)),
                   "expansion must preserve old symbols");
    Structure s;
    s.sig_ = bigger;
    s.names_ = names_;
    s.handle_of_ = handle_of_;
    s.rels_ = rels_;
    for (auto& rel : added) {
        std::sort(rel.tuples.begin(), rel.tuples.end());
        s.rels_.push_back(std::move(rel));
    }
    s.build_postings();
    return s;
}

Structure Structure::induced(const std::vector<Elem>& keep) const {
    StructureBuilder b(sig_);
    std::unordered_map<Elem, Elem> remap;
    remap.reserve(keep.size());
    for (Elem e : keep) {
        if (e >= names_.size()) throw Error("unknown element handle");
        remap.emplace(e, b.add_element(names_[e]));
    }
    for (std::size_t r = 0; r < rels_.size(); ++r) {
        for (const Tuple& t : rels_[r].tuples) {
            Tuple mapped;
            mapped.reserve(t.size());
            bool inside = true;
            for (Elem e : t) {
                auto it = remap.find(e);
                if (it == remap.end()) {
                    inside = false;
                    break;
                }
                mapped.push_back(it->second);
            }
            if (inside) b.add_tuple(int(r), mapped);
        }
    }
    return b.finish();
}

// ---------------------------------------------------------------- Gaifman

GaifmanIndex build_gaifman(const Structure& s) {
    GaifmanIndex g;
    g.adj_.assign(s.universe_size(), {});
    for (const Relation& rel : s.relations()) {
        if (rel.arity < 2) continue;
        for (const Tuple& t : rel.tuples) {
            for (std::size_t i = 0; i < t.size(); ++i)
                for (std::size_t j = i + 1; j < t.size(); ++j) {
                    if (t[i] == t[j]) continue;
                    g.adj_[t[i]].push_back(t[j]);
                    g.adj_[t[j]].push_back(t[i]);
                }
        }
    }
    for (auto& lst : g.adj_) {
        std::sort(lst.begin(), lst.end());
        lst.erase(std::unique(lst.begin(), lst.end()), lst.end());
        g.degree_ = std::max(g.degree_, lst.size());
    }
    return g;
}

std::span<const Elem> GaifmanIndex::neighbors(Elem v) const {
    if (v >= adj_.size()) throw Error("unknown element handle");
    return adj_[v];
}

bool GaifmanIndex::adjacent(Elem v, Elem w) const {
    auto ns = neighbors(v);
    return std::binary_search(ns.begin(), ns.end(), w);
}

namespace {

// Multi-source BFS with early exit; visits only elements within `cap`.
// Calls `report(e, dist)` for each reached element; returns when `stop(e)`
// fires (and returns that distance) or the frontier under `cap` is exhausted.
template <class Report, class Stop, class NeighborFn>
Dist bfs(std::size_t n, std::span<const Elem> sources, Dist cap, NeighborFn&& nbrs,
         Report&& report, Stop&& stop) {
    std::vector<Dist> dist(n, kInfDist);
    std::deque<Elem> queue;
    for (Elem s : sources) {
        if (s >= n) throw Error("unknown element handle");
        if (dist[s] != kInfDist) continue;
        dist[s] = 0;
        report(s, 0);
        if (stop(s)) return 0;
        queue.push_back(s);
    }
    while (!queue.empty()) {
        Elem v = queue.front();
        queue.pop_front();
        if (dist[v] >= cap) continue;
        for (Elem w : nbrs(v)) {
            if (dist[w] != kInfDist) continue;
            dist[w] = dist[v] + 1;
            report(w, dist[w]);
            if (stop(w)) return dist[w];
            queue.push_back(w);
        }
    }
    return kInfDist;
}

}  // namespace

Dist distance(const GaifmanIndex& g, std::span<const Elem> from, Elem b, Dist cap) {
    if (b >= g.universe_size()) throw Error("unknown element handle");
    return bfs(
        g.universe_size(), from, cap, [&](Elem v) { return g.neighbors(v); },
        [](Elem, Dist) {}, [&](Elem e) { return e == b; });
}

Dist distance(const GaifmanIndex& g, Elem a, Elem b, Dist cap) {
    return distance(g, std::span<const Elem>(&a, 1), b, cap);
}

std::vector<Elem> ball(const GaifmanIndex& g, std::span<const Elem> tuple, Dist r) {
    std::vector<Elem> out;
    bfs(
        g.universe_size(), tuple, r, [&](Elem v) { return g.neighbors(v); },
        [&](Elem e, Dist) { out.push_back(e); }, [](Elem) { return false; });
    std::sort(out.begin(), out.end());
    return out;
}

Structure induced_neighborhood(const Structure& s, const GaifmanIndex& g,
                               std::span<const Elem> tuple, Dist r) {
    return s.induced(ball(g, tuple, r));
}

// ---------------------------------------------------------------- LocalOracle

Dist LocalOracle::local_distance(Elem a, Elem b, Dist cap) const {
    if (b >= g_->universe_size()) throw Error("unknown element handle");
    return bfs(
        g_->universe_size(), std::span<const Elem>(&a, 1), cap,
        [&](Elem v) { return neighbors(v); }, [](Elem, Dist) {},
        [&](Elem e) { return e == b; });
}

std::vector<Elem> LocalOracle::local_ball(std::span<const Elem> tuple, Dist r) const {
    std::vector<Elem> out;
    bfs(
        g_->universe_size(), tuple, r, [&](Elem v) { return neighbors(v); },
        [&](Elem e, Dist) { out.push_back(e); }, [](Elem) { return false; });
    std::sort(out.begin(), out.end());
    return out;
}

Structure LocalOracle::local_neighborhood(std::span<const Elem> tuple, Dist r) const {
    std::vector<Elem> b = local_ball(tuple, r);
    StructureBuilder builder(s_->signature());
    for (Elem e : b) builder.add_element(s_->name_of(e));
    const Signature& sig = s_->signature();
    for (int rel = 0; rel < int(sig.size()); ++rel) {
        unsigned a = sig.symbol(rel).arity;
        if (a == 0) {
            if (membership(rel, Tuple{})) builder.add_tuple(rel, Tuple{});
            continue;
        }
        // Enumerate ball^arity and probe membership; this is the local-access
        // way to restrict a relation (no table scans).
        Tuple probe(a, 0), local(a, 0);
        std::vector<std::size_t> idx(a, 0);
        if (b.empty()) continue;
        while (true) {
            for (unsigned p = 0; p < a; ++p) {
                probe[p] = b[idx[p]];
                local[p] = Elem(idx[p]);
            }
            if (membership(rel, probe)) builder.add_tuple(rel, local);
            unsigned p = 0;
            for (; p < a; ++p) {
                if (++idx[p] < b.size()) break;
                idx[p] = 0;
            }
            if (p == a) break;
        }
    }
    return builder.finish();
}

// ---------------------------------------------------------------- ingest / persist

Structure ingest(std::istream& in, bool allow_reserved) {
    std::string line;
    std::size_t lineno = 0;
    std::optional<StructureBuilder> builder;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw FormatError(std::string("bad JSON: ") + e.what(), lineno);
        }
        if (!builder) {
            if (!j.contains("signature") || !j["signature"].is_array())
                throw FormatError("first record must carry the signature", lineno);
            Signature sig;
            for (const auto& s : j["signature"]) {
                if (!s.contains("name") || !s.contains("arity"))
                    throw FormatError("signature entry needs name and arity", lineno);
                std::string name = s["name"].get<std::string>();
                if (!allow_reserved && !name.empty() && name[0] == '_')
                    throw FormatError("relation names starting with '_' are reserved",
                                      lineno);
                try {
                    sig.add(name, s["arity"].get<unsigned>());
                } catch (const FormatError& e) {
                    throw FormatError(e.what(), lineno);
                }
            }
            builder.emplace(std::move(sig));
            continue;
        }
        if (j.contains("element")) {
            builder->add_element(j["element"].get<std::string>());
            continue;
        }
        if (!j.contains("rel") || !j.contains("tuple"))
            throw FormatError("record needs rel and tuple fields", lineno);
        std::vector<std::string> names;
        for (const auto& v : j["tuple"]) names.push_back(v.get<std::string>());
        try {
            builder->add_tuple(j["rel"].get<std::string>(), names);
        } catch (const FormatError& e) {
            throw FormatError(e.what(), lineno);
        }
    }
    if (!builder) throw FormatError("empty database file: missing signature record");
    return builder->finish();
}

Structure ingest_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open database file: " + path);
    return ingest(in);
}

void persist(const Structure& s, std::ostream& out) {
    json sig = json::array();
    for (const RelSym& sym : s.signature().symbols())
        sig.push_back({{"name", sym.name}, {"arity", sym.arity}});
    out << json{{"signature", sig}}.dump() << '\n';
    for (const std::string& name : s.element_names())
        out << json{{"element", name}}.dump() << '\n';
    for (std::size_t r = 0; r < s.signature().size(); ++r) {
        const std::string& rname = s.signature().symbol(int(r)).name;
        for (const Tuple& t : s.relation(int(r)).tuples) {
            json names = json::array();
            for (Elem e : t) names.push_back(s.name_of(e));
            out << json{{"rel", rname}, {"tuple", names}}.dump() << '\n';
        }
    }
}

void persist_file(const Structure& s, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open output file: " + path);
    persist(s, out);
}

}  // namespace focl

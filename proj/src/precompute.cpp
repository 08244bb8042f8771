#include "focl/precompute.hpp"

#include <chrono>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "focl/learner.hpp"
#include "focl/parser.hpp"

namespace focl {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

static double ms_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

std::string IndexStats::to_json() const {
    return json{{"n", n},
                {"degree", degree},
                {"localise_ms", localise_ms},
                {"table_ms", table_ms},
                {"table_entries", table_entries},
                {"table_iterations", table_iterations},
                {"table_iteration_bound", table_iteration_bound}}
        .dump();
}

namespace {

// Template strings may select the certification mode: "local:<r>:<formula>"
// certifies the formula as already r-local by sampling; anything else goes
// through the Hanf rewriting.
std::pair<LocaliseMode, std::string> template_mode(const std::string& text,
                                                   const HypothesisClassConfig& cfg) {
    if (text.rfind("local:", 0) == 0) {
        std::size_t colon = text.find(':', 6);
        if (colon == std::string::npos)
            throw FormatError("template mode: expected local:<radius>:<formula>");
        Dist r = Dist(std::stoul(text.substr(6, colon - 6)));
        return {LocaliseMode::already_local(r), text.substr(colon + 1)};
    }
    return {LocaliseMode::hanf(cfg.template_radius_cap, cfg.template_quantifier_cap),
            text};
}

}  // namespace

IndexArtifact precompute(const Structure& s, const HypothesisClassConfig& cfg,
                         unsigned workers, const NumericalPredicateRegistry& reg) {
    cfg.validate();
    if (workers == 0) workers = default_workers();
    IndexArtifact ix;
    ix.cfg = cfg;
    ix.cfg_hash = cfg.hash();
    ix.sigma_size = s.signature().size();
    ix.stats.n = s.universe_size();

    GaifmanIndex base_gaifman = build_gaifman(s);
    ix.degree = base_gaifman.degree();
    ix.stats.degree = ix.degree;

    // localisation pass: merge each template's expansion under fresh symbols
    Clock::time_point t0 = Clock::now();
    Signature sig(s.signature().symbols());
    std::vector<Relation> added;
    Dist r_prime = 1;
    for (std::size_t t = 0; t < cfg.templates.size(); ++t) {
        auto [mode, text] = template_mode(cfg.templates[t], cfg);
        ExprPtr phi;
        try {
            phi = parse(text, reg, &s.signature());
        } catch (const Error& e) {
            throw LocalityError("template " + std::to_string(t) + ": " + e.what());
        }
        LocalisationOutput out;
        try {
            out = localise(*phi, s, base_gaifman, mode, reg, "L" + std::to_string(t),
                           workers);
        } catch (const Error& e) {
            throw LocalityError("template " + std::to_string(t) + ": " + e.what());
        }
        for (const auto& sym : out.added) {
            sig.add(sym.sym.name, sym.sym.arity);
            added.push_back(sym.content);
        }
        r_prime = std::max(r_prime, out.radius);
        ix.localisation_reports.push_back(out.report_json);
    }
    ix.expanded = s.expand(sig, std::move(added));
    ix.gaifman = build_gaifman(ix.expanded);
    FOCL_CHECK(ix.gaifman.degree() == ix.degree,
               "arity<=1 additions changed the Gaifman graph");
    ix.r_prime = r_prime;
    ix.stats.localise_ms = ms_since(t0);

    if (ix.expanded.universe_size() > 0) ix.anchor = Elem(0);

    // lookup table: every ground counting term of the candidate grammar,
    // filled by anchoring tuples at their first coordinate and enumerating
    // the rest inside its ball
    t0 = Clock::now();
    CandidateSpace space =
        candidate_terms(ix.expanded.signature(), ix.sigma_size, cfg, ix.r_prime, ix.degree);
    const std::size_t n = ix.expanded.universe_size();
    const Dist thr = ix.threshold();
    for (const LeafPtr& g : space.ground) {
        const unsigned m = g->kz();
        FOCL_CHECK(m >= 1, "ground leaves have at least one counted variable");
        const Dist reach = Dist(thr * m);
        std::vector<i128> partial(workers, 0);
        std::vector<u64> iter(workers, 0);
        parallel_for(n, workers, [&](unsigned w, std::size_t b, std::size_t e) {
            Access acc{&ix.expanded, &ix.gaifman, nullptr};
            std::vector<Elem> vals(m, kNoElem);
            for (std::size_t v1 = b; v1 < e; ++v1) {
                vals[0] = Elem(v1);
                if (m == 1) {
                    ++iter[w];
                    if (g->holds_at(acc, vals)) partial[w] = checked_add(partial[w], 1);
                    continue;
                }
                Elem ev = Elem(v1);
                std::vector<Elem> ball =
                    acc.bounded_ball(std::span<const Elem>(&ev, 1), reach);
                std::vector<std::size_t> idx(m - 1, 0);
                if (ball.empty()) continue;
                while (true) {
                    for (unsigned i = 1; i < m; ++i) vals[i] = ball[idx[i - 1]];
                    ++iter[w];
                    if (g->holds_at(acc, vals)) partial[w] = checked_add(partial[w], 1);
                    unsigned i = 0;
                    for (; i + 1 < m; ++i) {
                        if (++idx[i] < ball.size()) break;
                        idx[i] = 0;
                    }
                    if (i + 1 == m) break;
                }
            }
        });
        i128 total = 0;
        u64 iters = 0;
        for (unsigned w = 0; w < workers; ++w) {
            total = checked_add(total, partial[w]);
            iters += iter[w];
        }
        u64 per_elem = nu_clamped(ix.degree, reach, UINT64_MAX);
        u128 bound = 1;
        for (unsigned i = 1; i < m; ++i) bound = std::min(bound * per_elem, kNuCap);
        u128 total_bound = std::min(u128(n) * bound, kNuCap);
        FOCL_CHECK(u128(iters) <= total_bound, "table fill exceeded its iteration bound");
        ix.stats.table_iterations += iters;
        ix.stats.table_iteration_bound +=
            total_bound >= kNuCap ? UINT64_MAX : u64(total_bound);
        TableEntry entry;
        entry.value = to_i64(total, "table entry");
        entry.m = m;
        entry.radius = reach;
        ix.table.emplace(g->print(), entry);
    }
    ix.stats.table_entries = ix.table.size();
    ix.stats.table_ms = ms_since(t0);
    return ix;
}

// ---------------------------------------------------------------- persistence

void save_index(const IndexArtifact& ix, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw FormatError("cannot open index file for writing: " + path);
    json header{{"fidx", 1},
                {"cfg", json::parse(ix.cfg.to_json())},
                {"cfg_hash", ix.cfg_hash},
                {"meta",
                 {{"r_prime", ix.r_prime},
                  {"degree", ix.degree},
                  {"n", ix.expanded.universe_size()},
                  {"sigma_size", ix.sigma_size},
                  {"anchor", ix.anchor ? json(ix.expanded.name_of(*ix.anchor)) : json()}}},
                {"reports", ix.localisation_reports},
                {"stats", json::parse(ix.stats.to_json())}};
    out << header.dump() << '\n';
    persist(ix.expanded, out);
    for (const auto& [key, e] : ix.table)
        out << json{{"entry", {{"key", key},
                               {"value", e.value},
                               {"m", e.m},
                               {"radius", e.radius}}}}
                   .dump()
            << '\n';
}

IndexArtifact load_index(const std::string& path, const HypothesisClassConfig* expect) {
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open index file: " + path);
    std::string line;
    if (!std::getline(in, line)) throw FormatError("corrupt index file: empty", 1);
    json header;
    try {
        header = json::parse(line);
    } catch (const json::exception& e) {
        throw FormatError(std::string("corrupt index file: ") + e.what(), 1);
    }
    if (!header.contains("fidx")) throw FormatError("not an index file", 1);
    if (header["fidx"].get<int>() != 1)
        throw FormatError("index version mismatch: expected 1", 1);

    IndexArtifact ix;
    ix.cfg = HypothesisClassConfig::from_json(header["cfg"].dump());
    ix.cfg_hash = header["cfg_hash"].get<u64>();
    if (ix.cfg.hash() != ix.cfg_hash)
        throw FormatError("index config hash mismatch (corrupt or incompatible build)", 1);
    if (expect && expect->hash() != ix.cfg_hash)
        throw FormatError("index was built for a different hypothesis-class config");
    const json& meta = header["meta"];
    ix.r_prime = meta["r_prime"].get<Dist>();
    ix.degree = meta["degree"].get<u64>();
    ix.sigma_size = meta["sigma_size"].get<std::size_t>();
    for (const auto& r : header["reports"])
        ix.localisation_reports.push_back(r.get<std::string>());

    // the structure section runs until the table entries start
    std::stringstream structure_part;
    std::vector<json> entries;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        if (line.find("\"entry\"") != std::string::npos) {
            try {
                entries.push_back(json::parse(line));
            } catch (const json::exception& e) {
                throw FormatError(std::string("corrupt index file: ") + e.what(), lineno);
            }
            continue;
        }
        structure_part << line << '\n';
    }
    if (in.bad()) throw FormatError("corrupt index file: read error");
    try {
        ix.expanded = ingest(structure_part, /*allow_reserved=*/true);
    } catch (const FormatError& e) {
        throw FormatError(std::string("corrupt index file: ") + e.what());
    }
    if (meta["n"].get<std::size_t>() != ix.expanded.universe_size())
        throw FormatError("corrupt index file: universe size mismatch");
    ix.gaifman = build_gaifman(ix.expanded);
    if (!meta["anchor"].is_null())
        ix.anchor = ix.expanded.require_element(meta["anchor"].get<std::string>());
    for (const json& j : entries) {
        const json& e = j["entry"];
        TableEntry t;
        t.value = e["value"].get<i64>();
        t.m = e["m"].get<unsigned>();
        t.radius = e["radius"].get<Dist>();
        ix.table.emplace(e["key"].get<std::string>(), t);
    }
    if (header.contains("stats")) {
        const json& st = header["stats"];
        ix.stats.n = st.value("n", u64(0));
        ix.stats.degree = st.value("degree", u64(0));
        ix.stats.table_entries = st.value("table_entries", u64(0));
    }
    return ix;
}

}  // namespace focl

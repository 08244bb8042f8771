#include <fstream>
#include <iostream>

#include <CLI11.hpp>
#include <json.hpp>

#include "focl/campaigns.hpp"
#include "focl/decompose.hpp"
#include "focl/eval.hpp"
#include "focl/learner.hpp"
#include "focl/oracle.hpp"
#include "focl/parser.hpp"
#include "focl/precompute.hpp"

namespace {

// exit codes: 0 ok, 2 usage, 3 input format, 4 reject, 5 internal invariant
constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitFormat = 3;
constexpr int kExitReject = 4;
constexpr int kExitInternal = 5;

using namespace focl;
using nlohmann::json;

HypothesisClassConfig load_cfg(const std::string& path) {
    if (path.empty()) return HypothesisClassConfig{};
    std::ifstream in(path);
    if (!in) throw FormatError("cannot open config file: " + path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    return HypothesisClassConfig::from_json(text);
}

std::map<std::string, Elem> parse_assignments(const std::vector<std::string>& kvs,
                                              const Structure& s) {
    std::map<std::string, Elem> out;
    for (const auto& kv : kvs) {
        auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw FormatError("assignment must look like var=element: " + kv);
        out[kv.substr(0, eq)] = s.require_element(kv.substr(eq + 1));
    }
    return out;
}

int cmd_precompute(const std::string& db, const std::string& index_path,
                   const std::string& cfg_path, unsigned workers) {
    Structure s = ingest_file(db);
    HypothesisClassConfig cfg = load_cfg(cfg_path);
    IndexArtifact ix = precompute(s, cfg, workers);
    save_index(ix, index_path);
    json stats = json::parse(ix.stats.to_json());
    stats["r_prime"] = ix.r_prime;
    stats["cfg_hash"] = ix.cfg_hash;
    json reports = json::array();
    for (const auto& r : ix.localisation_reports) reports.push_back(json::parse(r));
    stats["localisation"] = reports;
    std::cout << stats.dump(2) << '\n';
    return kExitOk;
}

int cmd_learn(const std::string& index_path, const std::string& train_path,
              const std::string& out_path, unsigned workers) {
    IndexArtifact ix = load_index(index_path);
    if (workers == 0) workers = default_workers();
    TrainingSet train = TrainingSet::from_file(train_path, ix.expanded, ix.cfg.k);
    if (candidate_terms(ix).int_pool_clamped)
        std::cerr << "warning: enumerated integer range clamped to int_pool_cap ("
                  << ix.cfg.caps.int_pool_cap << ")\n";
    AccessAudit audit;
    LearnResult res = learn(train, ix, audit, workers);
    if (std::holds_alternative<Reject>(res)) {
        std::cerr << std::get<Reject>(res).message << '\n';
        return kExitReject;
    }
    const Hypothesis& h = std::get<Hypothesis>(res);
    std::ofstream out(out_path);
    if (!out) throw FormatError("cannot open output file: " + out_path);
    out << h.to_json(ix) << '\n';
    auto snap = audit.snapshot();
    json report{{"hypothesis", out_path},
                {"surface", h.surface},
                {"params", h.param_names},
                {"membership_queries", snap.membership_queries},
                {"neighbor_queries", snap.neighbor_queries},
                {"global_scans", snap.global_scans}};
    std::cout << report.dump(2) << '\n';
    return kExitOk;
}

int cmd_eval(const std::string& db, const std::string& expr_text,
             const std::vector<std::string>& at) {
    Structure s = ingest_file(db);
    ExprPtr e = parse(expr_text, builtin_registry(), &s.signature());
    Interpretation it{&s, parse_assignments(at, s)};
    if (e->is_term())
        std::cout << i128_to_string(eval_term(*e, it)) << '\n';
    else
        std::cout << (eval_formula(*e, it) ? "true" : "false") << '\n';
    return kExitOk;
}

int cmd_evalh(const std::string& index_path, const std::string& hyp_path,
              const std::vector<std::string>& tuples) {
    IndexArtifact ix = load_index(index_path);
    std::ifstream in(hyp_path);
    if (!in) throw FormatError("cannot open hypothesis file: " + hyp_path);
    std::string text((std::istreambuf_iterator<char>(in)),
                     std::istreambuf_iterator<char>());
    Hypothesis h = Hypothesis::from_json(text, ix);
    json out = json::array();
    AccessAudit audit;
    for (const auto& spec : tuples) {
        std::vector<Elem> tuple;
        std::vector<std::string> names;
        std::stringstream ss(spec);
        std::string part;
        while (std::getline(ss, part, ',')) {
            names.push_back(part);
            tuple.push_back(ix.expanded.require_element(part));
        }
        i128 v = evaluate_hypothesis(h, ix, tuple, audit);
        out.push_back({{"tuple", names}, {"value", to_i64(v, "value")}});
    }
    std::cout << out.dump(2) << '\n';
    return kExitOk;
}

int cmd_check(u64 seed, u64 trials, bool deep) {
    using namespace campaigns;
    bool all_ok = true;
    auto report = [&](const char* name, const Outcome& o) {
        std::cout << name << ": " << (o.ok() ? "pass" : "FAIL") << " (" << o.checked
                  << " checks, " << o.mismatches << " mismatches, " << int(o.ms)
                  << " ms)";
        if (!o.ok() && !o.detail.empty()) std::cout << " [" << o.detail << "]";
        std::cout << '\n';
        all_ok = all_ok && o.ok();
    };
    report("evaluator-vs-oracle", eval_equivalence(seed, trials, 8, 8));
    report("delta-correctness", delta_correctness(seed + 1, deep ? 100u : 25u, 10));
    report("nu-bound", nu_bound(seed + 2, 1000));
    report("decomposition-identity", decomposition_identity(seed + 3, deep ? 40u : 10u));
    PlantedOutcome p = planted_targets(seed + 4, deep ? 50u : 10u);
    std::cout << "planted-learning: " << (p.ok() ? "pass" : "FAIL") << " (" << p.runs
              << " runs, " << p.rejects << " rejects, " << p.soundness_violations
              << " unsound, " << p.verdict_disagreements << " verdict disagreements, "
              << p.global_scans << " scans)\n";
    all_ok = all_ok && p.ok();
    return all_ok ? kExitOk : kExitInternal;
}

int cmd_bench(u64 seed, const std::string& sizes_text, unsigned degree,
              std::size_t examples, unsigned workers, const std::string& out_path) {
    std::vector<std::size_t> sizes;
    std::stringstream ss(sizes_text);
    std::string part;
    while (std::getline(ss, part, ',')) sizes.push_back(std::stoul(part));
    if (sizes.empty()) throw FormatError("bench: empty size list");
    campaigns::BenchOutcome b =
        campaigns::sublinearity_bench(seed, sizes, degree, examples, workers);
    std::string csv = campaigns::bench_csv(b);
    if (!out_path.empty()) {
        std::ofstream out(out_path);
        if (!out) throw FormatError("cannot open output file: " + out_path);
        out << csv;
    }
    std::cout << csv;
    std::cout << "learn_call_ratio=" << b.learn_call_ratio
              << " worst_precompute_ratio=" << b.worst_precompute_ratio
              << " total_ms=" << b.total_ms << '\n';
    return b.ok() ? kExitOk : kExitInternal;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{
        "focl - learning integer-valued counting-logic queries over bounded-degree "
        "relational data"};
    app.footer(
        "expression grammar:\n"
        "  formula := formula '|' formula | formula '&' formula | '!' formula\n"
        "           | 'exists' var '.' formula | 'forall' var '.' formula\n"
        "           | Rel(var, ...) | Pred(term, ...) | var '=' var\n"
        "           | 'true' | 'false' | 'dist' ('<='|'>') INT '(' var ',' var ')'\n"
        "  term    := term '+' term | term '-' term | term '*' term | INT\n"
        "           | '#' '(' var, ... ')' '.' '(' formula ')'\n"
        "variables match [a-z][A-Za-z0-9_]*, relation and predicate names\n"
        "[A-Z][A-Za-z0-9_]*; built-in predicates: Peq, Pleq, Pprime, Pdivides.\n"
        "exit codes: 0 ok, 2 usage, 3 bad input, 4 reject, 5 internal error.");
    app.require_subcommand(1);

    std::string db, index_path, cfg_path, train_path, out_path, expr_text, hyp_path;
    std::vector<std::string> at, tuples;
    unsigned workers = 0, degree = 4;
    u64 seed = 1, trials = 2000;
    std::size_t examples = 8;
    std::string sizes = "1000,2000,4000,8000";
    bool deep = false;

    auto* pre = app.add_subcommand("precompute", "build the index artifact");
    pre->add_option("--db", db, "database (JSON lines)")->required();
    pre->add_option("--index", index_path, "output index file")->required();
    pre->add_option("--config", cfg_path, "hypothesis-class config JSON");
    pre->add_option("--workers", workers, "worker threads (0 = hardware)");

    auto* lrn = app.add_subcommand("learn", "learn a consistent hypothesis");
    lrn->add_option("--index", index_path, "index file")->required();
    lrn->add_option("--train", train_path, "training set (JSON lines)")->required();
    lrn->add_option("--out", out_path, "output hypothesis file")->required();
    lrn->add_option("--workers", workers, "worker threads");

    auto* ev = app.add_subcommand("eval", "evaluate an expression on a database");
    ev->add_option("--db", db, "database (JSON lines)")->required();
    ev->add_option("--term", expr_text, "expression in the surface grammar")->required();
    ev->add_option("--at", at, "assignments var=element");

    auto* evh = app.add_subcommand("evalh", "evaluate a stored hypothesis");
    evh->add_option("--index", index_path, "index file")->required();
    evh->add_option("--hypothesis", hyp_path, "hypothesis file")->required();
    evh->add_option("--tuple", tuples, "comma-separated element tuple")->required();

    auto* chk = app.add_subcommand("check", "run oracle cross-check campaigns");
    chk->add_option("--seed", seed, "random seed");
    chk->add_option("--trials", trials, "evaluator equivalence trials");
    chk->add_flag("--deep", deep, "larger campaign sizes");

    auto* ben = app.add_subcommand("bench", "scaling smoke benchmark");
    ben->add_option("--seed", seed, "random seed");
    ben->add_option("--sizes", sizes, "comma-separated universe sizes");
    ben->add_option("--degree", degree, "degree bound");
    ben->add_option("--examples", examples, "training examples per run");
    ben->add_option("--workers", workers, "worker threads");
    ben->add_option("--out", out_path, "CSV output path");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);
        app.exit(e);
        return kExitUsage;
    }

    try {
        if (pre->parsed()) return cmd_precompute(db, index_path, cfg_path, workers);
        if (lrn->parsed()) return cmd_learn(index_path, train_path, out_path, workers);
        if (ev->parsed()) return cmd_eval(db, expr_text, at);
        if (evh->parsed()) return cmd_evalh(index_path, hyp_path, tuples);
        if (chk->parsed()) return cmd_check(seed, trials, deep);
        if (ben->parsed()) return cmd_bench(seed, sizes, degree, examples, workers, out_path);
    } catch (const ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const FormatError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFormat;
    } catch (const InternalError& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return kExitInternal;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitFormat;
    }
    return kExitUsage;
}

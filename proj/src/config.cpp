#include "focl/config.hpp"

#include <algorithm>

#include <json.hpp>

namespace focl {

using nlohmann::json;

void HypothesisClassConfig::validate() const {
    if (k < 1) throw FormatError("config: k must be >= 1");
    if (caps.max_summands < 1 || caps.max_summands > 3)
        throw FormatError("config: max_summands must be in [1,3]");
    if (caps.max_graph_vertices > 12)
        throw FormatError("config: max_graph_vertices is capped at 12");
    if (k + l + caps.max_count_vars > caps.max_graph_vertices)
        throw FormatError("config: k + l + max_count_vars exceeds the graph cap");
}

static json caps_json(const CandidateCaps& c) {
    return json{{"max_count_vars", c.max_count_vars},
                {"max_literals", c.max_literals},
                {"max_summands", c.max_summands},
                {"max_atom_arity", c.max_atom_arity},
                {"allow_ground_factors", c.allow_ground_factors},
                {"int_pool_cap", c.int_pool_cap},
                {"max_graph_vertices", c.max_graph_vertices}};
}

std::string HypothesisClassConfig::to_json() const {
    std::vector<i64> sorted_ints = ints;
    std::sort(sorted_ints.begin(), sorted_ints.end());
    sorted_ints.erase(std::unique(sorted_ints.begin(), sorted_ints.end()),
                      sorted_ints.end());
    json j{{"k", k},
           {"l", l},
           {"q", q},
           {"ints", sorted_ints},
           {"caps", caps_json(caps)},
           {"templates", templates},
           {"template_radius_cap", template_radius_cap},
           {"template_quantifier_cap", template_quantifier_cap}};
    return j.dump();
}

HypothesisClassConfig HypothesisClassConfig::from_json(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("bad config JSON: ") + e.what());
    }
    HypothesisClassConfig c;
    c.k = j.value("k", 1u);
    c.l = j.value("l", 0u);
    c.q = j.value("q", 8u);
    c.ints = j.value("ints", std::vector<i64>{});
    if (j.contains("caps")) {
        const json& cj = j["caps"];
        c.caps.max_count_vars = cj.value("max_count_vars", c.caps.max_count_vars);
        c.caps.max_literals = cj.value("max_literals", c.caps.max_literals);
        c.caps.max_summands = cj.value("max_summands", c.caps.max_summands);
        c.caps.max_atom_arity = cj.value("max_atom_arity", c.caps.max_atom_arity);
        c.caps.allow_ground_factors =
            cj.value("allow_ground_factors", c.caps.allow_ground_factors);
        c.caps.int_pool_cap = cj.value("int_pool_cap", c.caps.int_pool_cap);
        c.caps.max_graph_vertices =
            cj.value("max_graph_vertices", c.caps.max_graph_vertices);
    }
    c.templates = j.value("templates", std::vector<std::string>{});
    c.template_radius_cap = j.value("template_radius_cap", c.template_radius_cap);
    c.template_quantifier_cap =
        j.value("template_quantifier_cap", c.template_quantifier_cap);
    c.validate();
    return c;
}

u64 HypothesisClassConfig::hash() const { return fnv1a(to_json()); }

}  // namespace focl

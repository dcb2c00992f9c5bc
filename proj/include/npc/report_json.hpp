#pragma once

// JSON form of a ContrastReport shared by the CLI and the HTTP service, so
// both surfaces print identical numbers for identical inputs.

#include <cstdio>
#include <cstdlib>
#include <string>

#include <nlohmann/json.hpp>

#include "npc/classifier_lut.hpp"
#include "npc/io/image.hpp"
#include "npc/report.hpp"

namespace npc {

inline constexpr const char* kSchemaVersion = "1.0";

/// Rounds to 12 significant digits; nlohmann prints the shortest
/// round-tripping form, so the JSON text carries exactly those digits.
inline double round12(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    return std::strtod(buf, nullptr);
}

inline nlohmann::json report_to_json(const ContrastReport& r)
{
    using nlohmann::json;
    json j;
    j["npc"] = round12(r.npc);
    j["pc"] = round12(r.pc);
    j["n_classes"] = r.n_classes;
    j["nominal_range"] = json::array({round12(r.nominal_min), round12(r.nominal_max)});
    j["compute_path"] = std::string(to_string(r.compute_path));
    j["class_ids"] = r.class_ids;

    json errors = json::object(), counts = json::object();
    for (std::size_t i = 0; i < r.class_ids.size(); ++i) {
        const auto key = std::to_string(r.class_ids[i]);
        errors[key] = round12(r.per_class_error.at(i));
        counts[key] = r.sample_counts.at(i);
    }
    j["per_class_error"] = std::move(errors);
    j["sample_counts"] = std::move(counts);

    json pairwise = json::array();
    for (const auto& row : r.pairwise) {
        json jr = json::array();
        for (double v : row)
            jr.push_back(round12(v));
        pairwise.push_back(std::move(jr));
    }
    j["pairwise"] = std::move(pairwise);

    if (!r.path_values.empty()) {
        json pv = json::object();
        for (const auto& [path, v] : r.path_values)
            pv[std::string(to_string(path))] = round12(v);
        j["path_values"] = std::move(pv);
    }
    return j;
}

/// Value -> class table for every level of the domain, after the unseen policy.
/// `class_ids` maps LUT class k to the external id class_ids[k-1].
inline nlohmann::json lut_to_json(const ClassifierLUT& lut, const std::vector<int>& class_ids = {})
{
    nlohmann::json table = nlohmann::json::array();
    const auto& resolved = lut.resolved();
    for (std::size_t x = 0; x < resolved.size(); ++x) {
        int c = resolved[x];
        if (c != kUnassigned && !class_ids.empty())
            c = class_ids.at(static_cast<std::size_t>(c - 1));
        table.push_back(nlohmann::json::array({lut.domain().level(x), c}));
    }
    return table;
}

struct EvaluationSettings {
    io::LoadOptions load;
    ReportSettings report;
};

inline nlohmann::json settings_to_json(const EvaluationSettings& s, const ValueDomain* domain = nullptr)
{
    nlohmann::json j;
    j["compute_path"] = s.report.cross_check ? std::string("all") : std::string(to_string(s.report.path));
    j["tie_break"] = std::string(to_string(s.report.tie_break));
    j["unseen"] = std::string(to_string(s.report.unseen));
    j["quant_bins"] = s.load.quant_bins;
    j["channel"] = s.load.channel.str();
    if (s.load.domain_range)
        j["domain_range"] = nlohmann::json::array({s.load.domain_range->first, s.load.domain_range->second});
    else
        j["domain_range"] = nullptr;
    if (domain)
        j["nominal_range"] = nlohmann::json::array({domain->nominal_min(), domain->nominal_max()});
    return j;
}

inline nlohmann::json image_to_json(const io::ImagePlane& image)
{
    nlohmann::json j;
    j["width"] = image.width;
    j["height"] = image.height;
    j["depth"] = std::string(io::to_string(image.depth));
    j["levels"] = image.domain->size();
    return j;
}

} // namespace npc

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "npc/classifier_lut.hpp"
#include "npc/contrast.hpp"
#include "npc/distribution.hpp"
#include "npc/error.hpp"

namespace npc {

inline constexpr double kPathTolerance = 1e-12;

struct ReportSettings {
    ComputePath path = ComputePath::HistogramL1;
    TieBreak tie_break = TieBreak::Lowest;
    UnseenPolicy unseen = UnseenPolicy::Unassigned;
    bool cross_check = false; ///< evaluate every path and fail on disagreement
};

struct ContrastReport {
    double npc = 0.0;
    double pc = 0.0;
    int n_classes = 0;
    double nominal_min = 0.0;
    double nominal_max = 0.0;
    ComputePath compute_path = ComputePath::HistogramL1;
    std::vector<int> class_ids;              ///< external id of each distribution, in input order
    std::vector<std::uint64_t> sample_counts;
    std::vector<double> per_class_error;     ///< e_i, parallel to class_ids
    Matrix pairwise;
    std::map<ComputePath, double> path_values; ///< filled when cross-checking
};

struct ContrastResult {
    ContrastReport report;
    ClassifierLUT lut;
};

inline double npc_by_path(std::span<const DiscreteDistribution> dists, ComputePath path)
{
    if (dists.size() == 2)
        return npc_two_class(dists[0], dists[1], path);
    return npc_multi_class(dists, path);
}

/// Full evaluation of one labeled instance: NPC and PC, the optimal classifier,
/// its per-class errors, and the pairwise two-class matrix. `class_ids`
/// defaults to 1..n.
inline ContrastResult evaluate_contrast(std::span<const DiscreteDistribution> dists, const ReportSettings& settings,
                                        std::vector<int> class_ids = {})
{
    if (dists.size() < 2)
        throw Error(ErrorCode::TooFewClasses, "need at least two labeled classes, got " + std::to_string(dists.size()));
    require_shared_domain(dists);
    if (class_ids.empty())
        for (std::size_t i = 0; i < dists.size(); ++i)
            class_ids.push_back(static_cast<int>(i) + 1);
    if (class_ids.size() != dists.size())
        throw Error(ErrorCode::TooFewClasses, "class id list does not match the distributions");

    ContrastReport r;
    r.n_classes = static_cast<int>(dists.size());
    r.nominal_min = dists[0].domain().nominal_min();
    r.nominal_max = dists[0].domain().nominal_max();
    r.compute_path = settings.path;
    r.class_ids = std::move(class_ids);
    for (const auto& d : dists)
        r.sample_counts.push_back(d.total());

    r.npc = npc_by_path(dists, settings.path);
    if (settings.cross_check) {
        double lo = r.npc, hi = r.npc;
        for (auto p : kAllPaths) {
            const double v = p == settings.path ? r.npc : npc_by_path(dists, p);
            r.path_values[p] = v;
            lo = std::min(lo, v);
            hi = std::max(hi, v);
        }
        if (hi - lo > kPathTolerance)
            throw Error(ErrorCode::PathDisagreement,
                        "compute paths disagree by " + std::to_string(hi - lo));
    }
    r.pc = pc_from_npc(r.npc, dists[0].domain());

    auto lut = optimal_segmentation_lut(dists, settings.tie_break, settings.unseen);
    r.per_class_error = error_rates(dists, lut);
    r.pairwise = pairwise_npc(dists, settings.path);
    return ContrastResult{std::move(r), std::move(lut)};
}

} // namespace npc

#pragma once

#include <algorithm>
#include <concepts>
#include <cstddef>
#include <numeric>
#include <optional>
#include <utility>
#include <vector>

#include "npc/classifier_lut.hpp"
#include "npc/distribution.hpp"
#include "npc/error.hpp"
#include "npc/value_domain.hpp"

namespace npc {

/// Injective map of a domain's levels onto a new domain T = f(X).
struct LevelRemap {
    DomainPtr source;
    DomainPtr target;
    std::vector<std::size_t> target_index; ///< source level index -> target level index
};

/// Builds the target domain for f. The nominal range of T defaults to
/// [min f(X), max f(X)].
template <typename F>
LevelRemap make_level_remap(const DomainPtr& source, F&& f,
                            std::optional<std::pair<double, double>> nominal = std::nullopt)
{
    const auto levels = source->levels();
    std::vector<double> mapped(levels.size());
    for (std::size_t i = 0; i < levels.size(); ++i)
        mapped[i] = static_cast<double>(f(levels[i]));

    std::vector<std::size_t> order(levels.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return mapped[a] < mapped[b]; });

    std::vector<double> target_levels(levels.size());
    std::vector<std::size_t> target_index(levels.size());
    for (std::size_t rank = 0; rank < order.size(); ++rank) {
        target_levels[rank] = mapped[order[rank]];
        target_index[order[rank]] = rank;
        if (rank > 0 && !(target_levels[rank - 1] < target_levels[rank]))
            throw Error(ErrorCode::NonInjectiveMap, "two levels map to the same value");
    }
    auto target = nominal ? ValueDomain(std::move(target_levels), nominal->first, nominal->second)
                          : ValueDomain(std::move(target_levels));
    return LevelRemap{source, make_domain(std::move(target)), std::move(target_index)};
}

/// Transports the mass of `dist` through the remap.
inline DiscreteDistribution apply_injective_remap(const DiscreteDistribution& dist, const LevelRemap& remap)
{
    if (!same_domain(dist.domain_ptr(), remap.source))
        throw Error(ErrorCode::DomainMismatch, "distribution is not defined on the remap's source domain");
    std::vector<std::uint64_t> counts(remap.target->size(), 0);
    for (std::size_t x = 0; x < dist.size(); ++x)
        counts[remap.target_index[x]] = dist.count(x);
    return DiscreteDistribution(remap.target, std::move(counts));
}

template <typename F>
    requires std::invocable<F, double>
DiscreteDistribution apply_injective_remap(const DiscreteDistribution& dist, F&& f)
{
    return apply_injective_remap(dist, make_level_remap(dist.domain_ptr(), std::forward<F>(f)));
}

/// The same classifier expressed on the remapped domain.
inline ClassifierLUT remap_lut(const ClassifierLUT& lut, const LevelRemap& remap)
{
    if (!same_domain(lut.domain_ptr(), remap.source))
        throw Error(ErrorCode::DomainMismatch, "classifier is not defined on the remap's source domain");
    std::vector<int> assignment(remap.target->size(), kUnassigned);
    for (std::size_t x = 0; x < lut.raw_assignment().size(); ++x)
        assignment[remap.target_index[x]] = lut.raw_assignment()[x];
    return ClassifierLUT(remap.target, std::move(assignment), lut.n_classes(), lut.unseen_policy());
}

} // namespace npc

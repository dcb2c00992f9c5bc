#pragma once

// Exhaustive reference for the closed-form contrast values. Does not use
// contrast.hpp: enumerates every assignment of sampled levels to classes and
// keeps the best accuracy 1 - sum(e_i) / (n - 1).

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "npc/distribution.hpp"
#include "npc/error.hpp"

namespace npc {

/// Upper bound on n^|Y| assignments. Admits |Y| <= 12 for two classes and
/// |Y| <= 8 for three.
inline constexpr std::uint64_t kOracleMaxAssignments = 6561;

struct OracleResult {
    double npc = 0.0;
    std::vector<int> assignment; ///< class id (1-based) per level of the union support
    std::vector<std::size_t> levels;  ///< union support, as domain indices
};

inline OracleResult brute_force_npc_oracle_detailed(std::span<const DiscreteDistribution> dists)
{
    const std::size_t n = dists.size();
    if (n < 2)
        throw Error(ErrorCode::TooFewClasses, "oracle needs at least two classes");
    require_shared_domain(dists);

    OracleResult result;
    for (std::size_t x = 0; x < dists[0].size(); ++x)
        for (const auto& d : dists)
            if (d.count(x)) {
                result.levels.push_back(x);
                break;
            }

    const std::size_t y = result.levels.size();
    std::uint64_t combos = 1;
    for (std::size_t i = 0; i < y; ++i) {
        combos *= n;
        if (combos > kOracleMaxAssignments)
            throw Error(ErrorCode::InstanceTooLarge, "too many assignments to enumerate");
    }

    std::vector<std::size_t> digits(y, 0);
    long double best = -1.0L;
    std::vector<std::uint64_t> misrouted(n);
    for (std::uint64_t c = 0; c < combos; ++c) {
        std::fill(misrouted.begin(), misrouted.end(), 0);
        for (std::size_t j = 0; j < y; ++j)
            for (std::size_t i = 0; i < n; ++i)
                if (i != digits[j])
                    misrouted[i] += dists[i].count(result.levels[j]);
        long double err = 0.0L;
        for (std::size_t i = 0; i < n; ++i)
            err += static_cast<long double>(misrouted[i]) / static_cast<long double>(dists[i].total());
        const long double acc = 1.0L - err / static_cast<long double>(n - 1);
        if (acc > best) {
            best = acc;
            result.assignment.assign(digits.begin(), digits.end());
        }
        // odometer increment
        for (std::size_t j = 0; j < y; ++j) {
            if (++digits[j] < n)
                break;
            digits[j] = 0;
        }
    }
    for (auto& a : result.assignment)
        a += 1;
    result.npc = static_cast<double>(best);
    return result;
}

inline double brute_force_npc_oracle(std::span<const DiscreteDistribution> dists)
{
    return brute_force_npc_oracle_detailed(dists).npc;
}

} // namespace npc

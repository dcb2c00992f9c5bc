#pragma once

// Two-class and multi-class normalized potential contrast (NPC) and potential
// contrast (PC), the optimal transforms that realize them, and the per-class
// error decomposition.
//
// Every closed form is evaluated on a common integer scale: each class mass
// c_i(x)/N_i is multiplied by L = N_1 * ... * N_n, so the sums are exact
// 128-bit integers and the only rounding is the final division. When L is too
// large for 128 bits the same code runs on compensated long double sums.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <type_traits>
#include <vector>

#include "npc/classifier_lut.hpp"
#include "npc/distribution.hpp"
#include "npc/error.hpp"

namespace npc {

enum class ComputePath {
    Definitional, ///< apply the optimal transform, then difference of class means
    HistogramL1,  ///< half l1 distance (two-class) / sorted differences (multi-class)
    MaxForm,      ///< sum of per-level maxima minus one
    MinForm,      ///< one minus the sum of non-maximal masses
};

inline constexpr std::array<ComputePath, 4> kAllPaths = {
    ComputePath::Definitional, ComputePath::HistogramL1, ComputePath::MaxForm, ComputePath::MinForm};

inline constexpr std::string_view to_string(ComputePath p) noexcept
{
    switch (p) {
    case ComputePath::Definitional: return "definitional";
    case ComputePath::HistogramL1: return "histogram-l1";
    case ComputePath::MaxForm: return "max-form";
    case ComputePath::MinForm: return "min-form";
    }
    return "unknown";
}

inline std::optional<ComputePath> parse_compute_path(std::string_view s) noexcept
{
    for (auto p : kAllPaths)
        if (to_string(p) == s)
            return p;
    return std::nullopt;
}

namespace detail {

using u128 = unsigned __int128;

/// Per-class weights w_i with w_i * N_i = unit for every class.
template <typename T>
struct Scale {
    std::vector<T> weight;
    T unit;
};

inline std::optional<Scale<u128>> exact_scale(std::span<const std::uint64_t> totals)
{
    // n^2 * unit must stay below 2^126 so every sum and denominator fits.
    constexpr u128 limit = static_cast<u128>(1) << 126;
    const u128 n = totals.size();
    u128 unit = 1;
    for (auto t : totals) {
        if (unit > limit / t)
            return std::nullopt;
        unit *= t;
    }
    if (unit > limit / (n * n))
        return std::nullopt;
    Scale<u128> s{{}, unit};
    s.weight.reserve(totals.size());
    for (auto t : totals)
        s.weight.push_back(unit / t);
    return s;
}

inline Scale<long double> float_scale(std::span<const std::uint64_t> totals)
{
    Scale<long double> s{{}, 1.0L};
    for (auto t : totals)
        s.weight.push_back(1.0L / static_cast<long double>(t));
    return s;
}

inline std::vector<std::uint64_t> totals_of(std::span<const DiscreteDistribution> dists)
{
    std::vector<std::uint64_t> out;
    out.reserve(dists.size());
    for (const auto& d : dists)
        out.push_back(d.total());
    return out;
}

/// Plain sum for exact integers, Neumaier-compensated sum for floating point.
template <typename T>
class Accumulator {
public:
    void add(T v) noexcept
    {
        if constexpr (std::is_floating_point_v<T>) {
            T t = sum_ + v;
            if (std::fabs(sum_) >= std::fabs(v))
                comp_ += (sum_ - t) + v;
            else
                comp_ += (v - t) + sum_;
            sum_ = t;
        } else {
            sum_ += v;
        }
    }
    T value() const noexcept
    {
        if constexpr (std::is_floating_point_v<T>)
            return sum_ + comp_;
        else
            return sum_;
    }

private:
    T sum_{};
    T comp_{};
};

template <typename T>
double ratio(T num, T den) noexcept
{
    const long double r = static_cast<long double>(num) / static_cast<long double>(den);
    return std::clamp(static_cast<double>(r), 0.0, 1.0);
}

template <typename T>
T scaled_mass(const DiscreteDistribution& d, const Scale<T>& s, std::size_t i, std::size_t x)
{
    return static_cast<T>(d.count(x)) * s.weight[i];
}

// Subtraction that cannot wrap for unsigned T when rounding in the float
// instantiation would otherwise make it negative.
template <typename T>
T diff(T a, T b) noexcept
{
    if constexpr (std::is_floating_point_v<T>)
        return a - b;
    else
        return a >= b ? a - b : T{0};
}

template <typename T>
double two_class(const DiscreteDistribution& a, const DiscreteDistribution& b, const Scale<T>& s, ComputePath path)
{
    const std::size_t n = a.size();
    Accumulator<T> acc;
    switch (path) {
    case ComputePath::Definitional: {
        // mu[h(A)] - mu[h(B)] with h(x) = 1 iff P_A(x) >= P_B(x)
        Accumulator<T> mean_a, mean_b;
        for (std::size_t x = 0; x < n; ++x)
            if (compare_mass(a, b, x) >= 0) {
                mean_a.add(scaled_mass(a, s, 0, x));
                mean_b.add(scaled_mass(b, s, 1, x));
            }
        return ratio(diff(mean_a.value(), mean_b.value()), s.unit);
    }
    case ComputePath::MinForm:
        for (std::size_t x = 0; x < n; ++x)
            acc.add(std::min(scaled_mass(a, s, 0, x), scaled_mass(b, s, 1, x)));
        return ratio(diff(s.unit, acc.value()), s.unit);
    case ComputePath::MaxForm:
        for (std::size_t x = 0; x < n; ++x)
            acc.add(std::max(scaled_mass(a, s, 0, x), scaled_mass(b, s, 1, x)));
        return ratio(diff(acc.value(), s.unit), s.unit);
    case ComputePath::HistogramL1:
        for (std::size_t x = 0; x < n; ++x) {
            const T pa = scaled_mass(a, s, 0, x);
            const T pb = scaled_mass(b, s, 1, x);
            acc.add(pa >= pb ? pa - pb : pb - pa);
        }
        return ratio(acc.value(), static_cast<T>(s.unit * 2));
    }
    return 0.0;
}

/// Index of the maximal mass at level x among dists, ties per `tie`.
inline std::size_t argmax_class(std::span<const DiscreteDistribution> dists, std::size_t x, TieBreak tie)
{
    std::size_t best = 0;
    for (std::size_t i = 1; i < dists.size(); ++i) {
        const int c = compare_mass(dists[i], dists[best], x);
        if (c > 0 || (c == 0 && tie == TieBreak::Highest))
            best = i;
    }
    return best;
}

template <typename T>
double multi_class(std::span<const DiscreteDistribution> dists, const Scale<T>& s, ComputePath path)
{
    const std::size_t k = dists.size();
    const std::size_t levels = dists[0].size();
    const T unit = s.unit;
    const T km1 = static_cast<T>(k - 1);

    if (path == ComputePath::Definitional) {
        // 1 - sum_i e_i / (n-1) for the argmax classifier
        Accumulator<T> errors;
        for (std::size_t x = 0; x < levels; ++x) {
            const std::size_t owner = argmax_class(dists, x, TieBreak::Lowest);
            for (std::size_t i = 0; i < k; ++i)
                if (i != owner)
                    errors.add(scaled_mass(dists[i], s, i, x));
        }
        return ratio(diff(static_cast<T>(km1 * unit), errors.value()), static_cast<T>(km1 * unit));
    }

    Accumulator<T> acc;
    std::vector<T> sorted(k);
    for (std::size_t x = 0; x < levels; ++x) {
        for (std::size_t i = 0; i < k; ++i)
            sorted[i] = scaled_mass(dists[i], s, i, x);
        std::sort(sorted.begin(), sorted.end());
        const T top = sorted.back();
        switch (path) {
        case ComputePath::MaxForm:
            acc.add(top);
            break;
        case ComputePath::MinForm:
            for (std::size_t i = 0; i + 1 < k; ++i)
                acc.add(sorted[i]);
            break;
        case ComputePath::HistogramL1:
            for (std::size_t i = 0; i + 1 < k; ++i)
                acc.add(top - sorted[i]);
            break;
        case ComputePath::Definitional:
            break;
        }
    }
    const T den = static_cast<T>(km1 * unit);
    switch (path) {
    case ComputePath::MaxForm:
        return ratio(diff(acc.value(), unit), den);
    case ComputePath::MinForm:
        return ratio(diff(den, acc.value()), den);
    case ComputePath::HistogramL1:
        return ratio(acc.value(), static_cast<T>(static_cast<T>(k) * den));
    case ComputePath::Definitional:
        break;
    }
    return 0.0;
}

inline void require_two_or_more(std::span<const DiscreteDistribution> dists)
{
    if (dists.size() < 2)
        throw Error(ErrorCode::TooFewClasses, "need at least two class distributions");
    require_shared_domain(dists);
}

} // namespace detail

/// NPC(A, B) in [0, 1] via the requested formula; all paths agree to within
/// rounding of the final division.
inline double npc_two_class(const DiscreteDistribution& a, const DiscreteDistribution& b,
                            ComputePath path = ComputePath::HistogramL1)
{
    if (!same_domain(a.domain_ptr(), b.domain_ptr()))
        throw Error(ErrorCode::DomainMismatch, "distributions are defined on different domains");
    const std::array<std::uint64_t, 2> totals{a.total(), b.total()};
    if (auto s = detail::exact_scale(totals))
        return detail::two_class(a, b, *s, path);
    return detail::two_class(a, b, detail::float_scale(totals), path);
}

inline double pc_from_npc(double npc, const ValueDomain& domain) noexcept
{
    return domain.nominal_range() * npc;
}

/// PC over the nominal range of the shared domain.
inline double pc_two_class(const DiscreteDistribution& a, const DiscreteDistribution& b,
                           ComputePath path = ComputePath::HistogramL1)
{
    return pc_from_npc(npc_two_class(a, b, path), a.domain());
}

/// Multi-class NPC. With two distributions this equals npc_two_class.
inline double npc_multi_class(std::span<const DiscreteDistribution> dists,
                              ComputePath path = ComputePath::HistogramL1)
{
    detail::require_two_or_more(dists);
    const auto totals = detail::totals_of(dists);
    if (auto s = detail::exact_scale(totals))
        return detail::multi_class(dists, *s, path);
    return detail::multi_class(dists, detail::float_scale(totals), path);
}

/// (1/n) sum_x (max_i P_i(x) - mean of the remaining n-1 masses), evaluated
/// directly in floating point as an independent route to the multi-class value.
inline double npc_multi_class_mean_difference(std::span<const DiscreteDistribution> dists)
{
    detail::require_two_or_more(dists);
    const std::size_t k = dists.size();
    std::vector<long double> masses(k);
    detail::Accumulator<long double> acc;
    for (std::size_t x = 0; x < dists[0].size(); ++x) {
        for (std::size_t i = 0; i < k; ++i)
            masses[i] = static_cast<long double>(dists[i].count(x)) / static_cast<long double>(dists[i].total());
        auto top = std::max_element(masses.begin(), masses.end());
        long double rest = 0.0L;
        for (auto it = masses.begin(); it != masses.end(); ++it)
            if (it != top)
                rest += *it;
        acc.add(*top - rest / static_cast<long double>(k - 1));
    }
    return std::clamp(static_cast<double>(acc.value() / static_cast<long double>(k)), 0.0, 1.0);
}

inline double pc_multi_class(std::span<const DiscreteDistribution> dists,
                             ComputePath path = ComputePath::HistogramL1)
{
    const double npc = npc_multi_class(dists, path);
    return pc_from_npc(npc, dists[0].domain());
}

/// Optimal two-class binarization: class 1 where P_A(y) >= P_B(y), else class 2,
/// for every sampled level y.
inline ClassifierLUT optimal_binarization(const DiscreteDistribution& a, const DiscreteDistribution& b,
                                          UnseenPolicy unseen = UnseenPolicy::Unassigned)
{
    if (!same_domain(a.domain_ptr(), b.domain_ptr()))
        throw Error(ErrorCode::DomainMismatch, "distributions are defined on different domains");
    std::vector<int> assignment(a.size(), kUnassigned);
    for (std::size_t x = 0; x < a.size(); ++x) {
        if (a.count(x) == 0 && b.count(x) == 0)
            continue;
        assignment[x] = compare_mass(a, b, x) >= 0 ? 1 : 2;
    }
    return ClassifierLUT(a.domain_ptr(), std::move(assignment), 2, unseen);
}

/// Argmax segmentation table: each sampled level goes to the class with the
/// largest mass there. Class ids are 1-based positions in `dists`.
inline ClassifierLUT optimal_segmentation_lut(std::span<const DiscreteDistribution> dists,
                                              TieBreak tie = TieBreak::Lowest,
                                              UnseenPolicy unseen = UnseenPolicy::Unassigned)
{
    detail::require_two_or_more(dists);
    std::vector<int> assignment(dists[0].size(), kUnassigned);
    for (std::size_t x : union_support(dists))
        assignment[x] = static_cast<int>(detail::argmax_class(dists, x, tie)) + 1;
    return ClassifierLUT(dists[0].domain_ptr(), std::move(assignment), static_cast<int>(dists.size()), unseen);
}

/// e_i: mass of class i routed to some other class by `lut`, indexed by i-1.
inline std::vector<double> error_rates(std::span<const DiscreteDistribution> dists, const ClassifierLUT& lut)
{
    require_shared_domain(dists);
    if (!dists.empty() && !same_domain(dists[0].domain_ptr(), lut.domain_ptr()))
        throw Error(ErrorCode::DomainMismatch, "classifier and distributions use different domains");
    std::vector<double> out;
    out.reserve(dists.size());
    for (std::size_t i = 0; i < dists.size(); ++i) {
        const int class_id = static_cast<int>(i) + 1;
        std::uint64_t misrouted = 0;
        for (std::size_t x = 0; x < dists[i].size(); ++x) {
            if (dists[i].count(x) == 0)
                continue;
            const int assigned = lut.classify(x);
            if (assigned == kUnassigned)
                throw Error(ErrorCode::UncoveredLevel,
                            "level " + std::to_string(lut.domain().level(x)) + " has no class assignment");
            if (assigned != class_id)
                misrouted += dists[i].count(x);
        }
        out.push_back(static_cast<double>(misrouted) / static_cast<double>(dists[i].total()));
    }
    return out;
}

/// 1 - sum(e_i) / (n - 1).
inline double npc_from_error_rates(std::span<const double> errors)
{
    if (errors.size() < 2)
        throw Error(ErrorCode::TooFewClasses, "need at least two error rates");
    detail::Accumulator<long double> acc;
    for (double e : errors)
        acc.add(e);
    const long double v = 1.0L - acc.value() / static_cast<long double>(errors.size() - 1);
    return std::clamp(static_cast<double>(v), 0.0, 1.0);
}

using Matrix = std::vector<std::vector<double>>;

/// Symmetric matrix of two-class NPC values with a zero diagonal.
inline Matrix pairwise_npc(std::span<const DiscreteDistribution> dists, ComputePath path = ComputePath::HistogramL1)
{
    detail::require_two_or_more(dists);
    const std::size_t n = dists.size();
    Matrix m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            m[i][j] = m[j][i] = npc_two_class(dists[i], dists[j], path);
    return m;
}

} // namespace npc

#pragma once

#include <algorithm>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "npc/error.hpp"

namespace npc {

/// Finite, strictly increasing set of levels an image can take, together with
/// the nominal range [nominal_min, nominal_max] used to scale potential
/// contrast. Levels are addressed by their index in the sorted set.
class ValueDomain {
public:
    ValueDomain(std::vector<double> levels, double nominal_min, double nominal_max)
        : levels_(std::move(levels)), nominal_min_(nominal_min), nominal_max_(nominal_max)
    {
        if (levels_.size() < 2)
            throw Error(ErrorCode::InvalidDomain, "a value domain needs at least two levels");
        for (std::size_t i = 1; i < levels_.size(); ++i)
            if (!(levels_[i - 1] < levels_[i]))
                throw Error(ErrorCode::InvalidDomain, "levels must be strictly increasing");
        if (!(nominal_min_ < nominal_max_))
            throw Error(ErrorCode::InvalidDomain, "nominal_min must be below nominal_max");
        if (nominal_min_ > levels_.front() || nominal_max_ < levels_.back())
            throw Error(ErrorCode::InvalidDomain, "nominal range must contain every level");
    }

    /// Domain whose nominal range is the span of its own levels.
    explicit ValueDomain(std::vector<double> levels)
        : ValueDomain(levels, levels.empty() ? 0.0 : levels.front(), levels.empty() ? 0.0 : levels.back())
    {
    }

    /// Integer levels lo, lo+1, ..., hi with nominal range [lo, hi].
    static ValueDomain integer_range(long lo, long hi)
    {
        std::vector<double> levels;
        if (hi > lo)
            levels.reserve(static_cast<std::size_t>(hi - lo + 1));
        for (long v = lo; v <= hi; ++v)
            levels.push_back(static_cast<double>(v));
        return ValueDomain(std::move(levels));
    }

    std::size_t size() const noexcept { return levels_.size(); }
    std::span<const double> levels() const noexcept { return levels_; }
    double level(std::size_t index) const { return levels_.at(index); }
    double nominal_min() const noexcept { return nominal_min_; }
    double nominal_max() const noexcept { return nominal_max_; }
    double nominal_range() const noexcept { return nominal_max_ - nominal_min_; }

    std::optional<std::size_t> index_of(double value) const noexcept
    {
        auto it = std::lower_bound(levels_.begin(), levels_.end(), value);
        if (it == levels_.end() || *it != value)
            return std::nullopt;
        return static_cast<std::size_t>(it - levels_.begin());
    }

    bool contains(double value) const noexcept { return index_of(value).has_value(); }

    friend bool operator==(const ValueDomain&, const ValueDomain&) = default;

private:
    std::vector<double> levels_;
    double nominal_min_;
    double nominal_max_;
};

using DomainPtr = std::shared_ptr<const ValueDomain>;

inline DomainPtr make_domain(ValueDomain domain)
{
    return std::make_shared<const ValueDomain>(std::move(domain));
}

inline bool same_domain(const DomainPtr& a, const DomainPtr& b) noexcept
{
    return a == b || (a && b && *a == *b);
}

} // namespace npc

#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "npc/error.hpp"
#include "npc/value_domain.hpp"

namespace npc {

/// Labeled pixel values for one class.
struct ClassSamples {
    int class_id = 1;
    std::vector<double> values;

    std::size_t count() const noexcept { return values.size(); }
};

/// Relative histogram of one class's samples over a ValueDomain.
///
/// Masses are kept as exact integer counts over a common total; mass(x) is
/// only converted to floating point on request, so equality and ordering
/// between masses of different distributions can be decided exactly.
class DiscreteDistribution {
public:
    DiscreteDistribution(DomainPtr domain, std::vector<std::uint64_t> counts)
        : domain_(std::move(domain)), counts_(std::move(counts))
    {
        if (!domain_)
            throw Error(ErrorCode::InvalidDomain, "distribution without a domain");
        if (counts_.size() != domain_->size())
            throw Error(ErrorCode::DomainMismatch, "count vector does not match the domain size");
        for (auto c : counts_)
            total_ += c;
        if (total_ == 0)
            throw Error(ErrorCode::EmptyClass, "distribution has no samples");
    }

    const DomainPtr& domain_ptr() const noexcept { return domain_; }
    const ValueDomain& domain() const noexcept { return *domain_; }
    std::size_t size() const noexcept { return counts_.size(); }

    std::uint64_t count(std::size_t index) const { return counts_.at(index); }
    std::span<const std::uint64_t> counts() const noexcept { return counts_; }
    std::uint64_t total() const noexcept { return total_; }

    double mass(std::size_t index) const
    {
        return static_cast<double>(counts_.at(index)) / static_cast<double>(total_);
    }

    double mass_at(double level) const
    {
        auto index = domain_->index_of(level);
        return index ? mass(*index) : 0.0;
    }

    std::vector<std::size_t> support() const
    {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < counts_.size(); ++i)
            if (counts_[i] != 0)
                out.push_back(i);
        return out;
    }

private:
    DomainPtr domain_;
    std::vector<std::uint64_t> counts_;
    std::uint64_t total_ = 0;
};

/// Exact three-way comparison of a.mass(index) against b.mass(index).
inline int compare_mass(const DiscreteDistribution& a, const DiscreteDistribution& b, std::size_t index)
{
    using wide = unsigned __int128;
    const wide lhs = static_cast<wide>(a.count(index)) * b.total();
    const wide rhs = static_cast<wide>(b.count(index)) * a.total();
    return lhs < rhs ? -1 : (lhs > rhs ? 1 : 0);
}

inline DiscreteDistribution build_distribution(const ClassSamples& samples, const DomainPtr& domain)
{
    if (samples.count() == 0)
        throw Error(ErrorCode::EmptyClass, "class " + std::to_string(samples.class_id) + " has no samples");
    std::vector<std::uint64_t> counts(domain->size(), 0);
    for (double v : samples.values) {
        auto index = domain->index_of(v);
        if (!index)
            throw Error(ErrorCode::ValueOutsideDomain,
                        "sample value " + std::to_string(v) + " of class " + std::to_string(samples.class_id) +
                            " is not a domain level");
        ++counts[*index];
    }
    return DiscreteDistribution(domain, std::move(counts));
}

/// Throws DomainMismatch unless every distribution shares one domain.
inline void require_shared_domain(std::span<const DiscreteDistribution> dists)
{
    for (std::size_t i = 1; i < dists.size(); ++i)
        if (!same_domain(dists[0].domain_ptr(), dists[i].domain_ptr()))
            throw Error(ErrorCode::DomainMismatch, "distributions are defined on different domains");
}

/// Indices carrying positive mass in at least one distribution (the set Y).
inline std::vector<std::size_t> union_support(std::span<const DiscreteDistribution> dists)
{
    std::vector<std::size_t> out;
    if (dists.empty())
        return out;
    const std::size_t n = dists[0].size();
    for (std::size_t x = 0; x < n; ++x)
        for (const auto& d : dists)
            if (d.count(x) != 0) {
                out.push_back(x);
                break;
            }
    return out;
}

} // namespace npc

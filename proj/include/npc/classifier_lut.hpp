#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "npc/error.hpp"
#include "npc/value_domain.hpp"

namespace npc {

/// How levels outside the sampled set Y are classified.
enum class UnseenPolicy {
    Unassigned, ///< class 0
    Nearest,    ///< label of the nearest sampled level; the lower level wins distance ties
};

enum class TieBreak {
    Lowest,
    Highest,
};

inline constexpr int kUnassigned = 0;

/// Level-to-class lookup table over a ValueDomain.
///
/// assignment() is defined on exactly the sampled levels; classify() also
/// resolves every other level through the unseen policy.
class ClassifierLUT {
public:
    /// `assignment` has one entry per domain level; kUnassigned marks levels
    /// outside the sampled set.
    ClassifierLUT(DomainPtr domain, std::vector<int> assignment, int n_classes, UnseenPolicy policy)
        : domain_(std::move(domain)), assignment_(std::move(assignment)), n_classes_(n_classes), policy_(policy)
    {
        if (!domain_ || assignment_.size() != domain_->size())
            throw Error(ErrorCode::DomainMismatch, "assignment table does not match the domain");
        if (n_classes_ < 2)
            throw Error(ErrorCode::TooFewClasses, "a classifier needs at least two classes");
        for (int c : assignment_)
            if (c < 0 || c > n_classes_)
                throw Error(ErrorCode::InvalidDomain, "class id out of range in assignment");
        resolve();
    }

    const DomainPtr& domain_ptr() const noexcept { return domain_; }
    const ValueDomain& domain() const noexcept { return *domain_; }
    int n_classes() const noexcept { return n_classes_; }
    UnseenPolicy unseen_policy() const noexcept { return policy_; }

    bool covers(std::size_t index) const { return assignment_.at(index) != kUnassigned; }

    /// Class for a sampled level, or nullopt when the level is outside Y.
    std::optional<int> assignment(std::size_t index) const
    {
        int c = assignment_.at(index);
        if (c == kUnassigned)
            return std::nullopt;
        return c;
    }

    /// Class for any domain level after applying the unseen policy.
    int classify(std::size_t index) const { return resolved_.at(index); }

    const std::vector<int>& raw_assignment() const noexcept { return assignment_; }
    const std::vector<int>& resolved() const noexcept { return resolved_; }

private:
    void resolve()
    {
        resolved_ = assignment_;
        if (policy_ != UnseenPolicy::Nearest)
            return;
        const auto levels = domain_->levels();
        const std::size_t n = levels.size();
        // nearest sampled index below and above each level
        std::vector<std::ptrdiff_t> below(n, -1), above(n, -1);
        std::ptrdiff_t last = -1;
        for (std::size_t i = 0; i < n; ++i) {
            if (assignment_[i] != kUnassigned)
                last = static_cast<std::ptrdiff_t>(i);
            below[i] = last;
        }
        last = -1;
        for (std::size_t i = n; i-- > 0;) {
            if (assignment_[i] != kUnassigned)
                last = static_cast<std::ptrdiff_t>(i);
            above[i] = last;
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (assignment_[i] != kUnassigned)
                continue;
            const auto lo = below[i];
            const auto hi = above[i];
            if (lo < 0 && hi < 0)
                continue;
            std::ptrdiff_t pick;
            if (lo < 0)
                pick = hi;
            else if (hi < 0)
                pick = lo;
            else
                pick = (levels[i] - levels[lo] <= levels[hi] - levels[i]) ? lo : hi;
            resolved_[i] = assignment_[static_cast<std::size_t>(pick)];
        }
    }

    DomainPtr domain_;
    std::vector<int> assignment_;
    std::vector<int> resolved_;
    int n_classes_;
    UnseenPolicy policy_;
};

inline std::string_view to_string(UnseenPolicy p) noexcept
{
    return p == UnseenPolicy::Nearest ? "nearest" : "unassigned";
}

inline std::string_view to_string(TieBreak t) noexcept
{
    return t == TieBreak::Highest ? "highest" : "lowest";
}

inline std::optional<UnseenPolicy> parse_unseen_policy(std::string_view s) noexcept
{
    if (s == "unassigned")
        return UnseenPolicy::Unassigned;
    if (s == "nearest")
        return UnseenPolicy::Nearest;
    return std::nullopt;
}

inline std::optional<TieBreak> parse_tie_break(std::string_view s) noexcept
{
    if (s == "lowest")
        return TieBreak::Lowest;
    if (s == "highest")
        return TieBreak::Highest;
    return std::nullopt;
}

} // namespace npc

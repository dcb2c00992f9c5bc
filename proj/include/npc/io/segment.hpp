#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "npc/classifier_lut.hpp"
#include "npc/distribution.hpp"
#include "npc/error.hpp"
#include "npc/io/image.hpp"
#include "npc/io/mask.hpp"

namespace npc::io {

/// Image levels under each class 1..mask.n_classes, in class order.
inline std::vector<ClassSamples> extract_samples(const ImagePlane& image, const LabelMask& mask)
{
    if (mask.width != image.width || mask.height != image.height)
        throw Error(ErrorCode::DimensionMismatch, "mask and image dimensions differ");
    std::vector<ClassSamples> out(static_cast<std::size_t>(mask.n_classes));
    for (int c = 0; c < mask.n_classes; ++c)
        out[static_cast<std::size_t>(c)].class_id = c + 1;
    for (std::size_t p = 0; p < mask.labels.size(); ++p) {
        const int c = mask.labels[p];
        if (c == 0 || c > mask.n_classes)
            continue;
        out[static_cast<std::size_t>(c - 1)].values.push_back(image.domain->level(image.pixels[p]));
    }
    return out;
}

/// Histograms of the listed class ids, counted directly on level indices.
inline std::vector<DiscreteDistribution> class_distributions(const ImagePlane& image, const LabelMask& mask,
                                                             std::span<const int> class_ids)
{
    if (mask.width != image.width || mask.height != image.height)
        throw Error(ErrorCode::DimensionMismatch, "mask and image dimensions differ");
    std::vector<int> slot(256, -1);
    for (std::size_t i = 0; i < class_ids.size(); ++i)
        slot[static_cast<std::size_t>(class_ids[i])] = static_cast<int>(i);
    std::vector<std::vector<std::uint64_t>> counts(class_ids.size(),
                                                   std::vector<std::uint64_t>(image.domain->size(), 0));
    for (std::size_t p = 0; p < mask.labels.size(); ++p) {
        const int s = slot[mask.labels[p]];
        if (s >= 0)
            ++counts[static_cast<std::size_t>(s)][image.pixels[p]];
    }
    std::vector<DiscreteDistribution> out;
    out.reserve(class_ids.size());
    for (auto& c : counts)
        out.emplace_back(image.domain, std::move(c));
    return out;
}

/// Histograms for classes 1..mask.n_classes.
inline std::vector<DiscreteDistribution> class_distributions(const ImagePlane& image, const LabelMask& mask)
{
    std::vector<int> ids;
    for (int c = 1; c <= mask.n_classes; ++c)
        ids.push_back(c);
    return class_distributions(image, mask, ids);
}

/// Applies the classifier pixelwise. Levels the LUT does not resolve get class 0.
inline LabelMask segment_image(const ImagePlane& image, const ClassifierLUT& lut)
{
    if (!same_domain(image.domain, lut.domain_ptr()))
        throw Error(ErrorCode::DomainMismatch, "classifier was built for a different value domain");
    LabelMask out(image.width, image.height, lut.n_classes());
    const auto& table = lut.resolved();
    for (std::size_t p = 0; p < image.pixels.size(); ++p)
        out.labels[p] = static_cast<std::uint8_t>(table[image.pixels[p]]);
    return out;
}

} // namespace npc::io

#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "npc/error.hpp"
#include "npc/io/image.hpp"
#include "npc/io/raster.hpp"

namespace npc::io {

/// Per-pixel class ids, 0 = unlabeled.
struct LabelMask {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    std::vector<std::uint8_t> labels;
    int n_classes = 0;

    LabelMask() = default;
    LabelMask(std::uint32_t w, std::uint32_t h, int classes = 0)
        : width(w), height(h), labels(std::size_t{w} * h, 0), n_classes(classes)
    {
    }

    std::uint8_t at(std::uint32_t x, std::uint32_t y) const { return labels.at(std::size_t{y} * width + x); }
    void set(std::uint32_t x, std::uint32_t y, std::uint8_t c) { labels.at(std::size_t{y} * width + x) = c; }

    /// Pixel count per class id 0..255.
    std::array<std::uint64_t, 256> histogram() const
    {
        std::array<std::uint64_t, 256> h{};
        for (auto v : labels)
            ++h[v];
        return h;
    }

    int max_label() const
    {
        return labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end());
    }

    friend bool operator==(const LabelMask&, const LabelMask&) = default;
};

/// Reads class ids from an 8-bit (or 16-bit, values <= 255) grayscale or
/// indexed PNG without validating class contiguity.
inline LabelMask decode_mask_png(std::span<const std::uint8_t> bytes)
{
    if (sniff_format(bytes) != FileFormat::Png)
        throw Error(ErrorCode::UnsupportedFormat, "label masks must be PNG");
    const Raster r = decode_png(bytes, /*palette_indices=*/true);
    if (r.channels != 1)
        throw Error(ErrorCode::UnsupportedFormat, "label mask must be single-channel grayscale or indexed");
    LabelMask m(r.width, r.height);
    for (std::size_t i = 0; i < r.ints.size(); ++i) {
        if (r.ints[i] > 255)
            throw Error(ErrorCode::UnsupportedFormat, "label mask values must be at most 255");
        m.labels[i] = static_cast<std::uint8_t>(r.ints[i]);
    }
    m.n_classes = m.max_label();
    return m;
}

inline LabelMask read_mask(const std::filesystem::path& path)
{
    return decode_mask_png(read_file(path));
}

/// Checks a mask against its image: equal dimensions, and classes 1..n each
/// with at least one pixel, where n is the largest id present.
inline void validate_label_mask(const LabelMask& mask, const ImagePlane& image)
{
    if (mask.width != image.width || mask.height != image.height)
        throw Error(ErrorCode::DimensionMismatch, "mask is " + std::to_string(mask.width) + "x" +
                                                      std::to_string(mask.height) + " but image is " +
                                                      std::to_string(image.width) + "x" +
                                                      std::to_string(image.height));
    const auto hist = mask.histogram();
    const int n = mask.max_label();
    if (n == 0)
        throw Error(ErrorCode::EmptyClassInMask, "mask labels no pixels");
    for (int c = 1; c <= n; ++c)
        if (hist[static_cast<std::size_t>(c)] == 0)
            throw Error(ErrorCode::EmptyClassInMask, "class " + std::to_string(c) + " has no labeled pixels");
}

inline LabelMask load_label_mask(const std::filesystem::path& path, const ImagePlane& image)
{
    LabelMask m = read_mask(path);
    validate_label_mask(m, image);
    m.n_classes = m.max_label();
    return m;
}

inline std::vector<std::uint8_t> encode_mask_png(const LabelMask& mask)
{
    Raster r;
    r.width = mask.width;
    r.height = mask.height;
    r.channels = 1;
    r.kind = SampleKind::U8;
    r.ints.assign(mask.labels.begin(), mask.labels.end());
    return encode_png(r);
}

inline void write_label_mask(const std::filesystem::path& path, const LabelMask& mask)
{
    write_file(path, encode_mask_png(mask));
}

struct Rgb {
    std::uint8_t r, g, b;
};

/// Fixed preview palette indexed by class id - 1; cycles past its end.
inline constexpr std::array<Rgb, 8> kPalette = {{
    {228, 26, 28},
    {55, 126, 184},
    {77, 175, 74},
    {152, 78, 163},
    {255, 127, 0},
    {255, 255, 51},
    {166, 86, 40},
    {247, 129, 191},
}};

inline Rgb palette_color(int class_id) noexcept
{
    return kPalette[static_cast<std::size_t>(class_id - 1) % kPalette.size()];
}

/// RGBA preview: class k drawn in palette_color(k), class 0 fully transparent.
inline std::vector<std::uint8_t> encode_color_png(const LabelMask& mask)
{
    Raster r;
    r.width = mask.width;
    r.height = mask.height;
    r.channels = 4;
    r.kind = SampleKind::U8;
    r.ints.resize(mask.labels.size() * 4);
    for (std::size_t i = 0; i < mask.labels.size(); ++i) {
        const int c = mask.labels[i];
        if (c == 0)
            continue;
        const Rgb col = palette_color(c);
        r.ints[4 * i] = col.r;
        r.ints[4 * i + 1] = col.g;
        r.ints[4 * i + 2] = col.b;
        r.ints[4 * i + 3] = 255;
    }
    return encode_png(r);
}

} // namespace npc::io

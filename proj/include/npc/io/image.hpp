#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <utility>
#include <vector>

#include "npc/error.hpp"
#include "npc/io/raster.hpp"
#include "npc/value_domain.hpp"

namespace npc::io {

enum class Depth { U8, U16, F32Quantized };

inline std::string_view to_string(Depth d) noexcept
{
    switch (d) {
    case Depth::U8: return "u8";
    case Depth::U16: return "u16";
    case Depth::F32Quantized: return "f32-quantized";
    }
    return "unknown";
}

/// Which channel of a multi-channel raster becomes the grayscale plane.
struct ChannelSelect {
    enum class Kind { None, Index, Luma };
    Kind kind = Kind::None;
    int index = 0;

    static ChannelSelect none() { return {}; }
    static ChannelSelect channel(int i) { return {Kind::Index, i}; }
    static ChannelSelect luma() { return {Kind::Luma, 0}; }

    /// "luma" or a channel number.
    static std::optional<ChannelSelect> parse(std::string_view s)
    {
        if (s == "luma")
            return luma();
        if (s.empty())
            return std::nullopt;
        int v = 0;
        for (char c : s) {
            if (c < '0' || c > '9')
                return std::nullopt;
            v = v * 10 + (c - '0');
            if (v > 64)
                return std::nullopt;
        }
        return channel(v);
    }

    std::string str() const
    {
        switch (kind) {
        case Kind::None: return "none";
        case Kind::Luma: return "luma";
        case Kind::Index: return std::to_string(index);
        }
        return "none";
    }
};

struct LoadOptions {
    ChannelSelect channel;
    int quant_bins = 256;
    /// Nominal range override. For float images it is also the quantization range.
    std::optional<std::pair<double, double>> domain_range;
};

/// Single-channel image whose pixels are stored as indices into its domain.
struct ImagePlane {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    Depth depth = Depth::U8;
    DomainPtr domain;
    std::vector<std::uint32_t> pixels; ///< level index per pixel, row-major

    std::size_t pixel_count() const noexcept { return pixels.size(); }
    std::uint32_t level_index(std::uint32_t x, std::uint32_t y) const { return pixels.at(std::size_t{y} * width + x); }
    double value(std::uint32_t x, std::uint32_t y) const { return domain->level(level_index(x, y)); }
};

namespace detail {

inline constexpr double kLumaR = 0.299;
inline constexpr double kLumaG = 0.587;
inline constexpr double kLumaB = 0.114;

/// One grayscale sample per pixel, as double, from the selected channel(s).
inline std::vector<double> select_channel(const Raster& r, const ChannelSelect& sel)
{
    const std::size_t n = r.pixel_count();
    const int ch = r.channels;
    auto sample = [&](std::size_t p, int c) -> double {
        const std::size_t i = p * static_cast<std::size_t>(ch) + static_cast<std::size_t>(c);
        return r.is_float() ? static_cast<double>(r.floats[i]) : static_cast<double>(r.ints[i]);
    };

    std::vector<double> out(n);
    if (ch == 1 && sel.kind != ChannelSelect::Kind::Index) {
        for (std::size_t p = 0; p < n; ++p)
            out[p] = sample(p, 0);
        return out;
    }
    switch (sel.kind) {
    case ChannelSelect::Kind::None:
        throw Error(ErrorCode::AmbiguousChannels,
                    "image has " + std::to_string(ch) + " channels; choose a channel index or luma");
    case ChannelSelect::Kind::Index:
        if (sel.index < 0 || sel.index >= ch)
            throw Error(ErrorCode::AmbiguousChannels, "channel " + std::to_string(sel.index) +
                                                          " does not exist in a " + std::to_string(ch) +
                                                          "-channel image");
        for (std::size_t p = 0; p < n; ++p)
            out[p] = sample(p, sel.index);
        return out;
    case ChannelSelect::Kind::Luma: {
        const double max_int = r.kind == SampleKind::U16 ? 65535.0 : 255.0;
        for (std::size_t p = 0; p < n; ++p) {
            double y;
            if (ch < 3)
                y = sample(p, 0); // gray + alpha
            else
                y = kLumaR * sample(p, 0) + kLumaG * sample(p, 1) + kLumaB * sample(p, 2);
            if (!r.is_float())
                y = std::min(std::floor(y + 0.5), max_int);
            out[p] = y;
        }
        return out;
    }
    }
    return out;
}

/// Maps distinct present values to a domain and pixels to level indices.
inline ImagePlane plane_from_integers(std::uint32_t w, std::uint32_t h, Depth depth, const std::vector<double>& values,
                                      double nominal_min, double nominal_max)
{
    const std::size_t span = depth == Depth::U16 ? 65536 : 256;
    std::vector<std::uint32_t> lookup(span, 0);
    std::vector<bool> present(span, false);
    for (double v : values)
        present[static_cast<std::size_t>(v)] = true;
    std::vector<double> levels;
    for (std::size_t v = 0; v < span; ++v)
        if (present[v]) {
            lookup[v] = static_cast<std::uint32_t>(levels.size());
            levels.push_back(static_cast<double>(v));
        }
    if (levels.size() < 2)
        throw Error(ErrorCode::InvalidDomain, "image is constant; a value domain needs at least two levels");
    ImagePlane plane;
    plane.width = w;
    plane.height = h;
    plane.depth = depth;
    plane.domain = make_domain(ValueDomain(std::move(levels), nominal_min, nominal_max));
    plane.pixels.resize(values.size());
    for (std::size_t p = 0; p < values.size(); ++p)
        plane.pixels[p] = lookup[static_cast<std::size_t>(values[p])];
    return plane;
}

} // namespace detail

/// Uniform quantizer for float samples: bin k of `bins` covers
/// [lo + k*(hi-lo)/bins, lo + (k+1)*(hi-lo)/bins), values outside [lo, hi]
/// clamp to the end bins, and bin k is represented by the level
/// lo + k*(hi-lo)/(bins-1) so the end bins sit exactly on lo and hi.
struct Quantizer {
    double lo = 0.0;
    double hi = 1.0;
    int bins = 256;

    int bin(double v) const noexcept
    {
        const double t = (v - lo) / (hi - lo) * bins;
        if (!(t >= 0.0))
            return 0;
        const int k = static_cast<int>(std::floor(t));
        return k >= bins ? bins - 1 : k;
    }

    double level(int k) const noexcept { return lo + k * (hi - lo) / (bins - 1); }
};

/// Builds the grayscale ImagePlane for a decoded raster.
inline ImagePlane make_plane(const Raster& raster, const LoadOptions& options)
{
    if (raster.pixel_count() == 0)
        throw Error(ErrorCode::UnsupportedFormat, "image has no pixels");
    const auto values = detail::select_channel(raster, options.channel);

    if (!raster.is_float()) {
        const Depth depth = raster.kind == SampleKind::U16 ? Depth::U16 : Depth::U8;
        double lo = 0.0, hi = depth == Depth::U16 ? 65535.0 : 255.0;
        if (options.domain_range)
            std::tie(lo, hi) = *options.domain_range;
        return detail::plane_from_integers(raster.width, raster.height, depth, values, lo, hi);
    }

    Quantizer q;
    q.bins = options.quant_bins;
    if (options.domain_range)
        std::tie(q.lo, q.hi) = *options.domain_range;
    if (q.bins < 2)
        throw Error(ErrorCode::InvalidDomain, "quantization needs at least two bins");
    if (!(q.lo < q.hi))
        throw Error(ErrorCode::InvalidDomain, "quantization range must be increasing");

    std::vector<int> bin_of(values.size());
    std::vector<bool> present(static_cast<std::size_t>(q.bins), false);
    for (std::size_t p = 0; p < values.size(); ++p) {
        if (std::isnan(values[p]))
            throw Error(ErrorCode::UnsupportedFormat, "float image contains NaN");
        bin_of[p] = q.bin(values[p]);
        present[static_cast<std::size_t>(bin_of[p])] = true;
    }
    std::vector<std::uint32_t> lookup(static_cast<std::size_t>(q.bins), 0);
    std::vector<double> levels;
    for (int k = 0; k < q.bins; ++k)
        if (present[static_cast<std::size_t>(k)]) {
            lookup[static_cast<std::size_t>(k)] = static_cast<std::uint32_t>(levels.size());
            levels.push_back(q.level(k));
        }
    if (levels.size() < 2)
        throw Error(ErrorCode::InvalidDomain, "image quantizes to a single level");

    ImagePlane plane;
    plane.width = raster.width;
    plane.height = raster.height;
    plane.depth = Depth::F32Quantized;
    plane.domain = make_domain(ValueDomain(std::move(levels), q.lo, q.hi));
    plane.pixels.resize(values.size());
    for (std::size_t p = 0; p < values.size(); ++p)
        plane.pixels[p] = lookup[static_cast<std::size_t>(bin_of[p])];
    return plane;
}

inline ImagePlane decode_image(std::span<const std::uint8_t> bytes, const LoadOptions& options = {})
{
    return make_plane(decode_raster(bytes), options);
}

inline ImagePlane load_image(const std::filesystem::path& path, const LoadOptions& options = {})
{
    const auto bytes = read_file(path);
    return decode_image(bytes, options);
}

} // namespace npc::io

#pragma once

// Batch commands behind the `npc` executable. Each command returns the report
// document; writing it and mapping errors to exit codes is left to main().

#include <openssl/evp.h>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "npc/contrast.hpp"
#include "npc/error.hpp"
#include "npc/io/image.hpp"
#include "npc/io/mask.hpp"
#include "npc/io/segment.hpp"
#include "npc/io/stack.hpp"
#include "npc/report.hpp"
#include "npc/report_json.hpp"

namespace npc::cli {

enum ExitCode : int {
    kExitOk = 0,
    kExitUsage = 2,
    kExitInput = 3,
    kExitCompute = 4,
    kExitService = 5,
};

inline int exit_code_for(const Error& e)
{
    return is_input_error(e.code()) ? kExitInput : kExitCompute;
}

inline std::string sha256_hex(std::span<const std::uint8_t> bytes)
{
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
        throw Error(ErrorCode::IoError, "SHA-256 computation failed");
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

inline nlohmann::json file_entry(const std::filesystem::path& path)
{
    return {{"path", path.string()}, {"sha256", sha256_hex(io::read_file(path))}};
}

struct Options {
    std::filesystem::path mask;
    EvaluationSettings settings;
    std::filesystem::path out;     ///< segmentation mask output
    std::filesystem::path preview; ///< colorized segmentation output
};

/// Parses "MIN:MAX".
inline std::optional<std::pair<double, double>> parse_range(const std::string& s)
{
    if (s.empty())
        return std::nullopt;
    const auto colon = s.find(':', s.front() == '-' ? 1 : 0);
    if (colon == std::string::npos)
        return std::nullopt;
    try {
        std::size_t used = 0;
        const double lo = std::stod(s.substr(0, colon), &used);
        if (used != colon)
            return std::nullopt;
        const auto rest = s.substr(colon + 1);
        const double hi = std::stod(rest, &used);
        if (used != rest.size() || !(lo < hi))
            return std::nullopt;
        return std::make_pair(lo, hi);
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

struct LabeledImage {
    io::ImagePlane image;
    io::LabelMask mask;
    std::vector<DiscreteDistribution> dists;
};

inline LabeledImage load_labeled(const std::filesystem::path& image_path, const Options& opt)
{
    auto image = io::load_image(image_path, opt.settings.load);
    auto mask = io::load_label_mask(opt.mask, image);
    auto dists = io::class_distributions(image, mask);
    if (dists.size() < 2)
        throw Error(ErrorCode::TooFewClasses, "mask labels only " + std::to_string(dists.size()) + " class");
    return {std::move(image), std::move(mask), std::move(dists)};
}

inline nlohmann::json base_document(const char* command, const std::filesystem::path& image_path, const Options& opt,
                                    const io::ImagePlane& image)
{
    nlohmann::json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = command;
    doc["inputs"] = {{"image", file_entry(image_path)}, {"mask", file_entry(opt.mask)}};
    doc["settings"] = settings_to_json(opt.settings, image.domain.get());
    doc["image"] = image_to_json(image);
    return doc;
}

/// Pixel counts per class plus the paths and hashes of any PNGs written.
inline nlohmann::json write_segmentation(const io::LabelMask& seg, const Options& opt)
{
    nlohmann::json output;
    const auto hist = seg.histogram();
    nlohmann::json pixel_counts = nlohmann::json::object();
    for (int c = 0; c <= seg.n_classes; ++c)
        pixel_counts[std::to_string(c)] = hist[static_cast<std::size_t>(c)];
    output["class_pixel_counts"] = std::move(pixel_counts);
    if (!opt.out.empty()) {
        const auto png = io::encode_mask_png(seg);
        io::write_file(opt.out, png);
        output["mask"] = {{"path", opt.out.string()}, {"sha256", sha256_hex(png)}};
    }
    if (!opt.preview.empty()) {
        const auto png = io::encode_color_png(seg);
        io::write_file(opt.preview, png);
        output["preview"] = {{"path", opt.preview.string()}, {"sha256", sha256_hex(png)}};
    }
    return output;
}

inline bool wants_segmentation(const Options& opt) { return !opt.out.empty() || !opt.preview.empty(); }

inline nlohmann::json cmd_npc(const std::filesystem::path& image_path, const Options& opt)
{
    auto li = load_labeled(image_path, opt);
    auto result = evaluate_contrast(li.dists, opt.settings.report);
    auto doc = base_document("npc", image_path, opt, li.image);
    doc["results"] = report_to_json(result.report);
    if (wants_segmentation(opt))
        doc["segmentation"] = write_segmentation(io::segment_image(li.image, result.lut), opt);
    return doc;
}

inline nlohmann::json cmd_pairwise(const std::filesystem::path& image_path, const Options& opt)
{
    auto li = load_labeled(image_path, opt);
    const auto m = pairwise_npc(li.dists, opt.settings.report.path);
    auto doc = base_document("pairwise", image_path, opt, li.image);
    nlohmann::json rows = nlohmann::json::array();
    for (const auto& row : m) {
        nlohmann::json r = nlohmann::json::array();
        for (double v : row)
            r.push_back(round12(v));
        rows.push_back(std::move(r));
    }
    std::vector<int> ids(li.dists.size());
    std::iota(ids.begin(), ids.end(), 1);
    doc["results"] = {{"class_ids", ids}, {"pairwise", rows}, {"compute_path", to_string(opt.settings.report.path)}};
    if (wants_segmentation(opt)) {
        const auto lut = optimal_segmentation_lut(li.dists, opt.settings.report.tie_break, opt.settings.report.unseen);
        doc["segmentation"] = write_segmentation(io::segment_image(li.image, lut), opt);
    }
    return doc;
}

inline nlohmann::json cmd_segment(const std::filesystem::path& image_path, const Options& opt)
{
    auto li = load_labeled(image_path, opt);
    auto result = evaluate_contrast(li.dists, opt.settings.report);
    auto doc = base_document("segment", image_path, opt, li.image);
    doc["results"] = report_to_json(result.report);
    doc["lut"] = lut_to_json(result.lut);
    doc["segmentation"] = write_segmentation(io::segment_image(li.image, result.lut), opt);
    return doc;
}

struct BandScore {
    std::size_t band; ///< position in the manifest
    double npc;
    double pc;
};

/// Indices sorted by descending NPC; equal values keep manifest order.
inline std::vector<BandScore> rank_scores(std::vector<BandScore> scores)
{
    std::stable_sort(scores.begin(), scores.end(), [](const BandScore& a, const BandScore& b) { return a.npc > b.npc; });
    return scores;
}

inline nlohmann::json cmd_rank_bands(const std::filesystem::path& manifest, const Options& opt)
{
    const auto stack = io::load_stack(manifest, opt.settings.load);
    const auto mask_raw = io::read_mask(opt.mask);

    nlohmann::json bands = nlohmann::json::array();
    std::vector<BandScore> scores;
    std::vector<ClassifierLUT> luts;
    for (std::size_t b = 0; b < stack.bands.size(); ++b) {
        const auto& band = stack.bands[b];
        io::validate_label_mask(mask_raw, band);
        const auto dists = io::class_distributions(band, mask_raw);
        if (dists.size() < 2)
            throw Error(ErrorCode::TooFewClasses, "mask labels fewer than two classes");
        auto result = evaluate_contrast(dists, opt.settings.report);
        scores.push_back({b, result.report.npc, result.report.pc});
        luts.push_back(std::move(result.lut));
        bands.push_back({{"index", b},
                         {"name", stack.band_names[b]},
                         {"input", file_entry(stack.band_paths[b])},
                         {"image", image_to_json(band)},
                         {"results", report_to_json(result.report)}});
    }

    nlohmann::json ranking = nlohmann::json::array();
    for (const auto& s : rank_scores(scores))
        ranking.push_back({{"index", s.band}, {"name", stack.band_names[s.band]}, {"npc", round12(s.npc)},
                           {"pc", round12(s.pc)}});

    nlohmann::json doc;
    doc["schema_version"] = kSchemaVersion;
    doc["command"] = "rank-bands";
    doc["inputs"] = {{"manifest", file_entry(manifest)}, {"mask", file_entry(opt.mask)}};
    doc["settings"] = settings_to_json(opt.settings);
    doc["bands"] = std::move(bands);
    doc["ranking"] = ranking;
    doc["best_band"] = ranking.front();
    if (wants_segmentation(opt)) {
        const auto best = rank_scores(scores).front().band;
        doc["segmentation"] = write_segmentation(io::segment_image(stack.bands[best], luts[best]), opt);
    }
    return doc;
}

} // namespace npc::cli

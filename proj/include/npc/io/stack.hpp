#pragma once

#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "npc/error.hpp"
#include "npc/io/image.hpp"

namespace npc::io {

struct BandEntry {
    std::string name;
    std::filesystem::path path; ///< resolved against the manifest's directory
};

/// Co-registered bands sharing one pixel grid.
struct SpectralStack {
    std::vector<ImagePlane> bands;
    std::vector<std::string> band_names;
    std::vector<std::filesystem::path> band_paths;
};

/// Manifest format:
///   { "bands": [ { "name": "uv365", "path": "uv365.png" }, ... ] }
/// Relative paths are resolved against the manifest file's directory.
inline std::vector<BandEntry> read_stack_manifest(const std::filesystem::path& manifest)
{
    nlohmann::json doc;
    try {
        const auto bytes = read_file(manifest);
        doc = nlohmann::json::parse(bytes.begin(), bytes.end());
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ManifestError, manifest.string() + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("bands") || !doc["bands"].is_array())
        throw Error(ErrorCode::ManifestError, "manifest needs a \"bands\" array");
    const auto base = manifest.parent_path();
    std::vector<BandEntry> out;
    std::set<std::string> seen;
    for (const auto& b : doc["bands"]) {
        if (!b.is_object() || !b.contains("path") || !b["path"].is_string())
            throw Error(ErrorCode::ManifestError, "every band needs a string \"path\"");
        BandEntry e;
        e.path = b["path"].get<std::string>();
        e.name = b.contains("name") && b["name"].is_string() ? b["name"].get<std::string>()
                                                             : e.path.stem().string();
        if (e.path.is_relative())
            e.path = base / e.path;
        if (!seen.insert(e.name).second)
            throw Error(ErrorCode::ManifestError, "duplicate band name \"" + e.name + "\"");
        out.push_back(std::move(e));
    }
    if (out.empty())
        throw Error(ErrorCode::ManifestError, "manifest lists no bands");
    return out;
}

inline SpectralStack load_stack(const std::filesystem::path& manifest, const LoadOptions& options = {})
{
    SpectralStack stack;
    for (auto& entry : read_stack_manifest(manifest)) {
        auto plane = load_image(entry.path, options);
        if (!stack.bands.empty() &&
            (plane.width != stack.bands.front().width || plane.height != stack.bands.front().height))
            throw Error(ErrorCode::DimensionMismatch, "band \"" + entry.name + "\" differs in size from band \"" +
                                                          stack.band_names.front() + "\"");
        stack.bands.push_back(std::move(plane));
        stack.band_names.push_back(std::move(entry.name));
        stack.band_paths.push_back(std::move(entry.path));
    }
    return stack;
}

} // namespace npc::io

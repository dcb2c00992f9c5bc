#pragma once

// In-memory labeling sessions: an uploaded image, a mutable label mask and a
// revision counter. Edits to one session are serialized; metric and
// segmentation reads work on a consistent (mask, revision) snapshot.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <shared_mutex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "npc/classifier_lut.hpp"
#include "npc/contrast.hpp"
#include "npc/error.hpp"
#include "npc/io/image.hpp"
#include "npc/io/mask.hpp"
#include "npc/io/raster.hpp"
#include "npc/io/segment.hpp"
#include "npc/report.hpp"
#include "npc/report_json.hpp"

namespace npc::service {

/// Failure carrying the HTTP status it maps to.
class ServiceError : public std::runtime_error {
public:
    ServiceError(int status, const std::string& message) : std::runtime_error(message), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

struct SessionSettings {
    EvaluationSettings eval;
    int palette_size = 8; ///< class ids 1..palette_size may be painted
};

/// Reads the optional settings object of a session upload. Unknown keys are rejected.
inline SessionSettings parse_session_settings(const nlohmann::json& j)
{
    SessionSettings s;
    if (j.is_null())
        return s;
    if (!j.is_object())
        throw ServiceError(400, "settings must be a JSON object");
    for (const auto& [key, value] : j.items()) {
        if (key == "quant_bins") {
            if (!value.is_number_integer() || value.get<int>() < 2 || value.get<int>() > 65536)
                throw ServiceError(400, "quant_bins must be an integer in [2, 65536]");
            s.eval.load.quant_bins = value.get<int>();
        } else if (key == "domain_range") {
            if (value.is_null())
                continue;
            if (!value.is_array() || value.size() != 2 || !value[0].is_number() || !value[1].is_number() ||
                !(value[0].get<double>() < value[1].get<double>()))
                throw ServiceError(400, "domain_range must be [min, max] with min < max");
            s.eval.load.domain_range = std::make_pair(value[0].get<double>(), value[1].get<double>());
        } else if (key == "tie_break") {
            auto t = value.is_string() ? parse_tie_break(value.get<std::string>()) : std::nullopt;
            if (!t)
                throw ServiceError(400, "tie_break must be \"lowest\" or \"highest\"");
            s.eval.report.tie_break = *t;
        } else if (key == "unseen") {
            auto u = value.is_string() ? parse_unseen_policy(value.get<std::string>()) : std::nullopt;
            if (!u)
                throw ServiceError(400, "unseen must be \"unassigned\" or \"nearest\"");
            s.eval.report.unseen = *u;
        } else if (key == "channel") {
            std::optional<io::ChannelSelect> c;
            if (value.is_string())
                c = value.get<std::string>() == "none" ? io::ChannelSelect::none()
                                                      : io::ChannelSelect::parse(value.get<std::string>());
            else if (value.is_number_integer() && value.get<int>() >= 0)
                c = io::ChannelSelect::channel(value.get<int>());
            if (!c)
                throw ServiceError(400, "channel must be a channel index or \"luma\"");
            s.eval.load.channel = *c;
        } else if (key == "path") {
            const auto name = value.is_string() ? value.get<std::string>() : std::string();
            if (name == "all") {
                s.eval.report.cross_check = true;
            } else if (auto p = parse_compute_path(name)) {
                s.eval.report.path = *p;
            } else {
                throw ServiceError(400, "unknown compute path");
            }
        } else if (key == "palette_size") {
            if (!value.is_number_integer() || value.get<int>() < 2 || value.get<int>() > 255)
                throw ServiceError(400, "palette_size must be an integer in [2, 255]");
            s.palette_size = value.get<int>();
        } else {
            throw ServiceError(400, "unknown setting \"" + key + "\"");
        }
    }
    return s;
}

inline nlohmann::json session_settings_to_json(const SessionSettings& s)
{
    auto j = settings_to_json(s.eval);
    j["palette_size"] = s.palette_size;
    return j;
}

/// One painted pixel.
struct LabelPoint {
    std::uint32_t x;
    std::uint32_t y;
    std::uint8_t class_id; ///< 0 erases
};

struct Session {
    std::string id;
    std::vector<std::uint8_t> image_bytes;
    std::shared_ptr<const io::ImagePlane> image;
    SessionSettings settings;

    mutable std::shared_mutex mutex; // guards mask, revision
    io::LabelMask mask;
    std::uint64_t revision = 0;

    std::atomic<std::int64_t> last_access_ms{0};
};

struct MaskSnapshot {
    io::LabelMask mask;
    std::uint64_t revision;
};

struct EditResult {
    std::uint64_t revision;
    std::uint64_t labeled_pixels;
};

struct MetricsResult {
    std::uint64_t revision;
    ContrastResult contrast;
    nlohmann::json json;
};

struct PngResult {
    std::uint64_t revision;
    std::vector<std::uint8_t> png;
};

struct StoreOptions {
    std::chrono::milliseconds idle_timeout = std::chrono::hours(1);
    std::filesystem::path persist_dir; ///< empty disables snapshots
};

class SessionStore {
public:
    using Clock = std::chrono::steady_clock;

    explicit SessionStore(StoreOptions options = {}) : options_(std::move(options))
    {
        if (!options_.persist_dir.empty())
            restore();
    }

    /// Decodes `image_bytes` and opens a session with an empty mask at revision 0.
    std::string create(std::vector<std::uint8_t> image_bytes, const nlohmann::json& settings_json)
    {
        auto settings = parse_session_settings(settings_json);
        auto session = open(std::move(image_bytes), settings, random_id());
        persist(*session, session->mask, 0);
        std::unique_lock lock(map_mutex_);
        sweep_locked();
        sessions_[session->id] = session;
        return session->id;
    }

    bool remove(const std::string& id)
    {
        std::unique_lock lock(map_mutex_);
        const bool erased = sessions_.erase(id) > 0;
        if (erased && !options_.persist_dir.empty()) {
            std::error_code ec;
            std::filesystem::remove_all(options_.persist_dir / id, ec);
        }
        return erased;
    }

    std::size_t size() const
    {
        std::shared_lock lock(map_mutex_);
        return sessions_.size();
    }

    /// Parses `{"strokes": [{"class_id": k, "points": [[x, y], ...]}, ...]}` and
    /// applies every point atomically as one revision.
    static std::vector<LabelPoint> parse_strokes(const nlohmann::json& body)
    {
        if (!body.is_object() || !body.contains("strokes") || !body["strokes"].is_array())
            throw ServiceError(400, "body must be {\"strokes\": [...]}");
        std::vector<LabelPoint> points;
        for (const auto& stroke : body["strokes"]) {
            if (!stroke.is_object() || !stroke.contains("class_id") || !stroke["class_id"].is_number_integer() ||
                !stroke.contains("points") || !stroke["points"].is_array())
                throw ServiceError(400, "each stroke needs an integer class_id and a points array");
            const auto cls = stroke["class_id"].get<std::int64_t>();
            if (cls < 0 || cls > 255)
                throw ServiceError(422, "class_id " + std::to_string(cls) + " is outside the palette");
            for (const auto& p : stroke["points"]) {
                if (!p.is_array() || p.size() != 2 || !p[0].is_number_integer() || !p[1].is_number_integer())
                    throw ServiceError(400, "points must be [x, y] integer pairs");
                const auto x = p[0].get<std::int64_t>();
                const auto y = p[1].get<std::int64_t>();
                if (x < 0 || y < 0 || x > UINT32_MAX || y > UINT32_MAX)
                    throw ServiceError(422, "point out of bounds");
                points.push_back({static_cast<std::uint32_t>(x), static_cast<std::uint32_t>(y),
                                  static_cast<std::uint8_t>(cls)});
            }
        }
        return points;
    }

    EditResult apply_edit(const std::string& id, const std::vector<LabelPoint>& points)
    {
        auto s = find(id);
        for (const auto& p : points) {
            if (p.x >= s->image->width || p.y >= s->image->height)
                throw ServiceError(422, "point (" + std::to_string(p.x) + ", " + std::to_string(p.y) +
                                            ") is outside the image");
            if (p.class_id > s->settings.palette_size)
                throw ServiceError(422, "class_id " + std::to_string(p.class_id) + " is outside the palette");
        }
        EditResult result;
        {
            std::unique_lock lock(s->mutex);
            for (const auto& p : points)
                s->mask.set(p.x, p.y, p.class_id);
            result.revision = ++s->revision;
            result.labeled_pixels = labeled_pixels(s->mask);
            persist(*s, s->mask, s->revision);
        }
        return result;
    }

    MaskSnapshot snapshot(const std::string& id)
    {
        auto s = find(id);
        std::shared_lock lock(s->mutex);
        return {s->mask, s->revision};
    }

    /// Contrast of the currently labeled classes (every palette class with at
    /// least one labeled pixel, in increasing id order).
    MetricsResult metrics(const std::string& id)
    {
        auto s = find(id);
        auto snap = snapshot_of(*s);
        auto ids = labeled_classes(snap.mask, s->settings.palette_size);
        if (ids.size() < 2)
            throw ServiceError(409, "insufficient labels: at least two classes need labeled pixels");
        const auto dists = io::class_distributions(*s->image, snap.mask, ids);
        auto contrast = evaluate_contrast(dists, s->settings.eval.report, ids);
        nlohmann::json j;
        j["revision"] = snap.revision;
        j["results"] = report_to_json(contrast.report);
        return {snap.revision, std::move(contrast), std::move(j)};
    }

    /// Segmentation of the whole image under the optimal classifier for the
    /// current labels; pixel values are the palette class ids.
    PngResult segmentation(const std::string& id, bool colorized)
    {
        auto s = find(id);
        auto snap = snapshot_of(*s);
        auto ids = labeled_classes(snap.mask, s->settings.palette_size);
        if (ids.size() < 2)
            throw ServiceError(409, "insufficient labels: at least two classes need labeled pixels");
        const auto dists = io::class_distributions(*s->image, snap.mask, ids);
        const auto lut = optimal_segmentation_lut(dists, s->settings.eval.report.tie_break,
                                                  s->settings.eval.report.unseen);
        auto seg = io::segment_image(*s->image, lut);
        for (auto& v : seg.labels)
            if (v != 0)
                v = static_cast<std::uint8_t>(ids[v - 1]);
        seg.n_classes = ids.back();
        return {snap.revision, colorized ? io::encode_color_png(seg) : io::encode_mask_png(seg)};
    }

    PngResult mask_png(const std::string& id)
    {
        auto snap = snapshot(id);
        return {snap.revision, io::encode_mask_png(snap.mask)};
    }

    std::vector<std::uint8_t> image_bytes(const std::string& id) { return find(id)->image_bytes; }

    nlohmann::json describe(const std::string& id)
    {
        auto s = find(id);
        auto snap = snapshot_of(*s);
        nlohmann::json j;
        j["id"] = s->id;
        j["revision"] = snap.revision;
        j["image"] = image_to_json(*s->image);
        j["settings"] = session_settings_to_json(s->settings);
        j["labeled_pixels"] = labeled_pixels(snap.mask);
        return j;
    }

    /// Drops sessions idle for longer than the timeout.
    void sweep()
    {
        std::unique_lock lock(map_mutex_);
        sweep_locked();
    }

private:
    static std::int64_t now_ms()
    {
        return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now().time_since_epoch()).count();
    }

    static std::uint64_t labeled_pixels(const io::LabelMask& m)
    {
        std::uint64_t n = 0;
        for (auto v : m.labels)
            n += v != 0;
        return n;
    }

    static std::vector<int> labeled_classes(const io::LabelMask& m, int palette_size)
    {
        const auto hist = m.histogram();
        std::vector<int> ids;
        for (int c = 1; c <= palette_size; ++c)
            if (hist[static_cast<std::size_t>(c)] > 0)
                ids.push_back(c);
        return ids;
    }

    static MaskSnapshot snapshot_of(const Session& s)
    {
        std::shared_lock lock(s.mutex);
        return {s.mask, s.revision};
    }

    static std::string random_id()
    {
        static thread_local std::mt19937_64 rng{std::random_device{}()};
        static constexpr char hex[] = "0123456789abcdef";
        std::string id;
        for (int i = 0; i < 2; ++i) {
            auto v = rng();
            for (int k = 0; k < 16; ++k, v >>= 4)
                id.push_back(hex[v & 0xF]);
        }
        return id;
    }

    static std::shared_ptr<Session> open(std::vector<std::uint8_t> bytes, const SessionSettings& settings,
                                         std::string id)
    {
        auto session = std::make_shared<Session>();
        try {
            session->image = std::make_shared<const io::ImagePlane>(io::decode_image(bytes, settings.eval.load));
        } catch (const Error& e) {
            throw ServiceError(400, e.what());
        }
        session->id = std::move(id);
        session->image_bytes = std::move(bytes);
        session->settings = settings;
        session->mask = io::LabelMask(session->image->width, session->image->height);
        session->last_access_ms = now_ms();
        return session;
    }

    std::shared_ptr<Session> find(const std::string& id)
    {
        std::shared_ptr<Session> s;
        {
            std::shared_lock lock(map_mutex_);
            auto it = sessions_.find(id);
            if (it != sessions_.end())
                s = it->second;
        }
        if (!s)
            throw ServiceError(404, "unknown session");
        const auto now = now_ms();
        if (now - s->last_access_ms.load() > options_.idle_timeout.count()) {
            remove(id);
            throw ServiceError(404, "session expired");
        }
        s->last_access_ms = now;
        return s;
    }

    void sweep_locked()
    {
        const auto now = now_ms();
        const auto limit = options_.idle_timeout.count();
        for (auto it = sessions_.begin(); it != sessions_.end();) {
            if (now - it->second->last_access_ms.load() > limit)
                it = sessions_.erase(it);
            else
                ++it;
        }
    }

    // Snapshot layout: <persist_dir>/<id>/{image.bin, mask.png, session.json}.
    // Called with the session's write lock held (or before it is published).
    void persist(const Session& s, const io::LabelMask& mask, std::uint64_t revision) const
    {
        if (options_.persist_dir.empty())
            return;
        const auto dir = options_.persist_dir / s.id;
        std::filesystem::create_directories(dir);
        if (!std::filesystem::exists(dir / "image.bin"))
            io::write_file(dir / "image.bin", s.image_bytes);
        io::write_file(dir / "mask.png.tmp", io::encode_mask_png(mask));
        std::filesystem::rename(dir / "mask.png.tmp", dir / "mask.png");
        nlohmann::json meta{{"revision", revision}, {"settings", session_settings_to_json(s.settings)}};
        std::ofstream(dir / "session.json") << meta.dump();
    }

    void restore()
    {
        std::error_code ec;
        if (!std::filesystem::is_directory(options_.persist_dir, ec))
            return;
        for (const auto& entry : std::filesystem::directory_iterator(options_.persist_dir)) {
            if (!entry.is_directory())
                continue;
            try {
                const auto dir = entry.path();
                const auto meta_bytes = io::read_file(dir / "session.json");
                const auto meta = nlohmann::json::parse(meta_bytes.begin(), meta_bytes.end());
                auto settings_json = meta.at("settings");
                settings_json.erase("nominal_range");
                if (settings_json.contains("compute_path")) {
                    settings_json["path"] = settings_json["compute_path"];
                    settings_json.erase("compute_path");
                }
                auto session = open(io::read_file(dir / "image.bin"), parse_session_settings(settings_json),
                                    dir.filename().string());
                session->mask = io::read_mask(dir / "mask.png");
                if (session->mask.width != session->image->width || session->mask.height != session->image->height)
                    continue;
                session->revision = meta.at("revision").get<std::uint64_t>();
                sessions_[session->id] = std::move(session);
            } catch (const std::exception&) {
                // unreadable snapshot: skip it
            }
        }
    }

    StoreOptions options_;
    mutable std::shared_mutex map_mutex_;
    std::map<std::string, std::shared_ptr<Session>> sessions_;
};

} // namespace npc::service

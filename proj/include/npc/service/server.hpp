#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include <httplib.h>
#include <nlohmann/json.hpp>

#include "npc/error.hpp"
#include "npc/io/raster.hpp"
#include "npc/service/session.hpp"

namespace npc::service {

struct ServerOptions {
    std::string host = "127.0.0.1";
    int port = 8080;
    std::size_t max_upload_bytes = 64u << 20;
    std::filesystem::path static_dir; ///< UI bundle served at "/", when it exists
    StoreOptions store;
};

inline constexpr int kDefaultPort = 8080;

/// HTTP+JSON front end over a SessionStore.
///
///   POST   /sessions                     multipart: image file, optional settings JSON
///   GET    /sessions/{id}                session summary
///   POST   /sessions/{id}/labels         {"strokes": [{"class_id": k, "points": [[x, y], ...]}]}
///   GET    /sessions/{id}/metrics        {"revision": r, "results": {...}}
///   GET    /sessions/{id}/segmentation   ?format=ids|color, PNG, X-Revision header
///   GET    /sessions/{id}/mask           painted label mask as PNG, X-Revision header
///   GET    /sessions/{id}/image          the uploaded file
///   DELETE /sessions/{id}
class Server {
public:
    explicit Server(ServerOptions options)
        : options_(std::move(options)), store_(std::make_shared<SessionStore>(options_.store))
    {
        routes();
    }

    SessionStore& store() noexcept { return *store_; }

    /// Binds the listening socket. Port 0 picks a free port. Returns the bound
    /// port, or -1 when the address is unavailable.
    int bind()
    {
        if (options_.port == 0)
            bound_port_ = http_.bind_to_any_port(options_.host);
        else
            bound_port_ = http_.bind_to_port(options_.host, options_.port) ? options_.port : -1;
        return bound_port_;
    }

    /// Serves requests until stop() is called.
    bool listen() { return http_.listen_after_bind(); }

    void stop() { http_.stop(); }
    bool is_running() const { return http_.is_running(); }
    void wait_until_ready() const { http_.wait_until_ready(); }
    int port() const noexcept { return bound_port_; }

private:
    static void send_json(httplib::Response& res, int status, const nlohmann::json& body)
    {
        res.status = status;
        res.set_content(body.dump(), "application/json");
    }

    static void send_error(httplib::Response& res, int status, const std::string& message)
    {
        send_json(res, status, {{"error", message}, {"status", status}});
    }

    template <typename F>
    static void guarded(httplib::Response& res, F&& f)
    {
        try {
            f();
        } catch (const ServiceError& e) {
            send_error(res, e.status(), e.what());
        } catch (const Error& e) {
            send_error(res, is_input_error(e.code()) ? 400 : 422, e.what());
        } catch (const nlohmann::json::exception& e) {
            send_error(res, 400, std::string("malformed JSON: ") + e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, e.what());
        }
    }

    static std::string content_type_for(const std::vector<std::uint8_t>& bytes)
    {
        switch (io::sniff_format(bytes)) {
        case io::FileFormat::Png: return "image/png";
        case io::FileFormat::Tiff: return "image/tiff";
        case io::FileFormat::Unknown: break;
        }
        return "application/octet-stream";
    }

    void routes()
    {
        // SO_REUSEADDR only: without SO_REUSEPORT a second instance cannot share the port
        http_.set_socket_options([](socket_t sock) {
            int yes = 1;
            setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
        });
        http_.set_payload_max_length(options_.max_upload_bytes);
        if (!options_.static_dir.empty() && std::filesystem::is_directory(options_.static_dir))
            http_.set_mount_point("/", options_.static_dir.string());

        http_.Post("/sessions", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                std::vector<std::uint8_t> bytes;
                nlohmann::json settings;
                if (req.is_multipart_form_data()) {
                    if (!req.has_file("image"))
                        throw ServiceError(400, "multipart upload needs an \"image\" part");
                    const auto& content = req.get_file_value("image").content;
                    bytes.assign(content.begin(), content.end());
                    if (req.has_file("settings")) {
                        const auto text = req.get_file_value("settings").content;
                        if (!text.empty())
                            settings = nlohmann::json::parse(text);
                    }
                } else {
                    bytes.assign(req.body.begin(), req.body.end());
                    if (req.has_param("settings"))
                        settings = nlohmann::json::parse(req.get_param_value("settings"));
                }
                if (bytes.empty())
                    throw ServiceError(400, "empty image upload");
                const auto id = store_->create(std::move(bytes), settings);
                auto body = store_->describe(id);
                res.set_header("Location", "/sessions/" + id);
                send_json(res, 201, body);
            });
        });

        http_.Get(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, store_->describe(req.matches[1])); });
        });

        http_.Delete(R"(/sessions/([0-9a-f]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                if (!store_->remove(req.matches[1]))
                    throw ServiceError(404, "unknown session");
                res.status = 204;
            });
        });

        http_.Post(R"(/sessions/([0-9a-f]+)/labels)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto points = SessionStore::parse_strokes(nlohmann::json::parse(req.body));
                const auto r = store_->apply_edit(req.matches[1], points);
                send_json(res, 200, {{"revision", r.revision}, {"labeled_pixels", r.labeled_pixels}});
            });
        });

        http_.Get(R"(/sessions/([0-9a-f]+)/metrics)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, store_->metrics(req.matches[1]).json); });
        });

        http_.Get(R"(/sessions/([0-9a-f]+)/segmentation)",
                  [this](const httplib::Request& req, httplib::Response& res) {
                      guarded(res, [&] {
                          const auto format = req.has_param("format") ? req.get_param_value("format") : "ids";
                          if (format != "ids" && format != "color")
                              throw ServiceError(400, "format must be ids or color");
                          auto r = store_->segmentation(req.matches[1], format == "color");
                          res.set_header("X-Revision", std::to_string(r.revision));
                          res.set_content(std::string(r.png.begin(), r.png.end()), "image/png");
                      });
                  });

        http_.Get(R"(/sessions/([0-9a-f]+)/mask)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                auto r = store_->mask_png(req.matches[1]);
                res.set_header("X-Revision", std::to_string(r.revision));
                res.set_content(std::string(r.png.begin(), r.png.end()), "image/png");
            });
        });

        http_.Get(R"(/sessions/([0-9a-f]+)/image)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto bytes = store_->image_bytes(req.matches[1]);
                res.set_content(std::string(bytes.begin(), bytes.end()), content_type_for(bytes));
            });
        });
    }

    ServerOptions options_;
    std::shared_ptr<SessionStore> store_;
    httplib::Server http_;
    int bound_port_ = -1;
};

} // namespace npc::service

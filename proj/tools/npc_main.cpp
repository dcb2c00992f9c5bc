#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "npc/cli/commands.hpp"
#include "npc/service/server.hpp"

namespace {

npc::service::Server* g_server = nullptr;

void handle_signal(int)
{
    if (g_server)
        g_server->stop();
}

struct Flags {
    std::string mask;
    std::string domain_range;
    int quant_bins = 256;
    std::string tie_break = "lowest";
    std::string unseen = "unassigned";
    std::string channel;
    std::string report;
    std::string out;
    std::string preview;
    std::string path = "histogram-l1";
};

void add_shared_flags(CLI::App* cmd, Flags& f)
{
    cmd->add_option("--mask", f.mask, "Label mask PNG (0 = unlabeled, k = class k)")->required();
    cmd->add_option("--domain-range", f.domain_range,
                    "Nominal value range MIN:MAX (also the quantization range for float images)");
    cmd->add_option("--quant-bins", f.quant_bins, "Quantization bins for float images")
        ->check(CLI::Range(2, 65536));
    cmd->add_option("--tie-break", f.tie_break, "Argmax tie rule")->check(CLI::IsMember({"lowest", "highest"}));
    cmd->add_option("--unseen", f.unseen, "Class for levels without samples")
        ->check(CLI::IsMember({"unassigned", "nearest"}));
    cmd->add_option("--channel", f.channel, "Channel index or 'luma' for multi-channel images");
    cmd->add_option("--report", f.report, "Write the JSON report here instead of stdout");
    cmd->add_option("--path", f.path, "Formula used for NPC; 'all' cross-checks every formula")
        ->check(CLI::IsMember({"definitional", "histogram-l1", "max-form", "min-form", "all"}));
    cmd->add_option("--out", f.out, "Segmentation mask PNG (class ids); rank-bands writes the best band's");
    cmd->add_option("--preview", f.preview, "Colorized segmentation PNG");
}

npc::cli::Options to_options(const Flags& f)
{
    npc::cli::Options opt;
    opt.mask = f.mask;
    opt.out = f.out;
    opt.preview = f.preview;
    auto& load = opt.settings.load;
    load.quant_bins = f.quant_bins;
    if (!f.domain_range.empty()) {
        load.domain_range = npc::cli::parse_range(f.domain_range);
        if (!load.domain_range)
            throw CLI::ValidationError("--domain-range", "expected MIN:MAX with MIN < MAX");
    }
    if (!f.channel.empty()) {
        auto c = npc::io::ChannelSelect::parse(f.channel);
        if (!c)
            throw CLI::ValidationError("--channel", "expected a channel index or 'luma'");
        load.channel = *c;
    }
    auto& rep = opt.settings.report;
    rep.tie_break = *npc::parse_tie_break(f.tie_break);
    rep.unseen = *npc::parse_unseen_policy(f.unseen);
    if (f.path == "all")
        rep.cross_check = true;
    else
        rep.path = *npc::parse_compute_path(f.path);
    return opt;
}

void emit(const nlohmann::json& doc, const std::string& report_path)
{
    const auto text = doc.dump(2) + "\n";
    if (report_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(report_path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw npc::Error(npc::ErrorCode::IoError, "cannot write " + report_path);
    out << text;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Normalized potential contrast: measure, segment and rank images from labeled pixels"};
    app.require_subcommand(1);

    Flags npc_flags, seg_flags, pair_flags, rank_flags;
    std::string npc_image, seg_image, pair_image, manifest;

    auto* npc_cmd = app.add_subcommand("npc", "NPC and PC of the labeled classes");
    npc_cmd->add_option("image", npc_image, "Image (PNG or TIFF)")->required()->check(CLI::ExistingFile);
    add_shared_flags(npc_cmd, npc_flags);

    auto* seg_cmd = app.add_subcommand("segment", "Optimal binarization / multi-class segmentation");
    seg_cmd->add_option("image", seg_image, "Image (PNG or TIFF)")->required()->check(CLI::ExistingFile);
    add_shared_flags(seg_cmd, seg_flags);

    auto* pair_cmd = app.add_subcommand("pairwise", "Two-class NPC for every pair of classes");
    pair_cmd->add_option("image", pair_image, "Image (PNG or TIFF)")->required()->check(CLI::ExistingFile);
    add_shared_flags(pair_cmd, pair_flags);

    auto* rank_cmd = app.add_subcommand("rank-bands", "Rank the bands of a multispectral stack by NPC");
    rank_cmd->add_option("manifest", manifest, "Stack manifest JSON")->required()->check(CLI::ExistingFile);
    add_shared_flags(rank_cmd, rank_flags);

    npc::service::ServerOptions serve;
    int idle_seconds = 3600;
    std::string static_dir, persist_dir;
    std::size_t max_upload_mb = 64;
    auto* serve_cmd = app.add_subcommand("serve", "Run the labeling HTTP service");
    serve_cmd->add_option("--host", serve.host, "Listen address")->capture_default_str();
    serve_cmd->add_option("--port", serve.port, "Listen port; 0 picks a free port")
        ->capture_default_str()
        ->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--static-dir", static_dir, "UI bundle directory served at /");
    serve_cmd->add_option("--persist-dir", persist_dir, "Snapshot sessions (image + mask) to this directory");
    serve_cmd->add_option("--idle-timeout", idle_seconds, "Seconds before an idle session is dropped")
        ->capture_default_str();
    serve_cmd->add_option("--max-upload-mb", max_upload_mb, "Upload size limit")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : npc::cli::kExitUsage;
    }

    try {
        if (*serve_cmd) {
            serve.static_dir = static_dir;
            serve.store.persist_dir = persist_dir;
            serve.store.idle_timeout = std::chrono::seconds(idle_seconds);
            serve.max_upload_bytes = max_upload_mb << 20;
            npc::service::Server server(serve);
            const int port = server.bind();
            if (port < 0) {
                std::cerr << "error: cannot listen on " << serve.host << ":" << serve.port
                          << " (address in use or unavailable)\n";
                return npc::cli::kExitService;
            }
            g_server = &server;
            std::signal(SIGINT, handle_signal);
            std::signal(SIGTERM, handle_signal);
            std::cout << "listening on http://" << serve.host << ":" << port << std::endl;
            server.listen();
            g_server = nullptr;
            return npc::cli::kExitOk;
        }

        nlohmann::json doc;
        std::string report;
        if (*npc_cmd) {
            doc = npc::cli::cmd_npc(npc_image, to_options(npc_flags));
            report = npc_flags.report;
        } else if (*seg_cmd) {
            doc = npc::cli::cmd_segment(seg_image, to_options(seg_flags));
            report = seg_flags.report;
        } else if (*pair_cmd) {
            doc = npc::cli::cmd_pairwise(pair_image, to_options(pair_flags));
            report = pair_flags.report;
        } else if (*rank_cmd) {
            doc = npc::cli::cmd_rank_bands(manifest, to_options(rank_flags));
            report = rank_flags.report;
        }
        emit(doc, report);
        return npc::cli::kExitOk;
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return npc::cli::kExitUsage;
    } catch (const npc::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return npc::cli::exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return npc::cli::kExitCompute;
    }
}

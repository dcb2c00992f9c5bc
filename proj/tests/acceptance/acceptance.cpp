// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any FAIL.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <numeric>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "npc/npc.hpp"
#include "npc/io/image.hpp"
#include "npc/io/mask.hpp"
#include "npc/io/segment.hpp"
#include "support/instances.hpp"
#include "support/run.hpp"
#include "support/temp_dir.hpp"

using namespace npc;
using Clock = std::chrono::steady_clock;

namespace {

const std::filesystem::path kFixtures = NPC_FIXTURE_DIR;

constexpr double kTol = 1e-12;
constexpr int kInstances = 1000;

struct Outcome {
    bool ok = true;
    std::string detail;

    void fail(const std::string& why)
    {
        if (ok)
            detail = why;
        ok = false;
    }
};

double seconds_since(Clock::time_point t0)
{
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v)
{
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.3g", v);
    return buf;
}

bool close(double a, double b, double tol = kTol) { return std::fabs(a - b) <= tol; }

bool close_rel(double a, double b, double tol = kTol)
{
    return std::fabs(a - b) <= tol * std::max({1.0, std::fabs(a), std::fabs(b)});
}

/// PC straight from its definition: map sampled levels to max(X) where
/// P_A >= P_B and to min(X) elsewhere, then take the difference of means.
long double pc_by_definition(const DiscreteDistribution& a, const DiscreteDistribution& b)
{
    const auto& d = a.domain();
    long double mean_a = 0.0L, mean_b = 0.0L;
    for (std::size_t x = 0; x < d.size(); ++x) {
        const long double pa = static_cast<long double>(a.count(x)) / a.total();
        const long double pb = static_cast<long double>(b.count(x)) / b.total();
        const long double g = pa >= pb ? d.nominal_max() : d.nominal_min();
        mean_a += g * pa;
        mean_b += g * pb;
    }
    return mean_a - mean_b;
}

std::size_t random_classes(std::mt19937_64& rng) { return std::uniform_int_distribution<std::size_t>(2, 6)(rng); }

Outcome identity_suite()
{
    std::mt19937_64 rng(1001);
    Outcome o;
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int i = 0; i < kInstances; ++i) {
        const auto k = random_classes(rng);
        auto dists = testing::random_instance(rng, k, 4096);

        // two-class forms on the first pair
        std::vector<double> two;
        for (auto p : kAllPaths)
            two.push_back(npc_two_class(dists[0], dists[1], p));
        two.push_back(testing::naive_half_l1(dists[0], dists[1]));

        // multi-class forms on all k classes
        std::vector<double> multi;
        for (auto p : kAllPaths)
            multi.push_back(npc_multi_class(dists, p));
        multi.push_back(npc_multi_class_mean_difference(dists));

        for (const auto* group : {&two, &multi}) {
            const auto [lo, hi] = std::minmax_element(group->begin(), group->end());
            worst = std::max(worst, *hi - *lo);
            if (*hi - *lo > kTol)
                o.fail("instance " + std::to_string(i) + " spread " + fmt(*hi - *lo));
        }
    }
    const double secs = seconds_since(t0);
    if (secs >= 10.0)
        o.fail("runtime " + fmt(secs) + " s");
    if (o.ok)
        o.detail = std::to_string(kInstances) + " instances, max spread " + fmt(worst) + ", " + fmt(secs) + " s";
    return o;
}

Outcome oracle_suite()
{
    std::mt19937_64 rng(2002);
    Outcome o;
    const auto t0 = Clock::now();
    double worst = 0.0;
    for (int i = 0; i < kInstances; ++i) {
        const std::size_t k = i % 2 == 0 ? 2 : std::uniform_int_distribution<std::size_t>(2, 3)(rng);
        auto dists = testing::random_small_instance(rng, k, k == 2 ? 12 : 8);
        const double oracle = brute_force_npc_oracle(dists);
        const double closed = k == 2 ? npc_two_class(dists[0], dists[1]) : npc_multi_class(dists);
        worst = std::max(worst, std::fabs(oracle - closed));
        if (!close(oracle, closed))
            o.fail("instance " + std::to_string(i) + ": oracle " + fmt(oracle) + " vs " + fmt(closed));
    }
    const double secs = seconds_since(t0);
    if (secs >= 60.0)
        o.fail("runtime " + fmt(secs) + " s");
    if (o.ok)
        o.detail = std::to_string(kInstances) + " instances, max error " + fmt(worst) + ", " + fmt(secs) + " s";
    return o;
}

/// Injective maps of several shapes; the last one is not monotone.
LevelRemap random_remap(std::mt19937_64& rng, const DomainPtr& domain, int kind)
{
    std::uniform_real_distribution<double> u(0.5, 5.0);
    const double s = u(rng), c = u(rng) * 10.0;
    const std::optional<std::pair<double, double>> wide =
        std::pair{-1e4 - c, 1e4 + c}; // nominal range wider than the image of f
    switch (kind) {
    case 0: return make_level_remap(domain, [&](double v) { return s * v + c; });
    case 1: return make_level_remap(domain, [&](double v) { return -s * v + c; }, wide);
    case 2: return make_level_remap(domain, [&](double v) { return std::cbrt(v) * s; });
    case 3: return make_level_remap(domain, [&](double v) { return std::exp(v / 100.0); });
    default: {
        std::vector<double> targets(domain->size());
        std::iota(targets.begin(), targets.end(), 0.0);
        std::shuffle(targets.begin(), targets.end(), rng);
        std::vector<std::pair<double, double>> table;
        for (std::size_t i = 0; i < targets.size(); ++i)
            table.emplace_back(domain->level(i), targets[i] * s);
        return make_level_remap(domain, [table](double v) {
            return std::lower_bound(table.begin(), table.end(), std::pair{v, -1e300})->second;
        });
    }
    }
}

Outcome remap_suite()
{
    std::mt19937_64 rng(3003);
    Outcome o;
    double worst_pc = 0.0, worst_ratio = 0.0;
    for (int i = 0; i < kInstances; ++i) {
        const auto k = random_classes(rng);
        auto dists = testing::random_instance(rng, k, 512);
        const auto remap = random_remap(rng, dists[0].domain_ptr(), i % 5);
        std::vector<DiscreteDistribution> mapped;
        for (const auto& d : dists)
            mapped.push_back(apply_injective_remap(d, remap));

        // NPC is exactly invariant
        if (npc_two_class(mapped[0], mapped[1]) != npc_two_class(dists[0], dists[1]))
            o.fail("instance " + std::to_string(i) + ": two-class NPC changed under remap");
        if (npc_multi_class(mapped) != npc_multi_class(dists))
            o.fail("instance " + std::to_string(i) + ": multi-class NPC changed under remap");

        // PC scales with the nominal range ratio
        const double ratio = remap.target->nominal_range() / dists[0].domain().nominal_range();
        const double pc_x = static_cast<double>(pc_by_definition(dists[0], dists[1]));
        const double pc_t = static_cast<double>(pc_by_definition(mapped[0], mapped[1]));
        worst_pc = std::max(worst_pc, std::fabs(pc_t - ratio * pc_x) / std::max(1.0, std::fabs(pc_t)));
        if (!close_rel(pc_t, ratio * pc_x))
            o.fail("instance " + std::to_string(i) + ": PC_T " + fmt(pc_t) + " vs ratio*PC_X " + fmt(ratio * pc_x));

        // NPC = PC / (max X - min X), on both domains, and the library PC agrees
        for (const auto* pair : {&dists, &mapped}) {
            const auto& a = (*pair)[0];
            const auto& b = (*pair)[1];
            const double npc = npc_two_class(a, b);
            const double pc_def = static_cast<double>(pc_by_definition(a, b));
            worst_ratio = std::max(worst_ratio, std::fabs(npc - pc_def / a.domain().nominal_range()));
            if (!close(npc, pc_def / a.domain().nominal_range()))
                o.fail("instance " + std::to_string(i) + ": NPC " + fmt(npc) + " vs PC/range");
            if (!close_rel(pc_two_class(a, b), pc_def))
                o.fail("instance " + std::to_string(i) + ": library PC differs from definition");
        }
    }
    if (o.ok)
        o.detail = std::to_string(kInstances) + " remaps, NPC bit-identical, max PC rel error " + fmt(worst_pc) +
                   ", max NPC vs PC/range error " + fmt(worst_ratio);
    return o;
}

Outcome accuracy_decomposition()
{
    std::mt19937_64 rng(4004);
    Outcome o;
    double worst = 0.0;
    for (int i = 0; i < kInstances; ++i) {
        const auto k = random_classes(rng);
        // small domains make argmax ties common
        auto dists = testing::random_instance(rng, k, i % 2 ? 8 : 1024);
        const double npc = npc_multi_class(dists);
        std::vector<double> reported;
        for (auto tie : {TieBreak::Lowest, TieBreak::Highest}) {
            ReportSettings s;
            s.tie_break = tie;
            auto r = evaluate_contrast(dists, s);
            reported.push_back(r.report.npc);
            const double from_errors = npc_from_error_rates(r.report.per_class_error);
            worst = std::max(worst, std::fabs(from_errors - npc));
            if (!close(from_errors, npc))
                o.fail("instance " + std::to_string(i) + " tie " + std::string(to_string(tie)) + ": " +
                       fmt(from_errors) + " vs " + fmt(npc));
        }
        if (reported[0] != reported[1])
            o.fail("instance " + std::to_string(i) + ": NPC differs across tie-breaks");
    }
    if (o.ok)
        o.detail = std::to_string(kInstances) + " instances x 2 tie rules, max error " + fmt(worst);
    return o;
}

/// Masses of a and b agree at every level.
bool same_masses(const DiscreteDistribution& a, const DiscreteDistribution& b)
{
    for (std::size_t x = 0; x < a.size(); ++x)
        if (compare_mass(a, b, x) != 0)
            return false;
    return true;
}

Outcome metric_suite()
{
    std::mt19937_64 rng(5005);
    Outcome o;
    int equal_pairs = 0;
    for (int i = 0; i < kInstances; ++i) {
        auto t = testing::random_instance(rng, 3, i % 3 == 0 ? 4 : 256);
        if (i % 4 == 0) {
            // a scaled copy has the same masses
            std::vector<std::uint64_t> scaled(t[0].counts().begin(), t[0].counts().end());
            for (auto& c : scaled)
                c *= 3;
            t[1] = DiscreteDistribution(t[0].domain_ptr(), scaled);
        }
        const double ab = npc_two_class(t[0], t[1]), ba = npc_two_class(t[1], t[0]);
        const double bc = npc_two_class(t[1], t[2]), ac = npc_two_class(t[0], t[2]);
        if (ab != ba)
            o.fail("triple " + std::to_string(i) + ": asymmetric");
        if (npc_two_class(t[0], t[0]) != 0.0)
            o.fail("triple " + std::to_string(i) + ": d(a, a) != 0");
        const bool eq = same_masses(t[0], t[1]);
        equal_pairs += eq;
        if ((ab == 0.0) != eq)
            o.fail("triple " + std::to_string(i) + ": zero distance does not match equal masses");
        if (ac > ab + bc + kTol)
            o.fail("triple " + std::to_string(i) + ": triangle inequality " + fmt(ac) + " > " + fmt(ab + bc));
    }
    if (o.ok)
        o.detail = std::to_string(kInstances) + " triples (" + std::to_string(equal_pairs) + " with equal masses)";
    return o;
}

Outcome fixture_criterion()
{
    Outcome o;
    auto image = io::load_image(kFixtures / "ab.png");
    auto mask = io::load_label_mask(kFixtures / "ab_mask.png", image);
    auto dists = io::class_distributions(image, mask);
    const double oracle = brute_force_npc_oracle(dists);
    const double oracle_pc = oracle * image.domain->nominal_range();
    const double pc_def = static_cast<double>(pc_by_definition(dists[0], dists[1]));
    auto r = evaluate_contrast(dists, {});

    if (!close(oracle, 2.0 / 3.0))
        o.fail("oracle NPC " + fmt(oracle));
    if (!close(r.report.npc, oracle))
        o.fail("NPC " + fmt(r.report.npc) + " vs oracle " + fmt(oracle));
    if (image.domain->nominal_range() != 255.0)
        o.fail("nominal range " + fmt(image.domain->nominal_range()));
    if (!close_rel(r.report.pc, oracle_pc) || !close_rel(r.report.pc, 170.0) || !close_rel(pc_def, 170.0))
        o.fail("PC " + fmt(r.report.pc) + ", oracle " + fmt(oracle_pc) + ", definition " + fmt(pc_def));
    const std::vector<int> lut{r.lut.classify(0), r.lut.classify(1), r.lut.classify(2)};
    if (lut != std::vector<int>{1, 1, 2} || r.lut.domain().level(0) != 0 || r.lut.domain().level(2) != 2)
        o.fail("LUT differs from {0->1, 1->1, 2->2}");
    if (o.ok)
        o.detail = "NPC " + fmt(r.report.npc) + ", PC " + fmt(r.report.pc) + ", LUT {0->1, 1->1, 2->2}";
    return o;
}

void write_megapixel(const std::filesystem::path& dir)
{
    const std::uint32_t w = 1000, h = 1000;
    std::mt19937_64 rng(6006);
    std::normal_distribution<double> paper(190, 18), ink(70, 22), bleed(125, 22);
    io::Raster r;
    r.width = w;
    r.height = h;
    r.ints.resize(std::size_t{w} * h);
    io::LabelMask mask(w, h, 3);
    for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < w; ++x) {
            const int cls = (y / 50) % 3 == 0 ? 2 : (x / 80) % 4 == 0 ? 3 : 1;
            double v = cls == 1 ? paper(rng) : cls == 2 ? ink(rng) : bleed(rng);
            r.ints[std::size_t{y} * w + x] = static_cast<std::uint16_t>(std::clamp(std::round(v), 0.0, 255.0));
            if ((x + y) % 9 == 0)
                mask.set(x, y, static_cast<std::uint8_t>(cls));
        }
    io::write_file(dir / "mp.png", io::encode_png(r));
    io::write_label_mask(dir / "mp_mask.png", mask);
}

Outcome end_to_end_determinism()
{
    Outcome o;
    testing::TempDir dir;
    const auto fx = [](const char* n) { return (kFixtures / n).string(); };
    struct Case {
        const char* image;
        const char* mask;
        std::vector<std::string> extra;
    };
    const std::vector<Case> cases{{"ab.png", "ab_mask.png", {}},
                                  {"ab16.png", "ab_mask.png", {"--path", "all"}},
                                  {"disjoint.png", "disjoint_mask.png", {}},
                                  {"identical.png", "identical_mask.png", {}},
                                  {"bleed.png", "bleed_mask.png", {"--unseen", "nearest"}},
                                  {"bleed.png", "bleed_mask_indexed.png", {"--tie-break", "highest"}},
                                  {"ramp_f32.tif", "ramp_mask.png", {"--quant-bins", "64"}}};
    int runs = 0;
    for (const auto& c : cases)
        for (const char* cmd : {"npc", "segment"}) {
            std::vector<std::string> outputs;
            for (int rep = 0; rep < 2; ++rep) {
                const auto out = dir.path() / ("m" + std::to_string(rep) + ".png");
                const auto prev = dir.path() / ("p" + std::to_string(rep) + ".png");
                std::vector<std::string> args{cmd, fx(c.image), "--mask", fx(c.mask)};
                args.insert(args.end(), c.extra.begin(), c.extra.end());
                auto r = testing::run_cli(args, dir.path());
                if (r.exit_code != 0) {
                    o.fail(std::string(cmd) + " " + c.image + " exited " + std::to_string(r.exit_code) + ": " + r.err);
                    continue;
                }
                std::string blob = r.out;
                if (std::string(cmd) == "segment") {
                    // masks land in separate files, so the reports differ only by path
                    args.insert(args.end(), {"--out", out.string(), "--preview", prev.string()});
                    auto s = testing::run_cli(args, dir.path());
                    blob += testing::slurp(out) + testing::slurp(prev);
                    if (s.exit_code != 0 || testing::slurp(out).empty())
                        o.fail(std::string("segment --out failed for ") + c.image);
                }
                outputs.push_back(blob);
                ++runs;
            }
            if (outputs.size() == 2 && outputs[0] != outputs[1])
                o.fail(std::string(cmd) + " " + c.image + ": outputs differ between runs");
        }

    write_megapixel(dir.path());
    const auto t0 = Clock::now();
    auto r = testing::run_cli({"segment", (dir.path() / "mp.png").string(), "--mask",
                               (dir.path() / "mp_mask.png").string(), "--out", (dir.path() / "mp_seg.png").string()},
                              dir.path());
    const double secs = seconds_since(t0);
    if (r.exit_code != 0)
        o.fail("1 MP segment exited " + std::to_string(r.exit_code) + ": " + r.err);
    else if (secs >= 1.0)
        o.fail("1 MP, 3-class segment took " + fmt(secs) + " s");
    if (o.ok)
        o.detail = std::to_string(runs) + " runs byte-identical; 1 MP 3-class segment " + fmt(secs) + " s";
    return o;
}

Outcome band_ranking()
{
    Outcome o;
    const auto dir = kFixtures / "stack";
    const std::vector<double> constructed{1.0, 0.75, 0.5, 0.25, 0.0};
    const auto mask = io::read_mask(dir / "mask.png");
    // each band's NPC from the oracle, independent of the CLI
    for (std::size_t j = 0; j < constructed.size(); ++j) {
        auto band = io::load_image(dir / ("band_overlap" + std::to_string(j) + ".png"));
        io::validate_label_mask(mask, band);
        const double oracle = brute_force_npc_oracle(io::class_distributions(band, mask));
        if (!close(oracle, constructed[j]))
            o.fail("band_overlap" + std::to_string(j) + " oracle " + fmt(oracle));
    }

    testing::TempDir tmp;
    auto r = testing::run_cli({"rank-bands", (dir / "manifest.json").string(), "--mask", (dir / "mask.png").string()},
                              tmp.path());
    if (r.exit_code != 0) {
        o.fail("rank-bands exited " + std::to_string(r.exit_code) + ": " + r.err);
        return o;
    }
    const auto doc = nlohmann::json::parse(r.out);
    std::vector<std::string> names;
    std::vector<double> values;
    for (const auto& e : doc["ranking"]) {
        names.push_back(e["name"]);
        values.push_back(e["npc"]);
    }
    const std::vector<std::string> expected{"band_overlap0", "band_overlap1", "band_overlap2", "band_overlap3",
                                            "band_overlap4"};
    if (names != expected)
        o.fail("ranking order differs");
    for (std::size_t j = 0; j < values.size() && j < constructed.size(); ++j)
        if (!close(values[j], constructed[j]))
            o.fail("ranked value " + fmt(values[j]) + " at position " + std::to_string(j));
    if (o.ok)
        o.detail = "ranking 1, 0.75, 0.5, 0.25, 0 from a shuffled manifest";
    return o;
}

} // namespace

int main()
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
        {"identity-suite", identity_suite},
        {"oracle-suite", oracle_suite},
        {"remap-suite", remap_suite},
        {"accuracy-decomposition", accuracy_decomposition},
        {"metric-suite", metric_suite},
        {"fixture-ab", fixture_criterion},
        {"end-to-end-determinism", end_to_end_determinism},
        {"band-ranking", band_ranking},
    };
    int failed = 0;
    for (const auto& [name, run] : criteria) {
        Outcome o;
        try {
            o = run();
        } catch (const std::exception& e) {
            o.fail(std::string("exception: ") + e.what());
        }
        std::printf("%s %s: %s\n", o.ok ? "PASS" : "FAIL", name, o.detail.c_str());
        std::fflush(stdout);
        failed += !o.ok;
    }
    return failed == 0 ? 0 : 1;
}

#include <gtest/gtest.h>

#include <filesystem>
#include <map>
#include <random>

#include "npc/contrast.hpp"
#include "npc/io/image.hpp"
#include "npc/io/mask.hpp"
#include "npc/io/raster.hpp"
#include "npc/io/segment.hpp"
#include "npc/io/stack.hpp"
#include "support/temp_dir.hpp"

using namespace npc;
using namespace npc::io;

namespace {

const std::filesystem::path kFixtures = NPC_FIXTURE_DIR;

Raster gray8(std::uint32_t w, std::uint32_t h, std::vector<std::uint16_t> v)
{
    Raster r;
    r.width = w;
    r.height = h;
    r.ints = std::move(v);
    return r;
}

LabelMask make_mask(std::uint32_t w, std::uint32_t h, std::vector<std::uint8_t> labels)
{
    LabelMask m(w, h);
    m.labels = std::move(labels);
    m.n_classes = m.max_label();
    return m;
}

ErrorCode code_of(auto&& f)
{
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    ADD_FAILURE() << "no error raised";
    return ErrorCode::IoError;
}

} // namespace

TEST(Png, EightBitRoundTrip)
{
    auto r = gray8(3, 2, {0, 0, 1, 1, 2, 255});
    auto back = decode_png(encode_png(r));
    EXPECT_EQ(back.width, 3u);
    EXPECT_EQ(back.height, 2u);
    EXPECT_EQ(back.kind, SampleKind::U8);
    EXPECT_EQ(back.ints, r.ints);
}

TEST(Png, SixteenBitRoundTrip)
{
    Raster r = gray8(2, 2, {0, 257, 40000, 65535});
    r.kind = SampleKind::U16;
    auto back = decode_png(encode_png(r));
    EXPECT_EQ(back.kind, SampleKind::U16);
    EXPECT_EQ(back.ints, r.ints);
}

TEST(Png, ReadsForeignEncoderFixtures)
{
    auto ab = load_image(kFixtures / "ab.png");
    EXPECT_EQ(ab.depth, Depth::U8);
    EXPECT_EQ(ab.domain->levels().size(), 3u);
    EXPECT_EQ(ab.value(2, 0), 1.0);
    EXPECT_EQ(ab.value(0, 1), 1.0);
    EXPECT_EQ(ab.domain->nominal_max(), 255.0);

    auto ab16 = load_image(kFixtures / "ab16.png");
    EXPECT_EQ(ab16.depth, Depth::U16);
    EXPECT_EQ(ab16.domain->nominal_max(), 65535.0);
    EXPECT_EQ(ab16.pixels, ab.pixels);
}

TEST(Png, CorruptInputIsAnError)
{
    auto bytes = encode_png(gray8(4, 4, std::vector<std::uint16_t>(16, 7)));
    bytes.resize(bytes.size() / 2);
    EXPECT_EQ(code_of([&] { decode_png(bytes); }), ErrorCode::UnsupportedFormat);
    std::vector<std::uint8_t> junk{'n', 'o', 't', ' ', 'a', 'n', ' ', 'i', 'm', 'a', 'g', 'e'};
    EXPECT_EQ(code_of([&] { decode_raster(junk); }), ErrorCode::UnsupportedFormat);
}

TEST(Tiff, RoundTripsAllSampleKinds)
{
    npc::testing::TempDir dir;
    Raster u8 = gray8(3, 1, {4, 5, 6});
    Raster u16 = gray8(3, 1, {4, 500, 60000});
    u16.kind = SampleKind::U16;
    Raster f32;
    f32.width = 3;
    f32.height = 1;
    f32.kind = SampleKind::F32;
    f32.floats = {0.25f, 0.5f, 1.0f};
    for (const auto* r : {&u8, &u16, &f32}) {
        write_tiff(dir.path() / "x.tif", *r);
        auto back = decode_tiff(read_file(dir.path() / "x.tif"));
        EXPECT_EQ(back.kind, r->kind);
        EXPECT_EQ(back.ints, r->ints);
        EXPECT_EQ(back.floats, r->floats);
    }
}

TEST(Tiff, FloatImageIsQuantized)
{
    LoadOptions opt;
    opt.quant_bins = 11;
    auto plane = load_image(kFixtures / "ramp_f32.tif", opt);
    EXPECT_EQ(plane.depth, Depth::F32Quantized);
    // bins 0 1 2 3 7 8 9 10 are present; bin k sits at k / 10
    ASSERT_EQ(plane.domain->size(), 8u);
    EXPECT_DOUBLE_EQ(plane.domain->level(0), 0.0);
    EXPECT_DOUBLE_EQ(plane.domain->level(3), 0.3);
    EXPECT_DOUBLE_EQ(plane.domain->level(4), 0.7);
    EXPECT_DOUBLE_EQ(plane.domain->level(7), 1.0);
    EXPECT_EQ(plane.domain->nominal_min(), 0.0);
    EXPECT_EQ(plane.domain->nominal_max(), 1.0);
}

TEST(Quantizer, BinsAndLevels)
{
    Quantizer q{0.0, 1.0, 4};
    EXPECT_EQ(q.bin(-1.0), 0);
    EXPECT_EQ(q.bin(0.0), 0);
    EXPECT_EQ(q.bin(0.26), 1);
    EXPECT_EQ(q.bin(0.999), 3);
    EXPECT_EQ(q.bin(1.0), 3);
    EXPECT_EQ(q.bin(7.0), 3);
    EXPECT_DOUBLE_EQ(q.level(0), 0.0);
    EXPECT_DOUBLE_EQ(q.level(3), 1.0);
}

TEST(Quantizer, CustomRangeAndNaN)
{
    Raster r;
    r.width = 3;
    r.height = 1;
    r.kind = SampleKind::F32;
    r.floats = {-5.0f, 0.0f, 5.0f};
    LoadOptions opt;
    opt.quant_bins = 3;
    opt.domain_range = std::pair{-5.0, 5.0};
    auto plane = make_plane(r, opt);
    EXPECT_EQ(plane.domain->levels().size(), 3u);
    EXPECT_DOUBLE_EQ(plane.domain->level(1), 0.0);
    EXPECT_EQ(plane.domain->nominal_range(), 10.0);

    r.floats[1] = std::numeric_limits<float>::quiet_NaN();
    EXPECT_EQ(code_of([&] { make_plane(r, opt); }), ErrorCode::UnsupportedFormat);
}

TEST(Channels, MultiChannelNeedsASelector)
{
    EXPECT_EQ(code_of([&] { load_image(kFixtures / "rgb.png"); }), ErrorCode::AmbiguousChannels);

    LoadOptions opt;
    opt.channel = ChannelSelect::channel(0);
    auto red = load_image(kFixtures / "rgb.png", opt);
    EXPECT_EQ(red.value(1, 0), 200.0);

    opt.channel = ChannelSelect::luma();
    auto luma = load_image(kFixtures / "rgb.png", opt);
    // 0.299*10 + 0.587*20 + 0.114*30 = 18.15
    EXPECT_EQ(luma.value(0, 0), 18.0);
    // 0.299*200 + 0.587*30 + 0.114*40 = 82.17
    EXPECT_EQ(luma.value(1, 0), 82.0);

    opt.channel = ChannelSelect::channel(5);
    EXPECT_EQ(code_of([&] { load_image(kFixtures / "rgb.png", opt); }), ErrorCode::AmbiguousChannels);
}

TEST(Channels, SelectorParsing)
{
    EXPECT_EQ(ChannelSelect::parse("luma")->kind, ChannelSelect::Kind::Luma);
    EXPECT_EQ(ChannelSelect::parse("2")->index, 2);
    EXPECT_FALSE(ChannelSelect::parse("red").has_value());
    EXPECT_FALSE(ChannelSelect::parse("").has_value());
}

TEST(Image, ConstantImageIsRejected)
{
    auto bytes = encode_png(gray8(2, 2, {9, 9, 9, 9}));
    EXPECT_EQ(code_of([&] { decode_image(bytes); }), ErrorCode::InvalidDomain);
}

TEST(Image, DomainRangeOverridesNominal)
{
    LoadOptions opt;
    opt.domain_range = std::pair{0.0, 1023.0};
    auto plane = load_image(kFixtures / "ab.png", opt);
    EXPECT_EQ(plane.domain->nominal_range(), 1023.0);
    opt.domain_range = std::pair{0.0, 1.0};
    EXPECT_EQ(code_of([&] { load_image(kFixtures / "ab.png", opt); }), ErrorCode::InvalidDomain);
}

TEST(Mask, LoadsAndValidates)
{
    auto image = load_image(kFixtures / "bleed.png");
    auto gray = load_label_mask(kFixtures / "bleed_mask.png", image);
    auto indexed = load_label_mask(kFixtures / "bleed_mask_indexed.png", image);
    EXPECT_EQ(gray.n_classes, 3);
    EXPECT_EQ(gray, indexed);
}

TEST(Mask, Errors)
{
    auto image = load_image(kFixtures / "ab.png");
    LabelMask blank(3, 2);
    EXPECT_EQ(code_of([&] { validate_label_mask(blank, image); }), ErrorCode::EmptyClassInMask);

    auto gap = make_mask(3, 2, {1, 1, 1, 3, 3, 3});
    EXPECT_EQ(code_of([&] { validate_label_mask(gap, image); }), ErrorCode::EmptyClassInMask);

    auto small = make_mask(2, 2, {1, 1, 2, 2});
    EXPECT_EQ(code_of([&] { validate_label_mask(small, image); }), ErrorCode::DimensionMismatch);

    EXPECT_EQ(code_of([&] { read_mask(kFixtures / "does_not_exist.png"); }), ErrorCode::IoError);
}

TEST(Mask, PngRoundTrip)
{
    auto m = make_mask(4, 1, {0, 1, 2, 7});
    auto back = decode_mask_png(encode_mask_png(m));
    EXPECT_EQ(back.labels, m.labels);

    auto color = decode_png(encode_color_png(m));
    ASSERT_EQ(color.channels, 4);
    EXPECT_EQ(color.ints[3], 0); // class 0 transparent
    EXPECT_EQ(color.ints[4], 228);
    EXPECT_EQ(color.ints[7], 255);
}

TEST(Segment, ExtractedSamplesMatchMask)
{
    auto image = load_image(kFixtures / "ab.png");
    auto mask = load_label_mask(kFixtures / "ab_mask.png", image);
    auto samples = extract_samples(image, mask);
    ASSERT_EQ(samples.size(), 2u);
    EXPECT_EQ(samples[0].values, (std::vector<double>{0, 0, 1}));
    EXPECT_EQ(samples[1].values, (std::vector<double>{1, 2, 2}));
    auto dists = class_distributions(image, mask);
    EXPECT_NEAR(npc_two_class(dists[0], dists[1]), 2.0 / 3.0, 1e-15);
}

TEST(Segment, LabeledPixelsFollowTheLut)
{
    auto image = load_image(kFixtures / "bleed.png");
    auto mask = load_label_mask(kFixtures / "bleed_mask.png", image);
    auto dists = class_distributions(image, mask);
    auto lut = optimal_segmentation_lut(dists);
    auto seg = segment_image(image, lut);
    ASSERT_EQ(seg.labels.size(), image.pixels.size());
    // error rates recounted from the segmentation agree with the LUT's
    std::vector<std::uint64_t> wrong(3, 0), total(3, 0);
    for (std::size_t p = 0; p < mask.labels.size(); ++p) {
        const int c = mask.labels[p];
        if (c == 0)
            continue;
        ++total[c - 1];
        if (seg.labels[p] != c)
            ++wrong[c - 1];
        EXPECT_NE(seg.labels[p], 0);
    }
    auto e = error_rates(dists, lut);
    for (int i = 0; i < 3; ++i)
        EXPECT_DOUBLE_EQ(e[i], static_cast<double>(wrong[i]) / static_cast<double>(total[i]));
}

TEST(Stack, ManifestOrderAndErrors)
{
    auto stack = load_stack(kFixtures / "stack" / "manifest.json");
    ASSERT_EQ(stack.bands.size(), 5u);
    EXPECT_EQ(stack.band_names[0], "band_overlap2");

    npc::testing::TempDir dir;
    auto write = [&](const std::string& text) {
        const auto p = dir.path() / "m.json";
        write_file(p, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
        return p;
    };
    EXPECT_EQ(code_of([&] { read_stack_manifest(write("{\"bands\": []}")); }), ErrorCode::ManifestError);
    EXPECT_EQ(code_of([&] { read_stack_manifest(write("{bands")); }), ErrorCode::ManifestError);
    EXPECT_EQ(code_of([&] { read_stack_manifest(write(R"({"bands":[{"path":"a.png"},{"path":"b/a.png"}]})")); }),
              ErrorCode::ManifestError);

    write_file(dir.path() / "big.png", encode_png(gray8(3, 3, {0, 1, 2, 0, 1, 2, 0, 1, 2})));
    write_file(dir.path() / "small.png", encode_png(gray8(2, 1, {0, 1})));
    const auto m = write(R"({"bands":[{"path":"big.png"},{"path":"small.png"}]})");
    EXPECT_EQ(code_of([&] { load_stack(m); }), ErrorCode::DimensionMismatch);
}

TEST(Mask, GapNamesTheMissingClass)
{
    auto image = load_image(kFixtures / "ab.png");
    try {
        validate_label_mask(make_mask(3, 2, {1, 1, 1, 3, 3, 3}), image);
        FAIL();
    } catch (const Error& e) {
        EXPECT_NE(std::string(e.what()).find("class 2"), std::string::npos) << e.what();
    }
}

TEST(Segment, SingleClassCoversEveryPixel)
{
    auto image = load_image(kFixtures / "bleed.png");
    auto mask = make_mask(image.width, image.height, std::vector<std::uint8_t>(image.pixel_count(), 1));
    validate_label_mask(mask, image);
    auto samples = extract_samples(image, mask);
    ASSERT_EQ(samples.size(), 1u);
    EXPECT_EQ(samples[0].count(), std::size_t{image.width} * image.height);
}

TEST(Segment, CountsMatchCoordinateWalk)
{
    std::mt19937_64 rng(31);
    const std::uint32_t w = 37, h = 23;
    Raster r = gray8(w, h, {});
    auto mask = make_mask(w, h, std::vector<std::uint8_t>(std::size_t{w} * h));
    std::uniform_int_distribution<int> value(0, 15), label(0, 3);
    for (std::size_t p = 0; p < std::size_t{w} * h; ++p) {
        r.ints.push_back(static_cast<std::uint16_t>(value(rng)));
        mask.labels[p] = static_cast<std::uint8_t>(label(rng));
    }
    mask.labels[0] = 1;
    mask.labels[1] = 2;
    mask.labels[2] = 3;
    mask.n_classes = 3;
    auto image = decode_image(encode_png(r));
    validate_label_mask(mask, image);
    auto samples = extract_samples(image, mask);

    std::map<std::pair<int, int>, int> tally; // (class, value) -> pixels
    for (std::uint32_t y = 0; y < h; ++y)
        for (std::uint32_t x = 0; x < w; ++x)
            if (int c = mask.at(x, y))
                ++tally[{c, r.ints[std::size_t{y} * w + x]}];
    std::map<std::pair<int, int>, int> got;
    for (const auto& s : samples)
        for (double v : s.values)
            ++got[{s.class_id, static_cast<int>(v)}];
    EXPECT_EQ(got, tally);
}

TEST(Segment, MaskRoundTripsThroughPng)
{
    npc::testing::TempDir dir;
    auto image = load_image(kFixtures / "bleed.png");
    auto mask = load_label_mask(kFixtures / "bleed_mask.png", image);
    auto lut = optimal_segmentation_lut(class_distributions(image, mask), TieBreak::Lowest, UnseenPolicy::Nearest);
    auto seg = segment_image(image, lut);
    write_label_mask(dir.path() / "seg.png", seg);
    auto back = read_mask(dir.path() / "seg.png");
    EXPECT_EQ(back.labels, seg.labels);
    EXPECT_EQ(back.width, seg.width);
    EXPECT_EQ(back.height, seg.height);
}

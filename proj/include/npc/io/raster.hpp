#pragma once

// Raw raster decode/encode for PNG (libpng) and TIFF (libtiff). Rasters keep
// the stored sample values untouched: no gamma, no palette expansion unless
// asked for, no scaling of 16-bit data.

#include <png.h>
#include <tiffio.h>

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "npc/error.hpp"

namespace npc::io {

enum class SampleKind { U8, U16, F32 };

struct Raster {
    std::uint32_t width = 0;
    std::uint32_t height = 0;
    int channels = 1;
    SampleKind kind = SampleKind::U8;
    std::vector<std::uint16_t> ints; ///< U8 / U16 samples, interleaved, row-major
    std::vector<float> floats;       ///< F32 samples, interleaved, row-major

    std::size_t pixel_count() const noexcept { return std::size_t{width} * height; }
    bool is_float() const noexcept { return kind == SampleKind::F32; }
};

enum class FileFormat { Png, Tiff, Unknown };

inline FileFormat sniff_format(std::span<const std::uint8_t> bytes) noexcept
{
    static constexpr std::uint8_t png_sig[8] = {0x89, 'P', 'N', 'G', 0x0D, 0x0A, 0x1A, 0x0A};
    if (bytes.size() >= 8 && std::memcmp(bytes.data(), png_sig, 8) == 0)
        return FileFormat::Png;
    if (bytes.size() >= 4 && ((bytes[0] == 'I' && bytes[1] == 'I' && bytes[2] == 42 && bytes[3] == 0) ||
                              (bytes[0] == 'M' && bytes[1] == 'M' && bytes[2] == 0 && bytes[3] == 42)))
        return FileFormat::Tiff;
    return FileFormat::Unknown;
}

inline std::vector<std::uint8_t> read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw Error(ErrorCode::IoError, "cannot open " + path.string());
    return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out)
        throw Error(ErrorCode::IoError, "short write to " + path.string());
}

// ---------------------------------------------------------------- PNG

namespace detail {

struct PngReadStream {
    std::span<const std::uint8_t> bytes;
    std::size_t offset = 0;
};

inline void png_read_callback(png_structp png, png_bytep out, png_size_t length)
{
    auto* s = static_cast<PngReadStream*>(png_get_io_ptr(png));
    if (s->offset + length > s->bytes.size())
        png_error(png, "unexpected end of PNG data");
    std::memcpy(out, s->bytes.data() + s->offset, length);
    s->offset += length;
}

inline void png_write_callback(png_structp png, png_bytep data, png_size_t length)
{
    auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
    out->insert(out->end(), data, data + length);
}

inline void png_flush_callback(png_structp) {}

inline void png_quiet_warning(png_structp, png_const_charp) {}

[[noreturn]] inline void png_quiet_error(png_structp png, png_const_charp)
{
    png_longjmp(png, 1);
}

// Everything that may longjmp lives here; no objects with destructors are
// created after setjmp.
inline bool png_decode_rows(png_structp png, png_infop info, PngReadStream* stream, bool palette_indices,
                            Raster* out, std::vector<std::uint8_t>* buffer, std::vector<png_bytep>* rows)
{
    if (setjmp(png_jmpbuf(png)))
        return false;
    png_set_read_fn(png, stream, png_read_callback);
    png_read_info(png, info);

    const png_byte color = png_get_color_type(png, info);
    const png_byte depth = png_get_bit_depth(png, info);
    if (color == PNG_COLOR_TYPE_PALETTE) {
        if (palette_indices)
            png_set_packing(png);
        else
            png_set_palette_to_rgb(png);
    } else if (color == PNG_COLOR_TYPE_GRAY && depth < 8) {
        png_set_expand_gray_1_2_4_to_8(png);
    }
    png_set_interlace_handling(png);
    png_read_update_info(png, info);

    out->width = png_get_image_width(png, info);
    out->height = png_get_image_height(png, info);
    out->channels = png_get_channels(png, info);
    const int out_depth = png_get_bit_depth(png, info);
    out->kind = out_depth == 16 ? SampleKind::U16 : SampleKind::U8;

    const std::size_t rowbytes = png_get_rowbytes(png, info);
    buffer->resize(rowbytes * out->height);
    rows->resize(out->height);
    for (std::uint32_t y = 0; y < out->height; ++y)
        (*rows)[y] = buffer->data() + y * rowbytes;
    png_read_image(png, rows->data());
    png_read_end(png, nullptr);
    return true;
}

inline bool png_encode_rows(png_structp png, png_infop info, const Raster* raster, std::vector<std::uint8_t>* out,
                            std::vector<std::uint8_t>* buffer, std::vector<png_bytep>* rows)
{
    if (setjmp(png_jmpbuf(png)))
        return false;
    png_set_write_fn(png, out, png_write_callback, png_flush_callback);
    int color = PNG_COLOR_TYPE_GRAY;
    if (raster->channels == 2)
        color = PNG_COLOR_TYPE_GRAY_ALPHA;
    else if (raster->channels == 3)
        color = PNG_COLOR_TYPE_RGB;
    else if (raster->channels == 4)
        color = PNG_COLOR_TYPE_RGBA;
    const int depth = raster->kind == SampleKind::U16 ? 16 : 8;
    png_set_IHDR(png, info, raster->width, raster->height, depth, color, PNG_INTERLACE_NONE,
                 PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    const std::size_t per_row = std::size_t{raster->width} * raster->channels;
    const std::size_t bytes_per = depth / 8;
    buffer->resize(per_row * bytes_per * raster->height);
    for (std::size_t i = 0; i < raster->ints.size(); ++i) {
        if (bytes_per == 2) {
            (*buffer)[2 * i] = static_cast<std::uint8_t>(raster->ints[i] >> 8);
            (*buffer)[2 * i + 1] = static_cast<std::uint8_t>(raster->ints[i] & 0xFF);
        } else {
            (*buffer)[i] = static_cast<std::uint8_t>(raster->ints[i]);
        }
    }
    rows->resize(raster->height);
    for (std::uint32_t y = 0; y < raster->height; ++y)
        (*rows)[y] = buffer->data() + y * per_row * bytes_per;
    png_write_image(png, rows->data());
    png_write_end(png, nullptr);
    return true;
}

} // namespace detail

/// Decodes a PNG. With `palette_indices`, indexed images yield their raw
/// palette indices instead of RGB.
inline Raster decode_png(std::span<const std::uint8_t> bytes, bool palette_indices = false)
{
    png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_quiet_error, detail::png_quiet_warning);
    if (!png)
        throw Error(ErrorCode::IoError, "libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    Raster raster;
    std::vector<std::uint8_t> buffer;
    std::vector<png_bytep> rows;
    detail::PngReadStream stream{bytes, 0};
    const bool ok = info && detail::png_decode_rows(png, info, &stream, palette_indices, &raster, &buffer, &rows);
    png_destroy_read_struct(&png, info ? &info : nullptr, nullptr);
    if (!ok)
        throw Error(ErrorCode::UnsupportedFormat, "corrupt or unsupported PNG data");

    raster.ints.resize(raster.pixel_count() * raster.channels);
    if (raster.kind == SampleKind::U16) {
        for (std::size_t i = 0; i < raster.ints.size(); ++i)
            raster.ints[i] = static_cast<std::uint16_t>((buffer[2 * i] << 8) | buffer[2 * i + 1]);
    } else {
        std::copy(buffer.begin(), buffer.begin() + static_cast<std::ptrdiff_t>(raster.ints.size()),
                  raster.ints.begin());
    }
    return raster;
}

/// Encodes an integer raster (U8 with 1-4 channels, or U16) as PNG.
inline std::vector<std::uint8_t> encode_png(const Raster& raster)
{
    if (raster.is_float() || raster.channels < 1 || raster.channels > 4 ||
        raster.ints.size() != raster.pixel_count() * raster.channels || raster.pixel_count() == 0)
        throw Error(ErrorCode::UnsupportedFormat, "raster cannot be written as PNG");
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, detail::png_quiet_error, detail::png_quiet_warning);
    if (!png)
        throw Error(ErrorCode::IoError, "libpng initialization failed");
    png_infop info = png_create_info_struct(png);
    std::vector<std::uint8_t> out, buffer;
    std::vector<png_bytep> rows;
    const bool ok = info && detail::png_encode_rows(png, info, &raster, &out, &buffer, &rows);
    png_destroy_write_struct(&png, info ? &info : nullptr);
    if (!ok)
        throw Error(ErrorCode::IoError, "PNG encoding failed");
    return out;
}

// ---------------------------------------------------------------- TIFF

namespace detail {

struct TiffMemory {
    std::span<const std::uint8_t> bytes;
    toff_t offset = 0;
};

inline tsize_t tiff_read(thandle_t h, tdata_t buf, tsize_t size)
{
    auto* m = static_cast<TiffMemory*>(h);
    if (m->offset >= m->bytes.size())
        return 0;
    const auto n = std::min<toff_t>(static_cast<toff_t>(size), m->bytes.size() - m->offset);
    std::memcpy(buf, m->bytes.data() + m->offset, n);
    m->offset += n;
    return static_cast<tsize_t>(n);
}

inline tsize_t tiff_write(thandle_t, tdata_t, tsize_t) { return 0; }

inline toff_t tiff_seek(thandle_t h, toff_t off, int whence)
{
    auto* m = static_cast<TiffMemory*>(h);
    switch (whence) {
    case SEEK_SET: m->offset = off; break;
    case SEEK_CUR: m->offset += off; break;
    case SEEK_END: m->offset = m->bytes.size() + off; break;
    default: return static_cast<toff_t>(-1);
    }
    return m->offset;
}

inline int tiff_close(thandle_t) { return 0; }
inline toff_t tiff_size(thandle_t h) { return static_cast<TiffMemory*>(h)->bytes.size(); }
inline int tiff_map(thandle_t, tdata_t*, toff_t*) { return 0; }
inline void tiff_unmap(thandle_t, tdata_t, toff_t) {}

inline void tiff_silence()
{
    static const bool once = [] {
        TIFFSetErrorHandler(nullptr);
        TIFFSetWarningHandler(nullptr);
        return true;
    }();
    (void)once;
}

struct TiffCloser {
    void operator()(TIFF* t) const noexcept
    {
        if (t)
            TIFFClose(t);
    }
};
using TiffHandle = std::unique_ptr<TIFF, TiffCloser>;

} // namespace detail

/// Decodes the first directory of a stripped, contiguous TIFF with 8/16-bit
/// unsigned or 32-bit float samples.
inline Raster decode_tiff(std::span<const std::uint8_t> bytes)
{
    detail::tiff_silence();
    detail::TiffMemory mem{bytes, 0};
    detail::TiffHandle tif(TIFFClientOpen("memory", "rm", &mem, detail::tiff_read, detail::tiff_write,
                                          detail::tiff_seek, detail::tiff_close, detail::tiff_size,
                                          detail::tiff_map, detail::tiff_unmap));
    if (!tif)
        throw Error(ErrorCode::UnsupportedFormat, "corrupt or unsupported TIFF data");

    std::uint32_t width = 0, height = 0;
    std::uint16_t spp = 1, bps = 8, format = SAMPLEFORMAT_UINT, planar = PLANARCONFIG_CONTIG;
    TIFFGetField(tif.get(), TIFFTAG_IMAGEWIDTH, &width);
    TIFFGetField(tif.get(), TIFFTAG_IMAGELENGTH, &height);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLESPERPIXEL, &spp);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_BITSPERSAMPLE, &bps);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_SAMPLEFORMAT, &format);
    TIFFGetFieldDefaulted(tif.get(), TIFFTAG_PLANARCONFIG, &planar);
    if (width == 0 || height == 0)
        throw Error(ErrorCode::UnsupportedFormat, "TIFF has no pixels");
    if (TIFFIsTiled(tif.get()))
        throw Error(ErrorCode::UnsupportedFormat, "tiled TIFF is not supported");
    if (planar != PLANARCONFIG_CONTIG && spp > 1)
        throw Error(ErrorCode::UnsupportedFormat, "planar-separate TIFF is not supported");

    Raster r;
    r.width = width;
    r.height = height;
    r.channels = spp;
    if (format == SAMPLEFORMAT_IEEEFP && bps == 32)
        r.kind = SampleKind::F32;
    else if (format == SAMPLEFORMAT_UINT && bps == 8)
        r.kind = SampleKind::U8;
    else if (format == SAMPLEFORMAT_UINT && bps == 16)
        r.kind = SampleKind::U16;
    else
        throw Error(ErrorCode::UnsupportedFormat,
                    "TIFF sample layout not supported (" + std::to_string(bps) + " bits, format " +
                        std::to_string(format) + ")");

    const std::size_t per_row = std::size_t{width} * spp;
    std::vector<std::uint8_t> line(static_cast<std::size_t>(TIFFScanlineSize(tif.get())));
    if (line.size() < per_row * (bps / 8))
        throw Error(ErrorCode::UnsupportedFormat, "unexpected TIFF scanline size");
    if (r.is_float())
        r.floats.resize(per_row * height);
    else
        r.ints.resize(per_row * height);
    for (std::uint32_t y = 0; y < height; ++y) {
        if (TIFFReadScanline(tif.get(), line.data(), y, 0) < 0)
            throw Error(ErrorCode::UnsupportedFormat, "TIFF scanline " + std::to_string(y) + " unreadable");
        const std::size_t base = std::size_t{y} * per_row;
        if (r.kind == SampleKind::F32) {
            std::memcpy(r.floats.data() + base, line.data(), per_row * sizeof(float));
        } else if (r.kind == SampleKind::U16) {
            for (std::size_t i = 0; i < per_row; ++i) {
                std::uint16_t v;
                std::memcpy(&v, line.data() + 2 * i, 2);
                r.ints[base + i] = v;
            }
        } else {
            std::copy(line.begin(), line.begin() + static_cast<std::ptrdiff_t>(per_row), r.ints.begin() + base);
        }
    }
    return r;
}

/// Writes a single-directory stripped TIFF.
inline void write_tiff(const std::filesystem::path& path, const Raster& r)
{
    detail::tiff_silence();
    detail::TiffHandle tif(TIFFOpen(path.string().c_str(), "w"));
    if (!tif)
        throw Error(ErrorCode::IoError, "cannot write " + path.string());
    const std::uint16_t bps = r.kind == SampleKind::U8 ? 8 : (r.kind == SampleKind::U16 ? 16 : 32);
    TIFFSetField(tif.get(), TIFFTAG_IMAGEWIDTH, r.width);
    TIFFSetField(tif.get(), TIFFTAG_IMAGELENGTH, r.height);
    TIFFSetField(tif.get(), TIFFTAG_SAMPLESPERPIXEL, static_cast<std::uint16_t>(r.channels));
    TIFFSetField(tif.get(), TIFFTAG_BITSPERSAMPLE, bps);
    TIFFSetField(tif.get(), TIFFTAG_SAMPLEFORMAT,
                 static_cast<std::uint16_t>(r.is_float() ? SAMPLEFORMAT_IEEEFP : SAMPLEFORMAT_UINT));
    TIFFSetField(tif.get(), TIFFTAG_PLANARCONFIG, PLANARCONFIG_CONTIG);
    TIFFSetField(tif.get(), TIFFTAG_PHOTOMETRIC,
                 static_cast<std::uint16_t>(r.channels >= 3 ? PHOTOMETRIC_RGB : PHOTOMETRIC_MINISBLACK));
    TIFFSetField(tif.get(), TIFFTAG_ROWSPERSTRIP, 1u);
    const std::size_t per_row = std::size_t{r.width} * r.channels;
    std::vector<std::uint8_t> line(per_row * (bps / 8));
    for (std::uint32_t y = 0; y < r.height; ++y) {
        const std::size_t base = std::size_t{y} * per_row;
        if (r.kind == SampleKind::F32) {
            std::memcpy(line.data(), r.floats.data() + base, per_row * sizeof(float));
        } else if (r.kind == SampleKind::U16) {
            std::memcpy(line.data(), r.ints.data() + base, per_row * 2);
        } else {
            for (std::size_t i = 0; i < per_row; ++i)
                line[i] = static_cast<std::uint8_t>(r.ints[base + i]);
        }
        if (TIFFWriteScanline(tif.get(), line.data(), y, 0) < 0)
            throw Error(ErrorCode::IoError, "TIFF write failed");
    }
}

/// Decodes PNG or TIFF based on the file signature.
inline Raster decode_raster(std::span<const std::uint8_t> bytes, bool palette_indices = false)
{
    switch (sniff_format(bytes)) {
    case FileFormat::Png: return decode_png(bytes, palette_indices);
    case FileFormat::Tiff: return decode_tiff(bytes);
    case FileFormat::Unknown: break;
    }
    throw Error(ErrorCode::UnsupportedFormat, "not a PNG or TIFF file");
}

} // namespace npc::io

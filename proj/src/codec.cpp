#include "scaleguard/codec.hpp"

#include "scaleguard/errors.hpp"

#include <algorithm>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>

#include <jpeglib.h>
#include <png.h>

namespace scaleguard {

namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> read_bytes(const fs::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open " + path.string());
    }
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_bytes(const fs::path& path, std::span<const std::uint8_t> bytes)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw IoError("cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw IoError("short write to " + path.string());
    }
}

std::string lower_ext(const fs::path& path)
{
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

// ---------------------------------------------------------------- PNM

RasterImage decode_pnm(std::span<const std::uint8_t> bytes)
{
    std::size_t pos = 0;
    auto skip_space = [&] {
        for (;;) {
            while (pos < bytes.size() && std::isspace(bytes[pos])) {
                ++pos;
            }
            if (pos < bytes.size() && bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') {
                    ++pos;
                }
                continue;
            }
            return;
        }
    };
    auto read_int = [&] {
        skip_space();
        long value = 0;
        bool any = false;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            any = true;
            ++pos;
            if (value > 1L << 24) {
                throw IoError("PNM header value too large");
            }
        }
        if (!any) {
            throw IoError("malformed PNM header");
        }
        return static_cast<int>(value);
    };

    if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '6')) {
        throw IoError("not a binary PGM/PPM file");
    }
    const int channels = bytes[1] == '6' ? 3 : 1;
    pos = 2;
    const int width = read_int();
    const int height = read_int();
    const int maxval = read_int();
    if (maxval != 255) {
        throw IoError("only 8-bit PNM (maxval 255) is supported");
    }
    ++pos; // single whitespace before the raster
    const std::size_t n = static_cast<std::size_t>(width) * height * channels;
    if (width <= 0 || height <= 0 || pos + n > bytes.size()) {
        throw IoError("truncated PNM raster");
    }
    std::vector<std::uint8_t> data(bytes.begin() + static_cast<std::ptrdiff_t>(pos),
                                   bytes.begin() + static_cast<std::ptrdiff_t>(pos + n));
    return RasterImage(height, width, channels, std::move(data));
}

// ---------------------------------------------------------------- JPEG

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

extern "C" void jpeg_error_exit_jump(j_common_ptr info)
{
    auto* err = reinterpret_cast<JpegErrorManager*>(info->err);
    (*info->err->format_message)(info, err->message);
    std::longjmp(err->jump, 1);
}

// Only trivially destructible locals live between setjmp and the libjpeg calls.
bool jpeg_compress_raw(const std::uint8_t* pixels, int height, int width, int channels, int quality,
                       unsigned char** out, unsigned long* out_size, char* message)
{
    jpeg_compress_struct cinfo;
    JpegErrorManager jerr;
    cinfo.err = jpeg_std_error(&jerr.base);
    jerr.base.error_exit = jpeg_error_exit_jump;
    if (setjmp(jerr.jump)) {
        std::strcpy(message, jerr.message);
        jpeg_destroy_compress(&cinfo);
        return false;
    }
    jpeg_create_compress(&cinfo);
    jpeg_mem_dest(&cinfo, out, out_size);
    cinfo.image_width = static_cast<JDIMENSION>(width);
    cinfo.image_height = static_cast<JDIMENSION>(height);
    cinfo.input_components = channels;
    cinfo.in_color_space = channels == 3 ? JCS_RGB : JCS_GRAYSCALE;
    jpeg_set_defaults(&cinfo);
    jpeg_set_quality(&cinfo, quality, TRUE);
    jpeg_start_compress(&cinfo, TRUE);
    const std::size_t stride = static_cast<std::size_t>(width) * channels;
    while (cinfo.next_scanline < cinfo.image_height) {
        JSAMPROW row = const_cast<JSAMPROW>(pixels + cinfo.next_scanline * stride);
        jpeg_write_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_compress(&cinfo);
    jpeg_destroy_compress(&cinfo);
    return true;
}

struct JpegHeader {
    int height = 0;
    int width = 0;
    int channels = 0;
};

bool jpeg_decompress_raw(const std::uint8_t* bytes, std::size_t size, std::vector<std::uint8_t>* pixels,
                         JpegHeader* header, char* message)
{
    jpeg_decompress_struct cinfo;
    JpegErrorManager jerr;
    cinfo.err = jpeg_std_error(&jerr.base);
    jerr.base.error_exit = jpeg_error_exit_jump;
    if (setjmp(jerr.jump)) {
        std::strcpy(message, jerr.message);
        jpeg_destroy_decompress(&cinfo);
        return false;
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes, static_cast<unsigned long>(size));
    jpeg_read_header(&cinfo, TRUE);
    cinfo.out_color_space = cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    header->width = static_cast<int>(cinfo.output_width);
    header->height = static_cast<int>(cinfo.output_height);
    header->channels = cinfo.output_components;
    pixels->resize(static_cast<std::size_t>(header->width) * header->height * header->channels);
    const std::size_t stride = static_cast<std::size_t>(header->width) * header->channels;
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = pixels->data() + cinfo.output_scanline * stride;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    return true;
}

} // namespace

// ---------------------------------------------------------------- PNG

std::vector<std::uint8_t> encode_png(const RasterImage& img)
{
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;

    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data().data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data().data(), 0, nullptr)) {
        throw IoError(std::string("PNG encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

RasterImage decode_png(std::span<const std::uint8_t> bytes)
{
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        throw IoError(std::string("PNG decode failed: ") + image.message);
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int channels = color ? 3 : 1;
    std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(image));
    png_color black{0, 0, 0};
    if (!png_image_finish_read(&image, &black, data.data(), 0, nullptr)) {
        png_image_free(&image);
        throw IoError(std::string("PNG decode failed: ") + image.message);
    }
    return RasterImage(static_cast<int>(image.height), static_cast<int>(image.width), channels, std::move(data));
}

void write_png(const fs::path& path, const RasterImage& img)
{
    write_bytes(path, encode_png(img));
}

void write_png16(const fs::path& path, int rows, int cols, std::span<const std::uint16_t> values)
{
    if (values.size() != static_cast<std::size_t>(rows) * cols) {
        throw DimensionMismatch("write_png16: value count does not match dimensions");
    }
    png_image image;
    std::memset(&image, 0, sizeof(image));
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(cols);
    image.height = static_cast<png_uint_32>(rows);
    image.format = PNG_FORMAT_LINEAR_Y;
    if (!png_image_write_to_file(&image, path.string().c_str(), 0, values.data(), 0, nullptr)) {
        throw IoError(std::string("PNG16 write failed: ") + image.message);
    }
}

void write_pnm(const fs::path& path, const RasterImage& img)
{
    std::ostringstream header;
    header << (img.channels() == 3 ? "P6" : "P5") << '\n' << img.width() << ' ' << img.height() << "\n255\n";
    const std::string h = header.str();
    std::vector<std::uint8_t> bytes(h.begin(), h.end());
    bytes.insert(bytes.end(), img.data().begin(), img.data().end());
    write_bytes(path, bytes);
}

std::vector<std::uint8_t> encode_jpeg(const RasterImage& img, int quality)
{
    if (quality < 1 || quality > 100) {
        throw InvalidArgument("JPEG quality must be in 1..100");
    }
    unsigned char* buffer = nullptr;
    unsigned long size = 0;
    char message[JMSG_LENGTH_MAX] = {};
    const bool ok =
        jpeg_compress_raw(img.data().data(), img.height(), img.width(), img.channels(), quality, &buffer, &size, message);
    std::vector<std::uint8_t> out;
    if (ok) {
        out.assign(buffer, buffer + size);
    }
    std::free(buffer);
    if (!ok) {
        throw IoError(std::string("JPEG encode failed: ") + message);
    }
    return out;
}

RasterImage decode_jpeg(std::span<const std::uint8_t> bytes)
{
    std::vector<std::uint8_t> pixels;
    JpegHeader header;
    char message[JMSG_LENGTH_MAX] = {};
    if (!jpeg_decompress_raw(bytes.data(), bytes.size(), &pixels, &header, message)) {
        throw IoError(std::string("JPEG decode failed: ") + message);
    }
    return RasterImage(header.height, header.width, header.channels, std::move(pixels));
}

RasterImage jpeg_roundtrip(const RasterImage& img, int quality)
{
    RasterImage out = decode_jpeg(encode_jpeg(img, quality));
    if (out.size() != img.size() || out.channels() != img.channels()) {
        throw IoError("JPEG round trip changed the image geometry");
    }
    return out;
}

void write_jpeg(const fs::path& path, const RasterImage& img, int quality)
{
    write_bytes(path, encode_jpeg(img, quality));
}

RasterImage read_image(const fs::path& path)
{
    const auto bytes = read_bytes(path);
    if (bytes.size() >= 8 && png_sig_cmp(bytes.data(), 0, 8) == 0) {
        return decode_png(bytes);
    }
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        return decode_jpeg(bytes);
    }
    if (bytes.size() >= 2 && bytes[0] == 'P') {
        return decode_pnm(bytes);
    }
    throw IoError("unrecognized image format: " + path.string());
}

void write_image(const fs::path& path, const RasterImage& img)
{
    const std::string ext = lower_ext(path);
    if (ext == ".png") {
        write_png(path, img);
    } else if (ext == ".ppm" || ext == ".pgm" || ext == ".pnm") {
        write_pnm(path, img);
    } else if (ext == ".jpg" || ext == ".jpeg") {
        write_jpeg(path, img, 95);
    } else {
        throw IoError("unsupported image extension '" + ext + "'");
    }
}

} // namespace scaleguard

#include "facealign/image_io.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cctype>
#include <csetjmp>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>

#include "facealign/error.hpp"

namespace facealign {

namespace fs = std::filesystem;

namespace {

std::string lower_ext(const fs::path& path) {
    std::string ext = path.extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
    return ext;
}

[[noreturn]] void corrupt(const std::string& name, const std::string& what) {
    throw Error(ErrorKind::corrupt_format, "load", name + ": " + what);
}

// Netpbm header: magic, width, height, maxval separated by whitespace with
// '#' comments running to end of line, then exactly one whitespace byte.
struct NetpbmReader {
    std::span<const std::uint8_t> bytes;
    const std::string& name;
    std::size_t pos = 2;

    void skip_space_and_comments() {
        while (pos < bytes.size()) {
            if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else if (std::isspace(bytes[pos])) {
                ++pos;
            } else {
                break;
            }
        }
    }

    int read_int() {
        skip_space_and_comments();
        if (pos >= bytes.size() || !std::isdigit(bytes[pos])) corrupt(name, "bad netpbm header");
        long value = 0;
        while (pos < bytes.size() && std::isdigit(bytes[pos])) {
            value = value * 10 + (bytes[pos] - '0');
            if (value > 1 << 20) corrupt(name, "netpbm header value too large");
            ++pos;
        }
        return static_cast<int>(value);
    }
};

AnyImage decode_netpbm(std::span<const std::uint8_t> bytes, const std::string& name) {
    const bool color = bytes[1] == '6';
    NetpbmReader rd{bytes, name};
    const int w = rd.read_int();
    const int h = rd.read_int();
    const int maxval = rd.read_int();
    if (w < 1 || h < 1) corrupt(name, "netpbm dimensions must be positive");
    if (maxval != 255) {
        throw Error(ErrorKind::unsupported_format, "load", name + ": only maxval 255 is supported");
    }
    if (rd.pos >= bytes.size() || !std::isspace(bytes[rd.pos])) corrupt(name, "bad netpbm header");
    ++rd.pos;
    const std::size_t need = static_cast<std::size_t>(w) * h * (color ? 3 : 1);
    if (bytes.size() - rd.pos < need) corrupt(name, "truncated netpbm raster");
    std::vector<std::uint8_t> px(bytes.begin() + rd.pos, bytes.begin() + rd.pos + need);
    if (color) return RgbImage(w, h, std::move(px));
    return GrayImage(w, h, std::move(px));
}

AnyImage decode_png(std::span<const std::uint8_t> bytes, const std::string& name) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
        corrupt(name, std::string("png: ") + image.message);
    }
    if (image.format & PNG_FORMAT_FLAG_LINEAR) {
        png_image_free(&image);
        throw Error(ErrorKind::unsupported_format, "load", name + ": 16-bit PNG is not supported");
    }
    const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
    image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
    const int w = static_cast<int>(image.width);
    const int h = static_cast<int>(image.height);
    std::vector<std::uint8_t> px(PNG_IMAGE_SIZE(image));
    if (!png_image_finish_read(&image, nullptr, px.data(), 0, nullptr)) {
        const std::string msg = image.message;
        png_image_free(&image);
        corrupt(name, "png: " + msg);
    }
    if (color) return RgbImage(w, h, std::move(px));
    return GrayImage(w, h, std::move(px));
}

struct JpegErrorManager {
    jpeg_error_mgr base;
    std::jmp_buf jump;
    char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
    auto* err = reinterpret_cast<JpegErrorManager*>(cinfo->err);
    (*cinfo->err->format_message)(cinfo, err->message);
    std::longjmp(err->jump, 1);
}

AnyImage decode_jpeg(std::span<const std::uint8_t> bytes, const std::string& name) {
    jpeg_decompress_struct cinfo;
    JpegErrorManager err;
    cinfo.err = jpeg_std_error(&err.base);
    err.base.error_exit = jpeg_error_exit;
    err.message[0] = '\0';
    // Declared before setjmp so the jump target never skips its constructor.
    std::vector<std::uint8_t> pixels;
    if (setjmp(err.jump)) {
        jpeg_destroy_decompress(&cinfo);
        corrupt(name, std::string("jpeg: ") + err.message);
    }
    jpeg_create_decompress(&cinfo);
    jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
    jpeg_read_header(&cinfo, TRUE);
    const bool gray = cinfo.jpeg_color_space == JCS_GRAYSCALE;
    cinfo.out_color_space = gray ? JCS_GRAYSCALE : JCS_RGB;
    jpeg_start_decompress(&cinfo);
    const int w = static_cast<int>(cinfo.output_width);
    const int h = static_cast<int>(cinfo.output_height);
    const int channels = cinfo.output_components;
    pixels.resize(static_cast<std::size_t>(w) * h * channels);
    while (cinfo.output_scanline < cinfo.output_height) {
        JSAMPROW row = pixels.data() + static_cast<std::size_t>(cinfo.output_scanline) * w * channels;
        jpeg_read_scanlines(&cinfo, &row, 1);
    }
    jpeg_finish_decompress(&cinfo);
    jpeg_destroy_decompress(&cinfo);
    if (gray) return GrayImage(w, h, std::move(pixels));
    return RgbImage(w, h, std::move(pixels));
}

template <typename Image>
std::vector<std::uint8_t> encode_png_impl(const Image& img, png_uint_32 format) {
    png_image image;
    std::memset(&image, 0, sizeof image);
    image.version = PNG_IMAGE_VERSION;
    image.width = static_cast<png_uint_32>(img.width());
    image.height = static_cast<png_uint_32>(img.height());
    image.format = format;
    png_alloc_size_t size = 0;
    if (!png_image_write_to_memory(&image, nullptr, &size, 0, img.data().data(), 0, nullptr)) {
        throw Error(ErrorKind::io, "save", std::string("png sizing failed: ") + image.message);
    }
    std::vector<std::uint8_t> out(size);
    if (!png_image_write_to_memory(&image, out.data(), &size, 0, img.data().data(), 0, nullptr)) {
        throw Error(ErrorKind::io, "save", std::string("png encode failed: ") + image.message);
    }
    out.resize(size);
    return out;
}

std::vector<std::uint8_t> netpbm(char magic, int w, int h, std::span<const std::uint8_t> px) {
    const std::string header = std::string("P") + magic + "\n" + std::to_string(w) + " " +
                               std::to_string(h) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.insert(out.end(), px.begin(), px.end());
    return out;
}

}  // namespace

AnyImage decode_image(std::span<const std::uint8_t> bytes, const std::string& name) {
    if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
        return decode_netpbm(bytes, name);
    }
    static constexpr std::uint8_t png_magic[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
    if (bytes.size() >= 8 && std::equal(std::begin(png_magic), std::end(png_magic), bytes.begin())) {
        return decode_png(bytes, name);
    }
    if (bytes.size() >= 3 && bytes[0] == 0xFF && bytes[1] == 0xD8 && bytes[2] == 0xFF) {
        return decode_jpeg(bytes, name);
    }
    if (bytes.size() < 8) corrupt(name, "file too short to identify");
    throw Error(ErrorKind::unsupported_format, "load", name + ": unrecognised image format");
}

AnyImage load_image(const fs::path& path) {
    const auto bytes = read_file(path);
    return decode_image(bytes, path.string());
}

GrayImage load_gray(const fs::path& path) {
    auto img = load_image(path);
    if (auto* gray = std::get_if<GrayImage>(&img)) return std::move(*gray);
    return to_grayscale(std::get<RgbImage>(img));
}

Size image_size(const AnyImage& img) {
    return std::visit([](const auto& i) { return Size{i.width(), i.height()}; }, img);
}

std::vector<std::uint8_t> encode_pgm(const GrayImage& img) {
    return netpbm('5', img.width(), img.height(), img.data());
}

std::vector<std::uint8_t> encode_ppm(const RgbImage& img) {
    return netpbm('6', img.width(), img.height(), img.data());
}

std::vector<std::uint8_t> encode_png(const GrayImage& img) { return encode_png_impl(img, PNG_FORMAT_GRAY); }

std::vector<std::uint8_t> encode_png(const RgbImage& img) { return encode_png_impl(img, PNG_FORMAT_RGB); }

void save_image(const GrayImage& img, const fs::path& path) {
    const auto ext = lower_ext(path);
    if (ext == ".pgm") return write_file(path, encode_pgm(img));
    if (ext == ".png") return write_file(path, encode_png(img));
    throw Error(ErrorKind::unsupported_format, "save",
                path.string() + ": grayscale output must be .pgm or .png");
}

void save_image(const RgbImage& img, const fs::path& path) {
    const auto ext = lower_ext(path);
    if (ext == ".ppm") return write_file(path, encode_ppm(img));
    if (ext == ".png") return write_file(path, encode_png(img));
    throw Error(ErrorKind::unsupported_format, "save", path.string() + ": colour output must be .ppm or .png");
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::io, "load", path.string() + ": cannot open for reading");
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (in.bad()) throw Error(ErrorKind::io, "load", path.string() + ": read failed");
    return bytes;
}

void write_file(const fs::path& path, std::span<const std::uint8_t> bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::io, "save", path.string() + ": cannot open for writing");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    out.flush();
    if (!out) throw Error(ErrorKind::io, "save", path.string() + ": write failed");
}

bool is_supported_image_path(const fs::path& path) {
    const auto ext = lower_ext(path);
    return ext == ".pgm" || ext == ".ppm" || ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

std::string_view content_type_for(const fs::path& path) {
    const auto ext = lower_ext(path);
    if (ext == ".png") return "image/png";
    if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
    if (ext == ".pgm" || ext == ".ppm") return "image/x-portable-anymap";
    return "application/octet-stream";
}

}  // namespace facealign

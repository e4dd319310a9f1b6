#include <doctest.h>

#include <cstdlib>
#include <random>
#include <string>

#include "facealign/error.hpp"
#include "facealign/image_io.hpp"
#include "test_support.hpp"

using namespace facealign;
namespace fs = std::filesystem;

namespace {

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

ErrorKind decode_error(const std::vector<std::uint8_t>& bytes) {
    try {
        (void)decode_image(bytes, "mem");
    } catch (const Error& e) {
        return e.kind();
    }
    FAIL("decode unexpectedly succeeded");
    return ErrorKind::io;
}

}  // namespace

TEST_SUITE("image_io") {

TEST_CASE("pgm round trip") {
    std::mt19937 rng(11);
    const GrayImage img = testing::random_gray(rng, 13, 7);
    const auto encoded = encode_pgm(img);
    const auto decoded = decode_image(encoded, "mem");
    REQUIRE(std::holds_alternative<GrayImage>(decoded));
    CHECK(std::get<GrayImage>(decoded) == img);
}

TEST_CASE("ppm round trip") {
    RgbImage img(3, 2);
    img.set(1, 1, {1, 2, 3});
    img.set(2, 0, {250, 128, 7});
    const auto decoded = decode_image(encode_ppm(img), "mem");
    REQUIRE(std::holds_alternative<RgbImage>(decoded));
    CHECK(std::get<RgbImage>(decoded) == img);
}

TEST_CASE("png round trip, gray and colour") {
    std::mt19937 rng(12);
    const GrayImage gray = testing::random_gray(rng, 31, 17);
    const auto g = decode_image(encode_png(gray), "mem");
    REQUIRE(std::holds_alternative<GrayImage>(g));
    CHECK(std::get<GrayImage>(g) == gray);

    RgbImage rgb(4, 4, Rgb{9, 99, 199});
    const auto c = decode_image(encode_png(rgb), "mem");
    REQUIRE(std::holds_alternative<RgbImage>(c));
    CHECK(std::get<RgbImage>(c) == rgb);
}

TEST_CASE("netpbm header comments and whitespace") {
    const std::string text = std::string("P5 # comment\n2\t# w\n 1\n255\n") + '\x05' + '\xfa';
    const auto img = std::get<GrayImage>(decode_image(bytes_of(text), "mem"));
    CHECK(img.width() == 2);
    CHECK(img.height() == 1);
    CHECK(img.at(0, 0) == 5);
    CHECK(img.at(1, 0) == 250);
}

TEST_CASE("malformed netpbm files") {
    CHECK(decode_error(bytes_of(std::string("P5\n2 2\n255\n") + "abc")) == ErrorKind::corrupt_format);
    CHECK(decode_error(bytes_of("P5\nx 2\n255\n")) == ErrorKind::corrupt_format);
    CHECK(decode_error(bytes_of("P5\n0 2\n255\n")) == ErrorKind::corrupt_format);
    CHECK(decode_error(bytes_of(std::string("P5\n1 1\n65535\n") + "ab")) == ErrorKind::unsupported_format);
}

TEST_CASE("unknown and truncated formats") {
    CHECK(decode_error(bytes_of("GIF89a..........")) == ErrorKind::unsupported_format);
    CHECK(decode_error(bytes_of("ab")) == ErrorKind::corrupt_format);
    auto png = encode_png(GrayImage(8, 8, 50));
    png.resize(png.size() / 2);
    CHECK(decode_error(png) == ErrorKind::corrupt_format);
    std::vector<std::uint8_t> jpeg = {0xFF, 0xD8, 0xFF, 0xE0, 0, 0, 0, 0, 0, 0};
    CHECK(decode_error(jpeg) == ErrorKind::corrupt_format);
}

TEST_CASE("jpeg decode") {
    const auto rgb = std::get<RgbImage>(load_image(testing::fixtures_dir() / "tiny_rgb.jpg"));
    REQUIRE(rgb.width() == 16);
    REQUIRE(rgb.height() == 8);
    const Rgb a = rgb.at(2, 4), b = rgb.at(12, 4);
    CHECK(std::abs(a.r - 200) <= 3);
    CHECK(std::abs(a.g - 40) <= 3);
    CHECK(std::abs(a.b - 90) <= 3);
    CHECK(std::abs(b.r - 10) <= 3);
    CHECK(std::abs(b.g - 220) <= 3);
    CHECK(std::abs(b.b - 30) <= 3);

    const auto gray = std::get<GrayImage>(load_image(testing::fixtures_dir() / "tiny_gray.jpg"));
    CHECK(std::abs(gray.at(3, 3) - 123) <= 1);
}

TEST_CASE("load_gray converts colour input") {
    const GrayImage g = load_gray(testing::fixtures_dir() / "tiny_rgb.jpg");
    const auto rgb = std::get<RgbImage>(load_image(testing::fixtures_dir() / "tiny_rgb.jpg"));
    CHECK(g == to_grayscale(rgb));
}

TEST_CASE("save and load through files") {
    testing::TempDir dir("io");
    const GrayImage img(5, 4, 17);
    save_image(img, dir / "a.pgm");
    save_image(img, dir / "a.png");
    CHECK(load_gray(dir / "a.pgm") == img);
    CHECK(load_gray(dir / "a.png") == img);
    CHECK_THROWS_AS(save_image(img, dir / "a.bmp"), Error);
    try {
        (void)load_gray(dir / "missing.png");
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
        CHECK(e.stage() == "load");
    }
}

TEST_CASE("supported extensions and content types") {
    CHECK(is_supported_image_path("a.PNG"));
    CHECK(is_supported_image_path("a.jpeg"));
    CHECK(is_supported_image_path("a.pgm"));
    CHECK_FALSE(is_supported_image_path("a.txt"));
    CHECK_FALSE(is_supported_image_path("png"));
    CHECK(content_type_for("x.png") == "image/png");
    CHECK(content_type_for("x.JPG") == "image/jpeg");
}

}

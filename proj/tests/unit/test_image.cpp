#include <doctest.h>

#include <random>

#include "facealign/error.hpp"
#include "facealign/image.hpp"
#include "test_support.hpp"

using namespace facealign;

TEST_SUITE("image") {

TEST_CASE("luma weights") {
    CHECK(luma({0, 0, 0}) == 0);
    CHECK(luma({255, 255, 255}) == 255);
    CHECK(luma({255, 0, 0}) == 76);   // 76.245
    CHECK(luma({0, 255, 0}) == 150);  // 149.685
    CHECK(luma({0, 0, 255}) == 29);   // 29.07
    CHECK(luma({5, 5, 0}) == 4);      // 4.43
    CHECK(luma({0, 0, 50}) == 6);     // 5.7
}

TEST_CASE("luma rounds exact ties upward") {
    int ties = 0;
    for (int r = 0; r < 256; ++r) {
        for (int g = 0; g < 256; g += 5) {
            for (int b = 0; b < 256; b += 5) {
                const int n = 299 * r + 587 * g + 114 * b;
                if (n % 1000 != 500) continue;
                ++ties;
                CHECK(luma({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                            static_cast<std::uint8_t>(b)}) == n / 1000 + 1);
            }
        }
    }
    CHECK(ties > 0);
}

TEST_CASE("to_grayscale maps every pixel") {
    RgbImage rgb(3, 2);
    rgb.set(0, 0, {255, 0, 0});
    rgb.set(2, 1, {10, 20, 30});
    const GrayImage g = to_grayscale(rgb);
    REQUIRE(g.width() == 3);
    REQUIRE(g.height() == 2);
    CHECK(g.at(0, 0) == 76);
    CHECK(g.at(1, 0) == 0);
    CHECK(g.at(2, 1) == luma({10, 20, 30}));
}

TEST_CASE("image constructors reject inconsistent buffers") {
    CHECK_THROWS_AS(GrayImage(2, 2, std::vector<std::uint8_t>(3)), Error);
    CHECK_THROWS_AS(RgbImage(2, 2, std::vector<std::uint8_t>(4)), Error);
    CHECK_NOTHROW(GrayImage(2, 3, std::vector<std::uint8_t>(6)));
}

TEST_CASE("integral image has a zero border and matches brute force") {
    std::mt19937 rng(3);
    const GrayImage img = testing::random_gray(rng, 7, 5);
    const auto ii = IntegralImage::build(img);
    CHECK(ii.width() == 8);
    CHECK(ii.height() == 6);
    for (int x = 0; x < ii.width(); ++x) CHECK(ii.at(x, 0) == 0);
    for (int y = 0; y < ii.height(); ++y) CHECK(ii.at(0, y) == 0);
    std::int64_t total = 0, sq = 0;
    for (auto v : img.data()) {
        total += v;
        sq += static_cast<std::int64_t>(v) * v;
    }
    CHECK(ii.at(7, 5) == total);
    CHECK(ii.sq_at(7, 5) == sq);
    CHECK(ii.rect_sum({0, 0, 7, 5}) == total);
    CHECK(ii.rect_sum({2, 1, 1, 1}) == img.at(2, 1));
}

TEST_CASE("integral image without squares") {
    const auto ii = IntegralImage::build(GrayImage(4, 4, 9), false);
    CHECK_FALSE(ii.has_squares());
    CHECK(ii.rect_sum({1, 1, 2, 2}) == 36);
}

TEST_CASE("integral sums do not overflow on large bright images") {
    const GrayImage img(2000, 1500, 255);
    const auto ii = IntegralImage::build(img);
    CHECK(ii.at(2000, 1500) == 255LL * 2000 * 1500);
    CHECK(ii.sq_at(2000, 1500) == 255LL * 255 * 2000 * 1500);
}

TEST_CASE("crop copies the region and checks bounds") {
    GrayImage img(4, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 4; ++x) img.at(x, y) = static_cast<std::uint8_t>(10 * y + x);
    const GrayImage c = crop(img, {1, 1, 2, 2});
    CHECK(c.width() == 2);
    CHECK(c.at(0, 0) == 11);
    CHECK(c.at(1, 1) == 22);
    try {
        (void)crop(img, {3, 0, 2, 1});
        FAIL("expected rect_out_of_bounds");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::rect_out_of_bounds);
    }
    CHECK_THROWS_AS(crop(img, {0, 0, 0, 1}), Error);
}

TEST_CASE("resize_bilinear identity, constants and downscale averages") {
    std::mt19937 rng(5);
    const GrayImage img = testing::random_gray(rng, 9, 6);
    CHECK(resize_bilinear(img, 9, 6) == img);
    const GrayImage flat(10, 10, 77);
    CHECK(resize_bilinear(flat, 3, 17) == GrayImage(3, 17, 77));
    // 2x2 -> 1x1 samples the center: average of all four.
    GrayImage q(2, 2, std::vector<std::uint8_t>{0, 100, 100, 200});
    CHECK(resize_bilinear(q, 1, 1).at(0, 0) == 100);
    CHECK_THROWS_AS(resize_bilinear(img, 0, 4), Error);
}

TEST_CASE("intersection over union") {
    CHECK(intersection_over_union({0, 0, 10, 10}, {0, 0, 10, 10}) == doctest::Approx(1.0));
    CHECK(intersection_over_union({0, 0, 10, 10}, {5, 0, 10, 10}) == doctest::Approx(50.0 / 150.0));
    CHECK(intersection_over_union({0, 0, 10, 10}, {20, 20, 5, 5}) == 0.0);
}

}

#include <doctest.h>

#include <fstream>
#include <json.hpp>
#include <string>

#include "facealign/cascade.hpp"
#include "facealign/error.hpp"
#include "facealign/image_io.hpp"
#include "test_support.hpp"

using namespace facealign;

namespace {

std::string mini_xml() { return testing::slurp(testing::fixtures_dir() / "mini_cascade.xml"); }

std::string replaced(std::string s, const std::string& from, const std::string& to) {
    const auto pos = s.find(from);
    REQUIRE(pos != std::string::npos);
    return s.replace(pos, from.size(), to);
}

ErrorKind parse_error(const std::string& xml) {
    try {
        (void)parse_cascade(xml);
    } catch (const Error& e) {
        CHECK(e.stage() == "parse_cascade");
        return e.kind();
    }
    FAIL("parse unexpectedly succeeded");
    return ErrorKind::io;
}

// 6x6 window: left half `left`, right half `right`.
GrayImage halves(std::uint8_t left, std::uint8_t right, int w = 6, int h = 6) {
    GrayImage img(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) img.at(x, y) = x < w / 2 ? left : right;
    return img;
}

}  // namespace

TEST_SUITE("cascade") {

TEST_CASE("mini cascade structure") {
    const CascadeModel m = parse_cascade(mini_xml());
    CHECK(m.base_width == 6);
    CHECK(m.base_height == 6);
    REQUIRE(m.stages.size() == 1);
    CHECK(m.stump_count() == 1);
    const auto& wc = m.stages[0].classifiers[0];
    CHECK(wc.threshold == doctest::Approx(0.5));
    CHECK(wc.left_val == -1.0);
    CHECK(wc.right_val == 1.0);
    REQUIRE(wc.feature.rects.size() == 2);
    CHECK(wc.feature.rects[1].rect == Rect{3, 0, 3, 6});
    CHECK(wc.feature.rects[1].weight == 1.0);
}

TEST_CASE("stock cascades load") {
    const CascadeModel face = load_cascade(testing::face_cascade_path());
    CHECK(face.base_width == 24);
    CHECK(face.base_height == 24);
    CHECK(face.stages.size() == 25);
    CHECK(face.stump_count() == 2913);
    const CascadeModel eye = load_cascade(testing::eye_cascade_path());
    CHECK(eye.base_width == 20);
    CHECK(eye.base_height == 20);
    CHECK(eye.stages.size() == 24);
}

TEST_CASE("feature value by hand") {
    // Step edge 0 | 255 over the window. The normalisation region is the
    // interior 4x4 (half dark, half bright): stddev 127.5, area 16.
    const CascadeModel m = parse_cascade(mini_xml());
    const auto ii = IntegralImage::build(halves(0, 255));
    const auto& f = m.stages[0].classifiers[0].feature;
    const double expected = (255.0 * 18) / (16 * 127.5);
    CHECK(feature_value(f, ii, {0, 0, 6, 6}, 1.0, m) == doctest::Approx(expected));
    CHECK(stage_sum(m.stages[0], ii, {0, 0, 6, 6}, 1.0, m) == 1.0);
    CHECK(eval_window(m, ii, {0, 0, 6, 6}, 1.0));
}

TEST_CASE("flat and reversed windows fail the mini cascade") {
    const CascadeModel m = parse_cascade(mini_xml());
    CHECK_FALSE(eval_window(m, IntegralImage::build(GrayImage(6, 6, 80)), {0, 0, 6, 6}, 1.0));
    CHECK_FALSE(eval_window(m, IntegralImage::build(halves(255, 0)), {0, 0, 6, 6}, 1.0));
}

TEST_CASE("scaled evaluation matches an upscaled image") {
    const CascadeModel m = parse_cascade(mini_xml());
    const auto ii = IntegralImage::build(halves(10, 200, 12, 12));
    const auto& f = m.stages[0].classifiers[0].feature;
    const auto ii1 = IntegralImage::build(halves(10, 200));
    CHECK(feature_value(f, ii, {0, 0, 12, 12}, 2.0, m) == doctest::Approx(feature_value(f, ii1, {0, 0, 6, 6}, 1.0, m)));
    CHECK(scaled_window(m, 2.0) == Size{12, 12});
    CHECK(scaled_window(m, 1.25) == Size{8, 8});  // 7.5 rounds away from zero
}

TEST_CASE("ScaledCascade agrees with eval_window") {
    const CascadeModel m = parse_cascade(mini_xml());
    std::mt19937 rng(17);
    const GrayImage img = testing::random_gray(rng, 30, 20);
    const auto ii = IntegralImage::build(img);
    for (double scale : {1.0, 1.5, 2.0}) {
        const ScaledCascade sc(m, scale, ii.width());
        const Size w = sc.window();
        for (int y = 0; y + w.h <= img.height(); ++y)
            for (int x = 0; x + w.w <= img.width(); ++x)
                CHECK(sc.passes(ii, x, y) == eval_window(m, ii, {x, y, w.w, w.h}, scale));
    }
}

TEST_CASE("stock face cascade accepts reference base windows") {
    const auto golden = nlohmann::json::parse(testing::slurp(testing::goldens_dir() / "base_windows.json"));
    const GrayImage img = load_gray(testing::fixtures_dir() / golden["input_path"].get<std::string>());
    const CascadeModel face = load_cascade(testing::face_cascade_path());
    const auto ii = IntegralImage::build(img);
    REQUIRE(!golden["passing"].empty());
    for (const auto& xy : golden["passing"]) {
        const Rect w{xy[0].get<int>(), xy[1].get<int>(), 24, 24};
        CAPTURE(w.x);
        CAPTURE(w.y);
        CHECK(eval_window(face, ii, w, 1.0));
    }
    const auto flat = golden["flat_window"];
    CHECK_FALSE(eval_window(face, ii, {flat[0].get<int>(), flat[1].get<int>(), 24, 24}, 1.0));
}

TEST_CASE("schema rejections") {
    const std::string xml = mini_xml();
    CHECK(parse_error("<opencv_storage><cascade>") == ErrorKind::xml_malformed);
    CHECK(parse_error("<other/>") == ErrorKind::xml_malformed);
    CHECK(parse_error(replaced(xml, "<featureType>HAAR", "<featureType>LBP")) == ErrorKind::unsupported_feature_type);
    CHECK(parse_error(replaced(xml, "<stageType>BOOST", "<stageType>GAUSS")) == ErrorKind::unsupported_stage_type);
    CHECK(parse_error(replaced(xml, "3 0 3 6 1.", "4 0 3 6 1.")) == ErrorKind::rect_outside_window);
    CHECK(parse_error(replaced(xml, "0 -1 0 5.0000000000000000e-01", "1 2 0 5.0e-01")) == ErrorKind::tree_classifier);
    CHECK(parse_error(replaced(xml, "<stageNum>1", "<stageNum>2")) == ErrorKind::xml_malformed);
    CHECK(parse_error(replaced(xml, "<rects>", "<tilted>1</tilted><rects>")) == ErrorKind::tilted_feature);
    CHECK(parse_error(replaced(xml, "0 -1 0 5", "0 -1 3 5")) == ErrorKind::xml_malformed);
    CHECK(parse_error(replaced(xml, "<width>6</width>", "<width>six</width>")) == ErrorKind::xml_malformed);
    CHECK(parse_error("<opencv_storage><haar><size>24 24</size><stages/></haar></opencv_storage>") ==
          ErrorKind::unsupported_format);
}

TEST_CASE("LBP fixture is rejected with its feature type") {
    try {
        (void)load_cascade(testing::fixtures_dir() / "lbpcascade_frontalface_opencv.xml");
        FAIL("expected rejection");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::unsupported_feature_type);
        CHECK(std::string(e.what()).find("LBP") != std::string::npos);
    }
}

TEST_CASE("missing cascade file") {
    try {
        (void)load_cascade(testing::fixtures_dir() / "nope.xml");
        FAIL("expected io error");
    } catch (const Error& e) {
        CHECK(e.kind() == ErrorKind::io);
    }
}

}

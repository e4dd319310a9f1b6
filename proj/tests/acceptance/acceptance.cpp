// Acceptance suite: one PASS/FAIL line per criterion.
//
//   facealign_acceptance            run every criterion
//   facealign_acceptance NAME...    run the named criteria only
//   facealign_acceptance --list

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <json.hpp>
#include <map>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "facealign/align.hpp"
#include "facealign/cascade.hpp"
#include "facealign/detect.hpp"
#include "facealign/error.hpp"
#include "facealign/image.hpp"
#include "facealign/image_io.hpp"
#include "facealign/pipeline.hpp"
#include "facealign/stats.hpp"
#include "test_support.hpp"

using namespace facealign;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Verdict {
    bool pass = false;
    std::string detail;
};

struct Criterion {
    std::string name;
    double limit_s;
    std::function<Verdict()> run;
};

std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

double max_abs_diff(const AffineMatrix& a, const AffineMatrix& b) {
    return std::max({std::abs(a.m11 - b.m11), std::abs(a.m12 - b.m12), std::abs(a.m13 - b.m13),
                     std::abs(a.m21 - b.m21), std::abs(a.m22 - b.m22), std::abs(a.m23 - b.m23)});
}

Detector stock_detector() {
    return Detector(load_cascade(testing::face_cascade_path()), load_cascade(testing::eye_cascade_path()));
}

// --- criteria ---------------------------------------------------------------

Verdict grayscale_exactness() {
    std::vector<std::uint8_t> px;
    int triples = 0, mismatches = 0;
    for (int r = 0; r <= 255; r += 17) {
        for (int g = 0; g <= 255; g += 17) {
            for (int b = 0; b <= 255; b += 17) {
                px.insert(px.end(), {static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g),
                                     static_cast<std::uint8_t>(b)});
                ++triples;
            }
        }
    }
    const GrayImage gray = to_grayscale(RgbImage(triples, 1, px));
    for (int i = 0; i < triples; ++i) {
        const int r = px[3 * i], g = px[3 * i + 1], b = px[3 * i + 2];
        // Exact value is n / 1000; round half up in integers so ties are exact.
        const long n = 299L * r + 587L * g + 114L * b;
        const long expected = (2 * n + 1000) / 2000;
        const double real = 0.299 * r + 0.587 * g + 0.114 * b;
        const int single = luma({px[3 * i], px[3 * i + 1], px[3 * i + 2]});
        if (gray.at(i, 0) != expected || single != expected || std::abs(expected - real) > 0.5 + 1e-9) ++mismatches;
    }
    return {mismatches == 0, std::to_string(triples) + " triples, " + std::to_string(mismatches) + " mismatches"};
}

Verdict integral_oracle() {
    std::mt19937 rng(20240601);
    std::uniform_int_distribution<int> dim(1, 64);
    int rects = 0, mismatches = 0;
    for (int img_i = 0; img_i < 20; ++img_i) {
        const int w = dim(rng), h = dim(rng);
        const GrayImage img = testing::random_gray(rng, w, h);
        const auto ii = IntegralImage::build(img);
        for (int k = 0; k < 50; ++k) {
            std::uniform_int_distribution<int> xs(0, w - 1), ys(0, h - 1);
            const int x = xs(rng), y = ys(rng);
            const int rw = std::uniform_int_distribution<int>(1, w - x)(rng);
            const int rh = std::uniform_int_distribution<int>(1, h - y)(rng);
            std::int64_t sum = 0, sq = 0;
            for (int yy = y; yy < y + rh; ++yy) {
                for (int xx = x; xx < x + rw; ++xx) {
                    sum += img.at(xx, yy);
                    sq += static_cast<std::int64_t>(img.at(xx, yy)) * img.at(xx, yy);
                }
            }
            const Rect r{x, y, rw, rh};
            if (ii.rect_sum(r) != sum || ii.rect_sq_sum(r) != sq) ++mismatches;
            ++rects;
        }
    }
    return {mismatches == 0 && rects == 1000,
            std::to_string(rects) + " rects on 20 images, " + std::to_string(mismatches) + " mismatches"};
}

Verdict cascade_oracle() {
    std::map<std::string, json> goldens;
    {
        std::istringstream in(testing::slurp(testing::goldens_dir() / "detections.jsonl"));
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            json j = json::parse(line);
            goldens[j["input_path"].get<std::string>()] = j;
        }
    }
    const char* fixtures[] = {"portrait_01_astronaut.png", "portrait_02_hopper.png",
                              "portrait_03_astronaut_rot_ccw8.png"};
    const Detector det = stock_detector();
    bool pass = true;
    double min_iou = 1.0, max_eye = 0.0;
    for (const char* name : fixtures) {
        const json& g = goldens.at(name);
        const GrayImage img = load_gray(testing::corpus_dir() / name);
        const auto faces = detect_multi_scale(det.face_model(), img, {.scale_factor = 1.1, .min_neighbors = 5});
        if (faces.empty()) {
            pass = false;
            continue;
        }
        const auto& gr = g["face_rect"];
        const Rect want{gr["x"], gr["y"], gr["w"], gr["h"]};
        const double iou = intersection_over_union(faces.front(), want);
        min_iou = std::min(min_iou, iou);
        const auto eyes = det.detect_eyes(img, faces.front(), {.scale_factor = 1.05, .min_neighbors = 3});
        if (!eyes) {
            pass = false;
            continue;
        }
        for (const char* side : {"left", "right"}) {
            const Point2 p = std::string(side) == "left" ? eyes->left : eyes->right;
            const double dx = p.x - g["eyes_pre"][side]["x"].get<double>();
            const double dy = p.y - g["eyes_pre"][side]["y"].get<double>();
            max_eye = std::max(max_eye, std::hypot(dx, dy));
        }
    }
    pass = pass && min_iou >= 0.6 && max_eye <= 3.0;
    return {pass, "3 fixtures, min face IoU " + fmt("%.3f", min_iou) + " (>= 0.6), max eye error " +
                      fmt("%.2f", max_eye) + " px (<= 3)"};
}

Verdict rotation_identities() {
    std::mt19937 rng(7);
    std::uniform_real_distribution<double> coord(-500, 500), angle(-180, 180);
    double worst_zero = 0, worst_inverse = 0, worst_fixed = 0;
    for (int i = 0; i < 100; ++i) {
        const Point2 c{coord(rng), coord(rng)};
        const double t = angle(rng);
        worst_zero = std::max(worst_zero, max_abs_diff(rotation_matrix(c, 0.0), AffineMatrix::identity()));
        const AffineMatrix round_trip = rotation_matrix(c, t).compose(rotation_matrix(c, -t));
        worst_inverse = std::max(worst_inverse, max_abs_diff(round_trip, AffineMatrix::identity()));
        const Point2 f = transform_point(rotation_matrix(c, t), c);
        worst_fixed = std::max({worst_fixed, std::abs(f.x - c.x), std::abs(f.y - c.y)});
    }
    const double worst_90 = max_abs_diff(rotation_matrix({0, 0}, 90.0), AffineMatrix{0, 1, 0, -1, 0, 0});
    const bool pass = worst_zero == 0.0 && worst_inverse <= 1e-9 && worst_fixed <= 1e-9 && worst_90 <= 1e-9;
    return {pass, "theta=0 err " + fmt("%.1e", worst_zero) + ", R(t)R(-t) err " + fmt("%.1e", worst_inverse) +
                      ", center drift " + fmt("%.1e", worst_fixed) + ", 90deg err " + fmt("%.1e", worst_90)};
}

Verdict eye_leveling() {
    std::mt19937 rng(11);
    std::uniform_real_distribution<double> pos(0, 1000), tilt(-45, 45), len(5, 300);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const Point2 a{pos(rng), pos(rng)};
        const double t = tilt(rng) * std::numbers::pi / 180.0;
        const double d = len(rng);
        const EyePair eyes = order_eyes(a, {a.x + d * std::cos(t), a.y + d * std::sin(t)});
        const Point2 center{pos(rng), pos(rng)};
        const AffineMatrix m = rotation_matrix(center, eye_angle(eyes));
        worst = std::max(worst, std::abs(eye_angle(transform_pair(m, eyes))));
    }
    return {worst <= 1e-9, "1000 pairs, max residual " + fmt("%.2e", worst) + " deg (<= 1e-9)"};
}

Verdict validation_thresholds() {
    auto pair = [](double deg, double d) {
        const double t = deg * std::numbers::pi / 180.0;
        return order_eyes({200, 200}, {200 + d * std::cos(t), 200 + d * std::sin(t)});
    };
    int wrong = 0, checks = 0;
    auto expect = [&](EyeRejection got, EyeRejection want) {
        ++checks;
        if (got != want) ++wrong;
    };
    for (double w : {100.0, 237.0, 480.0}) {
        const double d = 0.3 * w;
        expect(validate_eye_pair(pair(14.9, d), w), EyeRejection::none);
        expect(validate_eye_pair(pair(-14.9, d), w), EyeRejection::none);
        expect(validate_eye_pair(pair(15.1, d), w), EyeRejection::angle);
        expect(validate_eye_pair(pair(-15.1, d), w), EyeRejection::angle);
        expect(validate_eye_pair(pair(0, 0.199 * w), w), EyeRejection::interocular);
        expect(validate_eye_pair(pair(0, 0.201 * w), w), EyeRejection::none);
        expect(validate_eye_pair(pair(10, 0.199 * w), w), EyeRejection::interocular);
        expect(validate_eye_pair(pair(10, 0.201 * w), w), EyeRejection::none);
    }
    return {wrong == 0, std::to_string(checks) + " boundary pairs, " + std::to_string(wrong) + " on the wrong side"};
}

Verdict mode_equivalence() {
    PipelineConfig faithful_cfg;
    PipelineConfig optimized_cfg;
    optimized_cfg.mode = PipelineMode::optimized;
    const Pipeline faithful(stock_detector(), faithful_cfg);
    const Pipeline optimized(stock_detector(), optimized_cfg);
    std::vector<fs::path> inputs;
    for (const auto& e : fs::directory_iterator(testing::corpus_dir())) inputs.push_back(e.path());
    std::sort(inputs.begin(), inputs.end());
    int both = 0, failing = 0;
    double worst_box = 0, worst_mad = 0;
    std::string failed_names;
    for (const auto& path : inputs) {
        const GrayImage gray = load_gray(path);
        const std::string name = path.filename().string();
        const PipelineResult a = faithful.process(gray, name);
        const PipelineResult b = optimized.process(gray, name);
        if (a.outcome != Outcome::success || b.outcome != Outcome::success) continue;
        ++both;
        const CropBox& p = *a.crop_box;
        const CropBox& q = *b.crop_box;
        const double box = std::max({std::abs(p.origin.x - q.origin.x), std::abs(p.origin.y - q.origin.y),
                                     std::abs(p.width - q.width), std::abs(p.height - q.height)});
        double sum = 0;
        const auto da = a.output_image->data(), db = b.output_image->data();
        for (std::size_t i = 0; i < da.size(); ++i) sum += std::abs(int(da[i]) - int(db[i]));
        const double mad = sum / static_cast<double>(da.size());
        worst_box = std::max(worst_box, box);
        worst_mad = std::max(worst_mad, mad);
        if (box > 3.0 || mad > 5.0) {
            ++failing;
            failed_names += " " + name.substr(0, name.find('_', name.find('_') + 1)) + "(box " + fmt("%.1f", box) +
                            ", MAD " + fmt("%.1f", mad) + ")";
        }
    }
    return {both > 0 && failing == 0,
            std::to_string(both) + " fixtures succeed in both modes, max box diff " + fmt("%.2f", worst_box) +
                " px (<= 3), max MAD " + fmt("%.2f", worst_mad) + " (<= 5); " + std::to_string(failing) +
                " outside tolerance" + (failed_names.empty() ? "" : ":" + failed_names)};
}

Verdict end_to_end() {
    testing::TempDir run1("e2e-1"), run8("e2e-8");
    const Pipeline pipeline(stock_detector(), PipelineConfig{});
    const BatchResult b1 = run_batch(pipeline, testing::corpus_dir(), run1.path(), 1);
    const BatchResult b8 = run_batch(pipeline, testing::corpus_dir(), run8.path(), 8);
    std::size_t inputs = 0;
    for (const auto& e : fs::directory_iterator(testing::corpus_dir())) inputs += is_supported_image_path(e.path());
    const RunStats s = stats_from_files(b1.manifest_path);
    std::size_t bucketed = 0;
    for (const auto& [k, n] : s.buckets) bucketed += n;
    const std::size_t successes = s.outcomes.at("success");
    int bad_shape = 0;
    for (const auto& r : b1.records) {
        if (r.outcome != Outcome::success) continue;
        const GrayImage out = load_gray(run1 / *r.output);
        if (out.width() != 60 || out.height() != 70) ++bad_shape;
    }
    const bool identical = testing::slurp(b1.manifest_path) == testing::slurp(b8.manifest_path);
    const bool pass = bad_shape == 0 && successes > 0 && successes + bucketed == inputs && identical;
    return {pass, std::to_string(inputs) + " inputs, " + std::to_string(successes) + " success + " +
                      std::to_string(bucketed) + " bucketed, " + std::to_string(bad_shape) +
                      " outputs not 60x70, manifests jobs=1 vs jobs=8 " + (identical ? "identical" : "DIFFER")};
}

Verdict warp_oracle() {
    std::mt19937 rng(90);
    const GrayImage src = testing::random_gray(rng, 64, 64);
    const GrayImage out = warp_affine(src, rotation_matrix(image_center(64, 64), 90.0), 64, 64);
    int worst = 0;
    for (int y = 0; y < 64; ++y) {
        for (int x = 0; x < 64; ++x) {
            // Positive angles turn the picture counter-clockwise on screen.
            worst = std::max(worst, std::abs(int(out.at(x, y)) - int(src.at(63 - y, x))));
        }
    }
    return {worst <= 1, "64x64, max pixel difference " + std::to_string(worst) + " (<= 1)"};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<Criterion> all = {
        {"grayscale_exactness", 5, grayscale_exactness},
        {"integral_image_oracle", 5, integral_oracle},
        {"cascade_evaluator_oracle", 60, cascade_oracle},
        {"rotation_matrix_identities", 1, rotation_identities},
        {"eye_leveling_invariant", 1, eye_leveling},
        {"validation_thresholds", 1, validation_thresholds},
        {"mode_equivalence", 60, mode_equivalence},
        {"end_to_end_shape", 120, end_to_end},
        {"warp_oracle", 1, warp_oracle},
    };
    std::vector<std::string> wanted(argv + 1, argv + argc);
    if (wanted.size() == 1 && wanted[0] == "--list") {
        for (const auto& c : all) std::cout << c.name << '\n';
        return 0;
    }
    for (const auto& w : wanted) {
        if (std::none_of(all.begin(), all.end(), [&](const Criterion& c) { return c.name == w; })) {
            std::cerr << "unknown criterion '" << w << "'\n";
            return 2;
        }
    }
    int failures = 0, ran = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
        ++ran;
        const auto t0 = std::chrono::steady_clock::now();
        Verdict v;
        try {
            v = c.run();
        } catch (const std::exception& e) {
            v = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        const bool in_time = secs < c.limit_s;
        const bool pass = v.pass && in_time;
        failures += !pass;
        std::cout << (pass ? "PASS " : "FAIL ") << c.name << ": " << v.detail << " [" << fmt("%.2f", secs) << " s, limit "
                  << fmt("%g", c.limit_s) << " s" << (in_time ? "" : ", TOO SLOW") << "]\n"
                  << std::flush;
    }
    std::cout << (ran - failures) << "/" << ran << " criteria passed\n";
    return failures == 0 ? 0 : 1;
}

#include "facealign/detect.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "facealign/align.hpp"
#include "facealign/error.hpp"

namespace facealign {

void DetectParams::validate() const {
    if (!(scale_factor > 1.0)) {
        throw Error(ErrorKind::invalid_argument, "detect", "scale_factor must be > 1");
    }
    if (min_neighbors < 0) {
        throw Error(ErrorKind::invalid_argument, "detect", "min_neighbors must be >= 0");
    }
}

namespace {

bool gate_passes(const ScaledCascade& sc, const IntegralImage& ii, int x, int y, double min_stddev) {
    return min_stddev <= 0.0 || sc.window_stddev(ii, x, y) > min_stddev;
}

void scan_scaled_window(const CascadeModel& model, const GrayImage& img, const DetectParams& p, Size max_size,
                        std::vector<Rect>& out) {
    const auto ii = IntegralImage::build(img, true);
    for (double scale = 1.0;; scale *= p.scale_factor) {
        const Size win = scaled_window(model, scale);
        if (win.w > max_size.w || win.h > max_size.h) break;
        if (win.w > img.width() || win.h > img.height()) break;
        if (win.w < p.min_size.w || win.h < p.min_size.h) continue;
        const ScaledCascade scaled(model, scale, ii.width());
        const Size ext = scaled.extent();
        if (ext.w > img.width() || ext.h > img.height()) break;
        const int step = std::max(1, static_cast<int>(std::lround(scale)));
        for (int y = 0; y + ext.h <= img.height(); y += step) {
            for (int x = 0; x + ext.w <= img.width(); x += step) {
                if (gate_passes(scaled, ii, x, y, p.min_window_stddev) && scaled.passes(ii, x, y)) {
                    out.push_back({x, y, win.w, win.h});
                }
            }
        }
    }
}

void scan_pyramid(const CascadeModel& model, const GrayImage& img, const DetectParams& p, Size max_size,
                  std::vector<Rect>& out) {
    for (double scale = 1.0;; scale *= p.scale_factor) {
        const Size win = scaled_window(model, scale);
        if (win.w > max_size.w || win.h > max_size.h) break;
        if (win.w > img.width() || win.h > img.height()) break;
        if (win.w < p.min_size.w || win.h < p.min_size.h) continue;
        const int sw = static_cast<int>(std::lround(img.width() / scale));
        const int sh = static_cast<int>(std::lround(img.height() / scale));
        if (sw < model.base_width || sh < model.base_height) break;
        const GrayImage level = sw == img.width() && sh == img.height() ? img : resize_bilinear(img, sw, sh);
        const auto ii = IntegralImage::build(level, true);
        const ScaledCascade base(model, 1.0, ii.width());
        const Size ext = base.extent();
        for (int y = 0; y + ext.h <= sh; ++y) {
            const int oy = static_cast<int>(std::lround(y * scale));
            if (oy + win.h > img.height()) break;
            for (int x = 0; x + ext.w <= sw; ++x) {
                const int ox = static_cast<int>(std::lround(x * scale));
                if (ox + win.w > img.width()) break;
                if (gate_passes(base, ii, x, y, p.min_window_stddev) && base.passes(ii, x, y)) {
                    out.push_back({ox, oy, win.w, win.h});
                }
            }
        }
    }
}

}  // namespace

std::vector<Rect> scan_candidates(const CascadeModel& model, const GrayImage& img, const DetectParams& p) {
    p.validate();
    std::vector<Rect> out;
    if (img.width() < model.base_width || img.height() < model.base_height) return out;
    const Size max_size = p.max_size.value_or(Size{img.width(), img.height()});
    if (p.strategy == ScanStrategy::pyramid) {
        scan_pyramid(model, img, p, max_size, out);
    } else {
        scan_scaled_window(model, img, p, max_size, out);
    }
    return out;
}

namespace {

bool similar(const Rect& a, const Rect& b, double eps) {
    const double delta = eps * (std::min(a.w, b.w) + std::min(a.h, b.h)) * 0.5;
    return std::abs(a.x - b.x) <= delta && std::abs(a.y - b.y) <= delta &&
           std::abs(a.right() - b.right()) <= delta && std::abs(a.bottom() - b.bottom()) <= delta;
}

void sort_detections(std::vector<Detection>& d) {
    std::sort(d.begin(), d.end(), [](const Detection& a, const Detection& b) {
        if (a.rect.area() != b.rect.area()) return a.rect.area() > b.rect.area();
        if (a.neighbors != b.neighbors) return a.neighbors > b.neighbors;
        if (a.rect.y != b.rect.y) return a.rect.y < b.rect.y;
        return a.rect.x < b.rect.x;
    });
}

}  // namespace

std::vector<Detection> group_rectangles(std::vector<Rect> candidates, int min_neighbors, double eps) {
    std::vector<Detection> out;
    if (min_neighbors <= 0) {
        out.reserve(candidates.size());
        for (const auto& r : candidates) out.push_back({r, 1});
        sort_detections(out);
        return out;
    }
    const std::size_t n = candidates.size();
    std::vector<std::size_t> parent(n);
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto find = [&](std::size_t i) {
        while (parent[i] != i) i = parent[i] = parent[parent[i]];
        return i;
    };
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (similar(candidates[i], candidates[j], eps)) {
                const auto ri = find(i), rj = find(j);
                if (ri != rj) parent[std::max(ri, rj)] = std::min(ri, rj);
            }
        }
    }
    // Class labels in order of first appearance.
    std::vector<long> label(n, -1);
    std::vector<std::size_t> root_label(n, n);
    std::size_t classes = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto r = find(i);
        if (root_label[r] == n) root_label[r] = classes++;
        label[i] = static_cast<long>(root_label[r]);
    }
    struct Acc {
        long long x = 0, y = 0, w = 0, h = 0;
        int count = 0;
    };
    std::vector<Acc> acc(classes);
    for (std::size_t i = 0; i < n; ++i) {
        auto& a = acc[label[i]];
        a.x += candidates[i].x;
        a.y += candidates[i].y;
        a.w += candidates[i].w;
        a.h += candidates[i].h;
        ++a.count;
    }
    // Class means in single precision with ties to even, as the reference
    // grouping does; half-pixel means are common and decide nesting below.
    std::vector<Detection> avg(classes);
    for (std::size_t c = 0; c < classes; ++c) {
        const float s = 1.0f / static_cast<float>(acc[c].count);
        auto mean = [s](long long sum) { return static_cast<int>(std::lrint(static_cast<float>(sum) * s)); };
        avg[c] = {{mean(acc[c].x), mean(acc[c].y), mean(acc[c].w), mean(acc[c].h)}, acc[c].count};
    }
    // Drop accepted classes nested inside a stronger accepted class.
    for (std::size_t i = 0; i < classes; ++i) {
        const auto& r1 = avg[i].rect;
        const int n1 = avg[i].neighbors;
        if (n1 <= min_neighbors) continue;
        bool nested = false;
        for (std::size_t j = 0; j < classes && !nested; ++j) {
            const int n2 = avg[j].neighbors;
            if (j == i || n2 <= min_neighbors) continue;
            const auto& r2 = avg[j].rect;
            const int dx = static_cast<int>(std::lrint(r2.w * eps));
            const int dy = static_cast<int>(std::lrint(r2.h * eps));
            nested = r1.x >= r2.x - dx && r1.y >= r2.y - dy && r1.right() <= r2.right() + dx &&
                     r1.bottom() <= r2.bottom() + dy && (n2 > std::max(3, n1) || n1 < 3);
        }
        if (!nested) out.push_back(avg[i]);
    }
    sort_detections(out);
    return out;
}

std::vector<Detection> detect_multi_scale_weighted(const CascadeModel& model, const GrayImage& img,
                                                   const DetectParams& p) {
    return group_rectangles(scan_candidates(model, img, p), p.min_neighbors);
}

std::vector<Rect> detect_multi_scale(const CascadeModel& model, const GrayImage& img, const DetectParams& p) {
    std::vector<Rect> out;
    for (const auto& d : detect_multi_scale_weighted(model, img, p)) out.push_back(d.rect);
    return out;
}

std::string_view to_string(EyeFrame frame) {
    switch (frame) {
        case EyeFrame::original: return "original";
        case EyeFrame::face_roi: return "face_roi";
        case EyeFrame::rotated: return "rotated";
    }
    return "unknown";
}

double EyePair::interocular() const { return std::hypot(left.x - right.x, left.y - right.y); }

EyePair order_eyes(Point2 a, Point2 b, EyeFrame frame) {
    if (a == b) {
        throw Error(ErrorKind::degenerate_pair, "order_eyes", "eye centers coincide");
    }
    const bool a_is_left = a.x > b.x || (a.x == b.x && a.y < b.y);
    return a_is_left ? EyePair{a, b, frame} : EyePair{b, a, frame};
}

Point2 box_center(const Rect& box) { return {box.x + box.w / 2.0, box.y + box.h / 2.0}; }

std::pair<Point2, Point2> eye_centers(const Rect& a, const Rect& b) { return {box_center(a), box_center(b)}; }

std::string_view to_string(EyeRejection r) {
    switch (r) {
        case EyeRejection::none: return "none";
        case EyeRejection::angle: return "angle";
        case EyeRejection::interocular: return "interocular";
    }
    return "unknown";
}

EyeRejection validate_eye_pair(const EyePair& pair, double reference_width) {
    if (std::abs(eye_angle(pair)) > kMaxEyeTiltDegrees) return EyeRejection::angle;
    if (pair.interocular() < reference_width * kMinInterocularFraction) return EyeRejection::interocular;
    return EyeRejection::none;
}

Detector::Detector(CascadeModel face, CascadeModel eye) : face_(std::move(face)), eye_(std::move(eye)) {}

std::optional<Rect> Detector::detect_face(const GrayImage& img, const DetectParams& p) const {
    const auto faces = detect_multi_scale_weighted(face_, img, p);
    if (faces.empty()) return std::nullopt;
    return faces.front().rect;
}

std::optional<EyePair> Detector::detect_eyes(const GrayImage& img, const Rect& face, const DetectParams& p,
                                             const EyeSearchOptions& opts) const {
    Rect roi_rect = face;
    if (opts.upper_face_only) roi_rect.h = std::max(1, static_cast<int>(std::lround(face.h * 0.6)));
    const GrayImage roi = crop(img, roi_rect);
    auto boxes = detect_multi_scale_weighted(eye_, roi, p);
    if (boxes.size() < 2) return std::nullopt;
    std::stable_sort(boxes.begin(), boxes.end(), [](const Detection& a, const Detection& b) {
        if (a.neighbors != b.neighbors) return a.neighbors > b.neighbors;
        if (a.rect.area() != b.rect.area()) return a.rect.area() > b.rect.area();
        if (a.rect.x != b.rect.x) return a.rect.x < b.rect.x;
        return a.rect.y < b.rect.y;
    });
    auto [c0, c1] = eye_centers(boxes[0].rect, boxes[1].rect);
    c0 = {c0.x + face.x, c0.y + face.y};
    c1 = {c1.x + face.x, c1.y + face.y};
    if (c0 == c1) return std::nullopt;
    return order_eyes(c0, c1, EyeFrame::original);
}

EyeSearchResult Detector::detect_eyes_with_retry(const GrayImage& img, const Rect& face,
                                                 const std::vector<DetectParams>& schedule,
                                                 const EyeSearchOptions& opts) const {
    if (schedule.empty()) {
        throw Error(ErrorKind::invalid_argument, "detect_eyes", "eye parameter schedule is empty");
    }
    EyeSearchResult result;
    for (const auto& params : schedule) {
        ++result.attempts;
        const auto pair = detect_eyes(img, face, params, opts);
        if (!pair) continue;
        result.raw = pair;
        result.last_rejection = validate_eye_pair(*pair, face.w);
        if (result.last_rejection == EyeRejection::none) {
            result.pair = pair;
            return result;
        }
    }
    return result;
}

}  // namespace facealign

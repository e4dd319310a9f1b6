#include "facealign/cascade.hpp"

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "facealign/error.hpp"
#include "facealign/image_io.hpp"

namespace facealign {

namespace pt = boost::property_tree;

namespace {

constexpr const char* kStage = "parse_cascade";

[[noreturn]] void fail(ErrorKind kind, const std::string& msg) { throw Error(kind, kStage, msg); }

template <typename T>
std::vector<T> numbers(const std::string& text, const std::string& where) {
    std::istringstream in(text);
    std::vector<T> out;
    T v;
    while (in >> v) out.push_back(v);
    if (!in.eof()) fail(ErrorKind::xml_malformed, where + ": expected numbers, got '" + text + "'");
    return out;
}

template <typename T>
T scalar(const pt::ptree& node, const std::string& key, const std::string& where) {
    const auto child = node.get_child_optional(key);
    if (!child) fail(ErrorKind::xml_malformed, where + ": missing <" + key + ">");
    const auto vals = numbers<T>(child->data(), where + "/" + key);
    if (vals.size() != 1) fail(ErrorKind::xml_malformed, where + ": <" + key + "> must hold one value");
    return vals.front();
}

std::vector<const pt::ptree*> items(const pt::ptree& list) {
    std::vector<const pt::ptree*> out;
    for (const auto& [name, child] : list) {
        if (name == "_") out.push_back(&child);
    }
    return out;
}

std::string trimmed(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

int round_px(double v) { return static_cast<int>(std::lround(v)); }

Rect scale_rect(const Rect& r, double scale) {
    return {round_px(r.x * scale), round_px(r.y * scale), round_px(r.w * scale), round_px(r.h * scale)};
}

struct ScaledFeature {
    WeightedRect rects[3];
    int count = 0;
};

// Rounding changes rect areas; when the base feature is balanced (zero
// response on flat input) the first weight is re-derived so the scaled
// feature stays balanced.
ScaledFeature scale_feature(const HaarFeature& f, double scale) {
    ScaledFeature out;
    out.count = static_cast<int>(f.rects.size());
    double base_balance = 0.0;
    double scaled_rest = 0.0;
    for (int k = 0; k < out.count; ++k) {
        const auto& wr = f.rects[k];
        out.rects[k] = {scale_rect(wr.rect, scale), wr.weight};
        base_balance += wr.weight * static_cast<double>(wr.rect.area());
        if (k > 0) scaled_rest += wr.weight * static_cast<double>(out.rects[k].rect.area());
    }
    const double area0 = static_cast<double>(out.rects[0].rect.area());
    if (base_balance == 0.0 && area0 > 0.0) out.rects[0].weight = -scaled_rest / area0;
    return out;
}

// Variance is measured on the window minus a one-pixel (scaled) border.
Rect norm_rect(int base_w, int base_h, double scale) {
    return {round_px(scale), round_px(scale), round_px((base_w - 2) * scale), round_px((base_h - 2) * scale)};
}

double norm_factor_from(double sum, double sq_sum, double area) {
    const double mean = sum / area;
    const double var = sq_sum / area - mean * mean;
    const double stddev = var > 0.0 ? std::sqrt(var) : 1.0;
    return area * stddev;
}

Rect offset(const Rect& r, int dx, int dy) { return {r.x + dx, r.y + dy, r.w, r.h}; }

HaarFeature parse_feature(const pt::ptree& node, int index, int base_w, int base_h) {
    const std::string where = "feature " + std::to_string(index);
    HaarFeature f;
    if (const auto tilted = node.get_optional<std::string>("tilted")) {
        f.tilted = trimmed(*tilted) != "0";
    }
    if (f.tilted) fail(ErrorKind::tilted_feature, where + ": tilted features are not supported");
    const auto rects = node.get_child_optional("rects");
    if (!rects) fail(ErrorKind::xml_malformed, where + ": missing <rects>");
    for (const auto* r : items(*rects)) {
        const auto v = numbers<double>(r->data(), where);
        if (v.size() != 5) fail(ErrorKind::xml_malformed, where + ": rect needs 'x y w h weight'");
        const Rect rect{static_cast<int>(v[0]), static_cast<int>(v[1]), static_cast<int>(v[2]),
                        static_cast<int>(v[3])};
        if (!rect.fits_in(base_w, base_h)) {
            fail(ErrorKind::rect_outside_window, where + ": rect outside the " + std::to_string(base_w) + "x" +
                                                     std::to_string(base_h) + " base window");
        }
        f.rects.push_back({rect, v[4]});
    }
    if (f.rects.size() < 2 || f.rects.size() > 3) {
        fail(ErrorKind::xml_malformed, where + ": expected 2 or 3 rects, found " + std::to_string(f.rects.size()));
    }
    return f;
}

}  // namespace

std::size_t CascadeModel::stump_count() const {
    std::size_t n = 0;
    for (const auto& s : stages) n += s.classifiers.size();
    return n;
}

CascadeModel parse_cascade(std::string_view xml_text) {
    pt::ptree doc;
    try {
        std::istringstream in{std::string(xml_text)};
        pt::read_xml(in, doc, pt::xml_parser::no_comments);
    } catch (const pt::xml_parser_error& e) {
        fail(ErrorKind::xml_malformed, "line " + std::to_string(e.line()) + ": " + e.message());
    }
    const auto storage = doc.get_child_optional("opencv_storage");
    if (!storage) fail(ErrorKind::xml_malformed, "missing <opencv_storage> root");
    const pt::ptree* root = nullptr;
    for (const auto& [name, child] : *storage) {
        if (name == "<xmlattr>") continue;
        if (child.get_child_optional("stageType")) {
            root = &child;
            break;
        }
        if (child.get_child_optional("stages") || child.get_child_optional("size")) {
            fail(ErrorKind::unsupported_format, "old-style cascade schema <" + name + "> is not supported");
        }
    }
    if (!root) fail(ErrorKind::xml_malformed, "no cascade element with <stageType>");

    const std::string stage_type = trimmed(root->get<std::string>("stageType", ""));
    if (stage_type != "BOOST") fail(ErrorKind::unsupported_stage_type, "stageType '" + stage_type + "'");
    const std::string feature_type = trimmed(root->get<std::string>("featureType", ""));
    if (feature_type != "HAAR") fail(ErrorKind::unsupported_feature_type, "featureType '" + feature_type + "'");

    CascadeModel model;
    model.base_width = scalar<int>(*root, "width", "cascade");
    model.base_height = scalar<int>(*root, "height", "cascade");
    if (model.base_width <= 2 || model.base_height <= 2) {
        fail(ErrorKind::xml_malformed, "base window must be larger than 2x2");
    }
    const int declared_stages = scalar<int>(*root, "stageNum", "cascade");

    const auto features_node = root->get_child_optional("features");
    if (!features_node) fail(ErrorKind::xml_malformed, "missing <features>");
    std::vector<HaarFeature> features;
    for (const auto* f : items(*features_node)) {
        features.push_back(parse_feature(*f, static_cast<int>(features.size()), model.base_width, model.base_height));
    }

    const auto stages_node = root->get_child_optional("stages");
    if (!stages_node) fail(ErrorKind::xml_malformed, "missing <stages>");
    for (const auto* s : items(*stages_node)) {
        const std::string where = "stage " + std::to_string(model.stages.size());
        CascadeStage stage;
        stage.threshold = scalar<double>(*s, "stageThreshold", where);
        const int declared_weak = scalar<int>(*s, "maxWeakCount", where);
        const auto weak_node = s->get_child_optional("weakClassifiers");
        if (!weak_node) fail(ErrorKind::xml_malformed, where + ": missing <weakClassifiers>");
        for (const auto* w : items(*weak_node)) {
            const std::string wwhere = where + " classifier " + std::to_string(stage.classifiers.size());
            const auto nodes = numbers<double>(w->get<std::string>("internalNodes", ""), wwhere);
            const auto leaves = numbers<double>(w->get<std::string>("leafValues", ""), wwhere);
            if (nodes.size() != 4 || leaves.size() != 2 || nodes[0] != 0.0 || nodes[1] != -1.0) {
                fail(ErrorKind::tree_classifier, wwhere + ": only stump weak classifiers are supported");
            }
            const auto idx = static_cast<long>(nodes[2]);
            if (idx < 0 || idx >= static_cast<long>(features.size())) {
                fail(ErrorKind::xml_malformed, wwhere + ": feature index out of range");
            }
            stage.classifiers.push_back({features[idx], nodes[3], leaves[0], leaves[1]});
        }
        if (static_cast<int>(stage.classifiers.size()) != declared_weak) {
            fail(ErrorKind::xml_malformed, where + ": maxWeakCount " + std::to_string(declared_weak) +
                                               " but found " + std::to_string(stage.classifiers.size()));
        }
        model.stages.push_back(std::move(stage));
    }
    if (static_cast<int>(model.stages.size()) != declared_stages) {
        fail(ErrorKind::xml_malformed, "stageNum " + std::to_string(declared_stages) + " but found " +
                                           std::to_string(model.stages.size()));
    }
    return model;
}

CascadeModel load_cascade(const std::filesystem::path& path) {
    const auto bytes = read_file(path);
    try {
        return parse_cascade(std::string_view(reinterpret_cast<const char*>(bytes.data()), bytes.size()));
    } catch (const Error& e) {
        throw Error(e.kind(), e.stage(), path.string() + ": " + e.what());
    }
}

Size scaled_window(const CascadeModel& model, double scale) {
    return {round_px(model.base_width * scale), round_px(model.base_height * scale)};
}

double feature_value(const HaarFeature& f, const IntegralImage& ii, const Rect& window, double scale,
                     const CascadeModel& model) {
    const Rect nr = offset(norm_rect(model.base_width, model.base_height, scale), window.x, window.y);
    const double norm = norm_factor_from(static_cast<double>(ii.rect_sum(nr)),
                                         static_cast<double>(ii.rect_sq_sum(nr)), static_cast<double>(nr.area()));
    const auto sf = scale_feature(f, scale);
    double acc = 0.0;
    for (int k = 0; k < sf.count; ++k) {
        acc += sf.rects[k].weight * static_cast<double>(ii.rect_sum(offset(sf.rects[k].rect, window.x, window.y)));
    }
    return acc / norm;
}

double stage_sum(const CascadeStage& stage, const IntegralImage& ii, const Rect& window, double scale,
                 const CascadeModel& model) {
    double sum = 0.0;
    for (const auto& wc : stage.classifiers) sum += wc.eval(feature_value(wc.feature, ii, window, scale, model));
    return sum;
}

bool eval_window(const CascadeModel& model, const IntegralImage& ii, const Rect& window, double scale) {
    const ScaledCascade scaled(model, scale, ii.width());
    return scaled.passes(ii, window.x, window.y);
}

ScaledCascade::ScaledCascade(const CascadeModel& model, double scale, int table_stride)
    : stride_(table_stride), window_(scaled_window(model, scale)), extent_(window_) {
    auto offsets = [this](const Rect& r) {
        extent_.w = std::max(extent_.w, r.right());
        extent_.h = std::max(extent_.h, r.bottom());
        const std::ptrdiff_t s = stride_;
        return Offsets{r.y * s + r.x, r.y * s + r.right(), r.bottom() * s + r.x, r.bottom() * s + r.right()};
    };
    const Rect nr = norm_rect(model.base_width, model.base_height, scale);
    norm_ = offsets(nr);
    norm_area_ = static_cast<double>(nr.area());
    for (const auto& stage : model.stages) {
        const std::size_t begin = stumps_.size();
        for (const auto& wc : stage.classifiers) {
            const auto sf = scale_feature(wc.feature, scale);
            Stump st{};
            st.count = sf.count;
            for (int k = 0; k < sf.count; ++k) {
                st.rect[k] = offsets(sf.rects[k].rect);
                st.weight[k] = sf.rects[k].weight;
            }
            st.threshold = wc.threshold;
            st.left = wc.left_val;
            st.right = wc.right_val;
            stumps_.push_back(st);
        }
        stages_.push_back({begin, stumps_.size(), stage.threshold});
    }
}

double ScaledCascade::norm_factor(const IntegralImage& ii, int x, int y) const {
    const std::ptrdiff_t base = static_cast<std::ptrdiff_t>(y) * stride_ + x;
    const double sum = rect_sum(ii.sums().data() + base, norm_);
    const double sq = rect_sum(ii.sq_sums().data() + base, norm_);
    return norm_factor_from(sum, sq, norm_area_);
}

double ScaledCascade::stump_value(const Stump& s, const std::int64_t* base) const {
    double acc = s.weight[0] * rect_sum(base, s.rect[0]) + s.weight[1] * rect_sum(base, s.rect[1]);
    if (s.count == 3) acc += s.weight[2] * rect_sum(base, s.rect[2]);
    return acc;
}

double ScaledCascade::feature(std::size_t stage, std::size_t index, const IntegralImage& ii, int x, int y,
                              double norm) const {
    const auto& st = stumps_[stages_[stage].begin + index];
    const std::int64_t* base = ii.sums().data() + static_cast<std::ptrdiff_t>(y) * stride_ + x;
    return stump_value(st, base) / norm;
}

std::size_t ScaledCascade::first_failing_stage(const IntegralImage& ii, int x, int y) const {
    const double norm = norm_factor(ii, x, y);
    const std::int64_t* base = ii.sums().data() + static_cast<std::ptrdiff_t>(y) * stride_ + x;
    for (std::size_t s = 0; s < stages_.size(); ++s) {
        const auto& stage = stages_[s];
        double sum = 0.0;
        for (std::size_t i = stage.begin; i < stage.end; ++i) {
            const auto& st = stumps_[i];
            sum += stump_value(st, base) / norm < st.threshold ? st.left : st.right;
        }
        if (sum < stage.threshold) return s;
    }
    return stages_.size();
}

}  // namespace facealign

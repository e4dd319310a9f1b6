#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstring>

#include "facealign/align.hpp"
#include "facealign/cascade.hpp"
#include "facealign/detect.hpp"
#include "facealign/error.hpp"
#include "facealign/image.hpp"
#include "facealign/image_io.hpp"
#include "facealign/manifest.hpp"
#include "facealign/pipeline.hpp"

namespace py = pybind11;
using namespace facealign;

namespace {

using U8Array = py::array_t<std::uint8_t, py::array::c_style | py::array::forcecast>;

GrayImage gray_from(const U8Array& a) {
    if (a.ndim() != 2) throw py::value_error("expected a 2-D uint8 array");
    const auto h = static_cast<int>(a.shape(0));
    const auto w = static_cast<int>(a.shape(1));
    std::vector<std::uint8_t> data(a.data(), a.data() + a.size());
    return GrayImage(w, h, std::move(data));
}

py::array_t<std::uint8_t> to_array(const GrayImage& img) {
    py::array_t<std::uint8_t> out({img.height(), img.width()});
    std::memcpy(out.mutable_data(), img.data().data(), img.data().size());
    return out;
}

AffineMatrix matrix_from(const py::array_t<double, py::array::c_style | py::array::forcecast>& m) {
    if (m.ndim() != 2 || m.shape(0) != 2 || m.shape(1) != 3) throw py::value_error("expected a 2x3 matrix");
    const double* d = m.data();
    return {d[0], d[1], d[2], d[3], d[4], d[5]};
}

py::array_t<double> matrix_array(const AffineMatrix& m) {
    py::array_t<double> out({2, 3});
    double* d = out.mutable_data();
    const double v[6] = {m.m11, m.m12, m.m13, m.m21, m.m22, m.m23};
    std::copy(std::begin(v), std::end(v), d);
    return out;
}

Point2 point_from(const std::pair<double, double>& p) { return {p.first, p.second}; }

std::tuple<int, int, int, int> rect_tuple(const Rect& r) { return {r.x, r.y, r.w, r.h}; }

PipelineConfig make_config(const std::string& mode, std::pair<int, int> out_size, const std::string& crop_y,
                           double face_scale_factor, int face_min_neighbors, bool upper_face_eyes) {
    PipelineConfig c;
    const auto m = pipeline_mode_from_string(mode);
    if (!m) throw py::value_error("mode must be 'faithful' or 'optimized'");
    const auto cy = crop_y_convention_from_string(crop_y);
    if (!cy) throw py::value_error("crop_y must be 'above' or 'paper-literal'");
    c.mode = *m;
    c.crop_y = *cy;
    c.output_size = {out_size.first, out_size.second};
    c.face_params.scale_factor = face_scale_factor;
    c.face_params.min_neighbors = face_min_neighbors;
    c.upper_face_eyes = upper_face_eyes;
    return c;
}

py::tuple result_tuple(const PipelineResult& r, const PipelineConfig& c) {
    py::object image = py::none();
    if (r.output_image) image = to_array(*r.output_image);
    return py::make_tuple(manifest_record(r, c).dump(), image);
}

}  // namespace

PYBIND11_MODULE(_facealign, m) {
    m.doc() = "Face detection, eye alignment and cropping";

    py::register_exception<Error>(m, "Error");

    m.def("load_gray", [](const std::filesystem::path& p) { return to_array(load_gray(p)); }, py::arg("path"));
    m.def("save_gray", [](const U8Array& a, const std::filesystem::path& p) { save_image(gray_from(a), p); },
          py::arg("image"), py::arg("path"));
    m.def("luma", [](int r, int g, int b) {
        return luma({static_cast<std::uint8_t>(r), static_cast<std::uint8_t>(g), static_cast<std::uint8_t>(b)});
    });
    m.def(
        "to_grayscale",
        [](const U8Array& a) {
            if (a.ndim() != 3 || a.shape(2) != 3) throw py::value_error("expected an HxWx3 uint8 array");
            std::vector<std::uint8_t> data(a.data(), a.data() + a.size());
            return to_array(to_grayscale(RgbImage(static_cast<int>(a.shape(1)), static_cast<int>(a.shape(0)),
                                                  std::move(data))));
        },
        py::arg("rgb"));
    m.def(
        "integral_image",
        [](const U8Array& a) {
            const auto ii = IntegralImage::build(gray_from(a), false);
            py::array_t<std::int64_t> out({ii.height(), ii.width()});
            std::memcpy(out.mutable_data(), ii.sums().data(), ii.sums().size_bytes());
            return out;
        },
        py::arg("gray"));
    m.def(
        "resize_bilinear", [](const U8Array& a, int w, int h) { return to_array(resize_bilinear(gray_from(a), w, h)); },
        py::arg("gray"), py::arg("width"), py::arg("height"));

    py::class_<CascadeModel>(m, "Cascade")
        .def_static("load", &load_cascade, py::arg("path"))
        .def_static("parse", [](const std::string& xml) { return parse_cascade(xml); }, py::arg("xml"))
        .def_property_readonly("window", [](const CascadeModel& c) { return std::make_pair(c.base_width, c.base_height); })
        .def_property_readonly("stage_count", [](const CascadeModel& c) { return c.stages.size(); })
        .def_property_readonly("stump_count", &CascadeModel::stump_count);

    m.def(
        "detect_multi_scale",
        [](const CascadeModel& c, const U8Array& a, double scale_factor, int min_neighbors,
           std::pair<int, int> min_size) {
            DetectParams p{.scale_factor = scale_factor, .min_neighbors = min_neighbors, .min_size = {min_size.first, min_size.second}};
            std::vector<std::tuple<int, int, int, int>> out;
            for (const auto& r : detect_multi_scale(c, gray_from(a), p)) out.push_back(rect_tuple(r));
            return out;
        },
        py::arg("cascade"), py::arg("gray"), py::arg("scale_factor") = 1.1, py::arg("min_neighbors") = 3,
        py::arg("min_size") = std::make_pair(0, 0));

    m.def(
        "eye_angle",
        [](std::pair<double, double> a, std::pair<double, double> b) {
            return eye_angle(order_eyes(point_from(a), point_from(b)));
        },
        py::arg("a"), py::arg("b"));
    m.def(
        "rotation_matrix",
        [](std::pair<double, double> center, double theta, double scale) {
            return matrix_array(rotation_matrix(point_from(center), theta, scale));
        },
        py::arg("center"), py::arg("theta"), py::arg("scale") = 1.0);
    m.def(
        "transform_point",
        [](const py::array_t<double, py::array::c_style | py::array::forcecast>& mat, std::pair<double, double> p) {
            const Point2 q = transform_point(matrix_from(mat), point_from(p));
            return std::make_pair(q.x, q.y);
        },
        py::arg("matrix"), py::arg("point"));
    m.def(
        "warp_affine",
        [](const U8Array& a, const py::array_t<double, py::array::c_style | py::array::forcecast>& mat, int w,
           int h) { return to_array(warp_affine(gray_from(a), matrix_from(mat), w, h)); },
        py::arg("gray"), py::arg("matrix"), py::arg("width"), py::arg("height"));
    m.def(
        "face_crop_box",
        [](std::pair<double, double> a, std::pair<double, double> b, const std::string& crop_y) {
            const auto cy = crop_y_convention_from_string(crop_y);
            if (!cy) throw py::value_error("crop_y must be 'above' or 'paper-literal'");
            const CropBox box = face_crop_box(order_eyes(point_from(a), point_from(b)), *cy);
            return py::make_tuple(box.origin.x, box.origin.y, box.width, box.height);
        },
        py::arg("a"), py::arg("b"), py::arg("crop_y") = "above");

    py::class_<Pipeline>(m, "_Pipeline")
        .def(py::init([](const std::filesystem::path& face, const std::filesystem::path& eye, const std::string& mode,
                         std::pair<int, int> out_size, const std::string& crop_y, double sf, int mn, bool upper) {
                 return Pipeline(Detector(load_cascade(face), load_cascade(eye)),
                                 make_config(mode, out_size, crop_y, sf, mn, upper));
             }),
             py::arg("face_cascade"), py::arg("eye_cascade"), py::arg("mode"), py::arg("out_size"),
             py::arg("crop_y"), py::arg("face_scale_factor"), py::arg("face_min_neighbors"),
             py::arg("upper_face_eyes"))
        .def("config_hash", [](const Pipeline& p) { return p.config().hash(); })
        .def(
            "process_array",
            [](const Pipeline& p, const U8Array& a, const std::string& name) {
                const GrayImage g = gray_from(a);
                PipelineResult r;
                {
                    py::gil_scoped_release release;
                    r = p.process(g, name);
                }
                return result_tuple(r, p.config());
            },
            py::arg("gray"), py::arg("name") = "array")
        .def(
            "process_image",
            [](const Pipeline& p, const std::filesystem::path& path, const std::filesystem::path& run_root) {
                PipelineResult r;
                {
                    py::gil_scoped_release release;
                    r = p.process_image(path, run_root);
                }
                return result_tuple(r, p.config());
            },
            py::arg("path"), py::arg("run_root") = std::filesystem::path())
        .def(
            "run_batch",
            [](const Pipeline& p, const std::filesystem::path& input_dir, const std::filesystem::path& run_root,
               std::size_t jobs) {
                py::gil_scoped_release release;
                return run_batch(p, input_dir, run_root, jobs).manifest_path;
            },
            py::arg("input_dir"), py::arg("run_root"), py::arg("jobs") = 1);

    m.def(
        "_resume_with_manual_eyes",
        [](const std::filesystem::path& path, std::pair<double, double> a, std::pair<double, double> b,
           const std::string& crop_y, std::pair<int, int> out_size, const std::filesystem::path& run_root) {
            const PipelineConfig c = make_config("optimized", out_size, crop_y, 1.1, 5, false);
            return result_tuple(resume_with_manual_eyes(path, point_from(a), point_from(b), c, run_root), c);
        },
        py::arg("path"), py::arg("a"), py::arg("b"), py::arg("crop_y"), py::arg("out_size"), py::arg("run_root"));

    m.attr("DATA_DIR") = FACEALIGN_DATA_DIR;
}

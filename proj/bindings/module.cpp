// Python bindings for the camoseg core: geometry, dual-rotation weighting,
// metrics, the tiny segmentation model, and the synthetic data generator.
// Everything crosses the boundary as float64 numpy arrays; validity masks
// are bool arrays.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <stdexcept>
#include <string>
#include <vector>

#include "camoseg/checkpoint.hpp"
#include "camoseg/config.hpp"
#include "camoseg/dataset.hpp"
#include "camoseg/drcl.hpp"
#include "camoseg/geometry.hpp"
#include "camoseg/metrics.hpp"
#include "camoseg/segmodel.hpp"
#include "camoseg/tensor.hpp"
#include "camoseg/trainer.hpp"

namespace py = pybind11;
using namespace camoseg;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;
using BoolArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;

Tensor tensor_from(const DoubleArray& a) {
  std::vector<int> shape(a.ndim());
  for (py::ssize_t i = 0; i < a.ndim(); ++i) shape[i] = static_cast<int>(a.shape(i));
  std::vector<double> data(a.data(), a.data() + a.size());
  return Tensor::from_data(std::move(shape), std::move(data), false);
}

py::array_t<double> array_from(const Tensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  py::array_t<double> out(shape);
  std::memcpy(out.mutable_data(), t.data().data(), sizeof(double) * t.data().size());
  return out;
}

Mask mask_from(const BoolArray& a) {
  if (a.ndim() != 2) throw std::invalid_argument("valid mask must be a 2-D bool array");
  Mask m;
  m.h = static_cast<int>(a.shape(0));
  m.w = static_cast<int>(a.shape(1));
  m.bits.resize(static_cast<std::size_t>(m.h) * m.w);
  const bool* p = a.data();
  for (std::size_t i = 0; i < m.bits.size(); ++i) m.bits[i] = p[i] ? 1 : 0;
  return m;
}

py::array_t<bool> array_from(const Mask& m) {
  py::array_t<bool> out({static_cast<py::ssize_t>(m.h), static_cast<py::ssize_t>(m.w)});
  bool* p = out.mutable_data();
  for (std::size_t i = 0; i < m.bits.size(); ++i) p[i] = m.bits[i] != 0;
  return out;
}

PixelWeightConfig pixel_cfg(double alpha, double mu, const std::string& variant) {
  PixelWeightConfig cfg;
  cfg.alpha = alpha;
  cfg.mu = mu;
  cfg.variant = parse_pixel_weight_variant(variant);
  return cfg;
}

SsimConfig ssim_cfg(int window, double sigma, double c1, double c2) {
  SsimConfig cfg;
  cfg.window = window;
  cfg.sigma = sigma;
  cfg.c1 = c1;
  cfg.c2 = c2;
  return cfg;
}

// The model parameter sets move through python as an opaque handle; forward
// accepts a single [3,H,W] image or an [N,3,H,W] batch.
struct PyModel {
  ModelParams params;

  static PyModel init(std::uint64_t seed) { return {ModelParams::init(seed, false)}; }

  static PyModel from_checkpoint(const std::string& path, const std::string& role) {
    Checkpoint ck = load_checkpoint(path);
    if (role == "teacher") return {ck.teacher.clone(false)};
    if (role == "student") return {ck.student.clone(false)};
    throw std::invalid_argument("role must be 'teacher' or 'student', got '" + role + "'");
  }

  py::array_t<double> forward(const DoubleArray& image) const {
    Tensor x = tensor_from(image);
    const bool single = x.ndim() == 3;
    if (single) x = stack0({x});
    Tensor y = model_forward(params, x);
    if (single) y = reshape(y, {y.dim(1), y.dim(2)});
    return array_from(y);
  }

  std::size_t n_params() const { return params.total_params(); }
};

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "camoseg core operations";

  py::register_exception<InsufficientValidArea>(m, "InsufficientValidAreaError");

  // geometry ---------------------------------------------------------------
  m.def(
      "rotate",
      [](const DoubleArray& map, double angle_deg) {
        RotatedView v = rotate(tensor_from(map), angle_deg);
        return py::make_tuple(array_from(v.data), array_from(v.valid));
      },
      py::arg("map"), py::arg("angle_deg"),
      "Rotate a [H,W] or [C,H,W] map CCW about the image center; returns "
      "(data, valid).");

  m.def(
      "unrotate",
      [](const DoubleArray& data, double angle_deg, const BoolArray& valid) {
        RotatedView v = unrotate({tensor_from(data), angle_deg, mask_from(valid)});
        return py::make_tuple(array_from(v.data), array_from(v.valid));
      },
      py::arg("data"), py::arg("angle_deg"), py::arg("valid"),
      "Rotate a view back to the horizontal frame; returns (data, valid).");

  m.def(
      "rotate_mask",
      [](const BoolArray& valid, double angle_deg) {
        return array_from(rotate_mask(mask_from(valid), angle_deg));
      },
      py::arg("valid"), py::arg("angle_deg"));

  // dual-rotation weighting ------------------------------------------------
  m.def(
      "pixel_inconsistency",
      [](const DoubleArray& h1, const DoubleArray& h2, const BoolArray& valid) {
        return array_from(pixel_inconsistency(tensor_from(h1), tensor_from(h2), mask_from(valid)));
      },
      py::arg("h1"), py::arg("h2"), py::arg("valid"));

  m.def(
      "mean_horizontal",
      [](const DoubleArray& h1, const DoubleArray& h2) {
        return array_from(mean_horizontal(tensor_from(h1), tensor_from(h2)));
      },
      py::arg("h1"), py::arg("h2"));

  m.def(
      "pixel_weight",
      [](const DoubleArray& delta, const DoubleArray& y_h, double alpha, double mu,
         const std::string& variant) {
        return array_from(pixel_weight(tensor_from(delta), tensor_from(y_h),
                                       pixel_cfg(alpha, mu, variant)));
      },
      py::arg("delta"), py::arg("y_h"), py::arg("alpha") = 0.25, py::arg("mu") = 0.5,
      py::arg("variant") = "full");

  m.def(
      "ssim",
      [](const DoubleArray& a, const DoubleArray& b, const BoolArray& valid, int window,
         double sigma, double c1, double c2) {
        return ssim(tensor_from(a), tensor_from(b), mask_from(valid),
                    ssim_cfg(window, sigma, c1, c2));
      },
      py::arg("a"), py::arg("b"), py::arg("valid"), py::arg("window") = 11,
      py::arg("sigma") = 1.5, py::arg("c1") = 1e-4, py::arg("c2") = 9e-4);

  m.def(
      "instance_weight",
      [](const DoubleArray& h1, const DoubleArray& h2, const BoolArray& valid, double beta,
         int window, double sigma, double c1, double c2) {
        InstanceWeightConfig cfg;
        cfg.beta = beta;
        cfg.ssim = ssim_cfg(window, sigma, c1, c2);
        return instance_weight(tensor_from(h1), tensor_from(h2), mask_from(valid), cfg);
      },
      py::arg("h1"), py::arg("h2"), py::arg("valid"), py::arg("beta") = 4.0,
      py::arg("window") = 11, py::arg("sigma") = 1.5, py::arg("c1") = 1e-4,
      py::arg("c2") = 9e-4);

  m.def(
      "dual_rotation_views",
      [](const DoubleArray& image, const PyModel& teacher, double theta1, double theta2,
         double alpha, double mu, const std::string& variant, double beta, bool uniform) {
        InstanceWeightConfig icfg;
        icfg.beta = beta;
        DualRotationSample ds =
            dual_rotation_views(tensor_from(image), teacher.params, theta1, theta2,
                                pixel_cfg(alpha, mu, variant), icfg, uniform);
        py::dict out;
        out["r1_image"] = array_from(ds.r1_image);
        out["teacher_r1"] = array_from(ds.teacher_r1);
        out["w_pc_r1"] = array_from(ds.w_pc_r1);
        out["v_r1"] = array_from(ds.v_r1);
        out["h1"] = array_from(ds.h1);
        out["h2"] = array_from(ds.h2);
        out["y_h"] = array_from(ds.y_h);
        out["delta"] = array_from(ds.delta);
        out["v_h"] = array_from(ds.v_h);
        out["w_ic"] = ds.w_ic;
        out["mean_w_pc"] = ds.mean_w_pc;
        out["theta1"] = ds.theta1;
        out["theta2"] = ds.theta2;
        return out;
      },
      py::arg("image"), py::arg("teacher"), py::arg("theta1"), py::arg("theta2"),
      py::arg("alpha") = 0.25, py::arg("mu") = 0.5, py::arg("variant") = "full",
      py::arg("beta") = 4.0, py::arg("uniform") = false,
      "Run the teacher on two rotated views of a [3,H,W] image and derive the "
      "per-pixel and per-instance pseudo-label weights.");

  // metrics ------------------------------------------------------------------
  m.def(
      "mae", [](const DoubleArray& pred, const DoubleArray& gt) {
        return mae(tensor_from(pred), tensor_from(gt));
      },
      py::arg("pred"), py::arg("gt"));

  m.def(
      "f_measure",
      [](const DoubleArray& pred, const DoubleArray& gt, const std::string& mode, double beta2) {
        if (mode != "mean" && mode != "max")
          throw std::invalid_argument("mode must be 'mean' or 'max', got '" + mode + "'");
        return f_measure(tensor_from(pred), tensor_from(gt),
                         mode == "mean" ? FMode::kMean : FMode::kMax, beta2);
      },
      py::arg("pred"), py::arg("gt"), py::arg("mode") = "mean", py::arg("beta2") = 0.3);

  m.def(
      "iou_at_half",
      [](const DoubleArray& pred, const DoubleArray& gt) {
        return iou_at_half(tensor_from(pred), tensor_from(gt));
      },
      py::arg("pred"), py::arg("gt"));

  // data + model -------------------------------------------------------------
  m.def(
      "generate_sample",
      [](int index, int size, double texture_scale, double contrast_delta, int blob_complexity,
         std::uint64_t seed) {
        CamoGenConfig cfg;
        cfg.size = size;
        cfg.texture_scale = texture_scale;
        cfg.contrast_delta = contrast_delta;
        cfg.blob_complexity = blob_complexity;
        cfg.seed = seed;
        Sample s = generate_sample(cfg, index);
        return py::make_tuple(array_from(s.image), array_from(s.mask));
      },
      py::arg("index"), py::arg("size") = 64, py::arg("texture_scale") = 2.0,
      py::arg("contrast_delta") = 0.25, py::arg("blob_complexity") = 3, py::arg("seed") = 0,
      "Deterministic synthetic camouflage sample; returns (image [3,H,W], mask [H,W]).");

  py::class_<PyModel>(m, "Model")
      .def_static("init", &PyModel::init, py::arg("seed"),
                  "Freshly initialized parameters (seeded, deterministic).")
      .def_static("from_checkpoint", &PyModel::from_checkpoint, py::arg("path"),
                  py::arg("role") = "teacher",
                  "Load 'teacher' or 'student' parameters from a checkpoint file.")
      .def("forward", &PyModel::forward, py::arg("image"),
           "[3,H,W] -> [H,W] or [N,3,H,W] -> [N,H,W] probabilities in (0,1).")
      .def_property_readonly("n_params", &PyModel::n_params);
}

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "udh/checkpoint.hpp"
#include "udh/datagen.hpp"
#include "udh/dataset.hpp"
#include "udh/error.hpp"
#include "udh/eval.hpp"
#include "udh/geom.hpp"
#include "udh/image_io.hpp"
#include "udh/train.hpp"
#include "udh/warp.hpp"

namespace py = pybind11;
using namespace udh;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

Image to_image(const Array& a) {
  if (a.ndim() != 2 && a.ndim() != 3) throw Error(ErrorCode::ShapeMismatch, "image must be HxW or HxWxC");
  const int h = static_cast<int>(a.shape(0));
  const int w = static_cast<int>(a.shape(1));
  const int c = a.ndim() == 3 ? static_cast<int>(a.shape(2)) : 1;
  Image img(h, w, c);
  std::copy(a.data(), a.data() + img.size(), img.values().begin());
  return img;
}

Array to_array(const Image& img) {
  std::vector<py::ssize_t> shape{img.height(), img.width()};
  if (img.channels() != 1) shape.push_back(img.channels());
  Array a(shape);
  std::copy(img.values().begin(), img.values().end(), a.mutable_data());
  return a;
}

CornerSet to_corners(const Mat42& m) {
  CornerSet c;
  for (int k = 0; k < 4; ++k) c.pts[k] = Vec2(m(k, 0), m(k, 1));
  return c;
}

Mat42 from_corners(const CornerSet& c) {
  Mat42 m;
  for (int k = 0; k < 4; ++k) m.row(k) = c.pts[k].transpose();
  return m;
}

FourPointDelta to_delta(const Mat42& m) {
  FourPointDelta d;
  d.d = m;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Homography estimation toolkit: Tensor DLT, differentiable warping, data generation and training.";

  // Messages carry the error code name as a prefix, e.g. "CollinearCorners: ...".
  py::register_exception<Error>(m, "Error", PyExc_RuntimeError);

  m.def(
      "dlt_solve",
      [](const Mat42& src, const Mat42& dst) { return dlt_solve(to_corners(src), to_corners(dst)).matrix(); },
      py::arg("src"), py::arg("dst"), "Homography mapping four src corners onto four dst corners (h33 = 1).");
  m.def(
      "h4pt_to_h",
      [](const Mat42& corners, const Mat42& delta) { return h4pt_to_h(to_corners(corners), to_delta(delta)).matrix(); },
      py::arg("corners"), py::arg("delta"));
  m.def(
      "project",
      [](const Mat3& h, double x, double y) {
        const Vec2 p = project(Homography::from_matrix(h), Vec2(x, y));
        return py::make_tuple(p.x(), p.y());
      },
      py::arg("h"), py::arg("x"), py::arg("y"));
  m.def(
      "invert", [](const Mat3& h) { return invert(Homography::from_matrix(h)).matrix(); }, py::arg("h"));
  m.def(
      "warp_image",
      [](const Array& img, const Mat3& h, int width, int height) {
        const Image src = to_image(img);
        return to_array(warp_image(src, Homography::from_matrix(h), width > 0 ? width : src.width(),
                                   height > 0 ? height : src.height()));
      },
      py::arg("image"), py::arg("h"), py::arg("width") = 0, py::arg("height") = 0,
      "out(x) = image(h^-1 x), bilinear with zero padding.");
  m.def(
      "fourpt_rmse",
      [](const Mat42& pred, const Mat42& truth, bool per_corner) {
        return fourpt_rmse(to_delta(pred), to_delta(truth),
                           per_corner ? RmseConvention::PerCorner : RmseConvention::PerCoordinate);
      },
      py::arg("pred"), py::arg("truth"), py::arg("per_corner") = false);
  m.def(
      "direct_align",
      [](const Array& image_a, const Mat42& corners, const Array& patch_b, int iterations, double lr) {
        const AlignResult r = direct_align(to_image(image_a), to_corners(corners), to_image(patch_b), {iterations, lr});
        py::dict out;
        out["delta"] = Mat42(r.delta.d);
        out["initial_loss"] = r.initial_loss;
        out["best_loss"] = r.best_loss;
        out["iterations"] = r.iterations;
        out["aborted"] = r.aborted;
        return out;
      },
      py::arg("image_a"), py::arg("corners"), py::arg("patch_b"), py::arg("iterations") = 500, py::arg("lr") = 0.05);
  m.def(
      "procedural_image",
      [](int width, int height, int feature_size, int octaves, std::uint64_t seed) {
        return to_array(procedural_image({width, height, feature_size, octaves}, seed));
      },
      py::arg("width") = 320, py::arg("height") = 240, py::arg("feature_size") = 32, py::arg("octaves") = 3,
      py::arg("seed") = 0);
  m.def("overlap_preset", &overlap_preset, py::arg("name"), py::arg("patch_size") = 128);
  m.def(
      "read_image", [](const std::filesystem::path& p) { return to_array(read_image(p)); }, py::arg("path"));
  m.def(
      "write_image", [](const std::filesystem::path& p, const Array& img) { write_image(p, to_image(img)); },
      py::arg("path"), py::arg("image"));

  py::class_<Sample>(m, "Sample")
      .def_property_readonly("patch_a", [](const Sample& s) { return to_array(s.patch_a); })
      .def_property_readonly("patch_b", [](const Sample& s) { return to_array(s.patch_b); })
      .def_property_readonly("image_a", [](const Sample& s) { return to_array(s.image_a); })
      .def_property_readonly("corners", [](const Sample& s) { return from_corners(s.corners_a); })
      .def_property_readonly("truth", [](const Sample& s) -> std::optional<Mat42> {
        if (!s.truth) return std::nullopt;
        return Mat42(s.truth->d);
      });

  py::class_<Dataset>(m, "Dataset")
      .def_property_readonly("samples", [](const Dataset& d) { return d.samples; })
      .def_property_readonly("train", [](const Dataset& d) { return d.manifest.train; })
      .def_property_readonly("test", [](const Dataset& d) { return d.manifest.test; })
      .def_property_readonly("mean", [](const Dataset& d) { return d.manifest.stats.mean; })
      .def_property_readonly("std", [](const Dataset& d) { return d.manifest.stats.std; })
      .def_property_readonly("patch_size", [](const Dataset& d) { return d.manifest.config.patch_size; })
      .def_property_readonly("rho", [](const Dataset& d) { return d.manifest.config.rho; })
      .def("__len__", [](const Dataset& d) { return d.samples.size(); })
      .def("save", [](const Dataset& d, const std::filesystem::path& dir) { write_dataset(dir, d); }, py::arg("dir"));

  m.def(
      "generate_dataset",
      [](int count, int test_count, int patch_size, double rho, std::uint64_t seed, bool augment) {
        GenConfig cfg;
        cfg.count = count;
        cfg.patch_size = patch_size;
        cfg.rho = rho;
        cfg.seed = seed;
        cfg.augment.enabled = augment;
        return generate_dataset(cfg, {}, test_count);
      },
      py::arg("count"), py::arg("test_count") = 0, py::arg("patch_size") = 128, py::arg("rho") = 32.0,
      py::arg("seed") = 0, py::arg("augment") = false, "Procedural dataset; the last test_count samples are held out.");
  m.def("read_dataset", &read_dataset, py::arg("dir"));

  m.def(
      "train",
      [](const Dataset& ds, const std::string& mode, int iterations, int batch_size, double lr, std::uint64_t seed,
         const std::filesystem::path& out_dir, const std::string& arch) {
        TrainConfig cfg;
        cfg.mode = parse_train_mode(mode);
        cfg.iterations = iterations;
        cfg.batch_size = batch_size;
        cfg.lr = lr;
        cfg.seed = seed;
        cfg.out_dir = out_dir;
        if (arch != "toy" && arch != "vgg") throw Error(ErrorCode::InvalidConfig, "arch must be toy or vgg");
        cfg.net = arch == "toy" ? NetConfig::toy(ds.manifest.config.patch_size) : NetConfig::vgg_default();
        cfg.net.input_size = ds.manifest.config.patch_size;
        const TrainReport r = train_loop(cfg, ds);
        py::dict out;
        out["losses"] = r.losses;
        out["checkpoint"] = r.checkpoint;
        out["log"] = r.log_csv;
        out["skipped_samples"] = r.skipped_samples;
        if (!r.eval.rmse.empty()) {
          out["test_mean_rmse"] = r.eval.mean;
          out["baseline_mean_rmse"] = r.baseline.mean;
        }
        return out;
      },
      py::arg("dataset"), py::arg("mode") = "unsupervised", py::arg("iterations") = 1000, py::arg("batch_size") = 128,
      py::arg("lr") = 0.0, py::arg("seed") = 0, py::arg("out_dir") = "run", py::arg("arch") = "toy",
      "Runs the training loop; lr <= 0 picks the mode's default.");

  m.def(
      "predict",
      [](const std::filesystem::path& checkpoint, const Array& patch_a, const Array& patch_b) {
        CheckpointMeta meta;
        RegressionNet<float> net = load_checkpoint<float>(checkpoint, &meta);
        Sample s;
        s.patch_a = to_image(patch_a);
        s.patch_b = to_image(patch_b);
        return Mat42(net_estimator(net, meta.mean, meta.std)(s).delta.d);
      },
      py::arg("checkpoint"), py::arg("patch_a"), py::arg("patch_b"), "Corner offsets predicted by a saved network.");
}

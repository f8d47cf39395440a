// Python bindings. Depth maps are 2-D float32 arrays (H, W); guidance images
// are channel-first (3, H, W). Values are normalized to [0, 1].

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pagsr/data.hpp"
#include "pagsr/eval.hpp"
#include "pagsr/image_io.hpp"
#include "pagsr/resample.hpp"
#include "pagsr/training.hpp"
#include "pagsr/weights_io.hpp"

namespace py = pybind11;
using namespace pagsr;

namespace {

using FloatArray = py::array_t<float, py::array::c_style | py::array::forcecast>;

Tensor32 from_depth(const FloatArray& a) {
  if (a.ndim() != 2) throw ShapeError("depth must be a 2-D array (H, W)");
  const Shape s{1, 1, static_cast<int>(a.shape(0)), static_cast<int>(a.shape(1))};
  return Tensor32(s, std::vector<float>(a.data(), a.data() + a.size()));
}

Tensor32 from_rgb(const FloatArray& a) {
  if (a.ndim() != 3 || a.shape(0) != 3) throw ShapeError("rgb must be a (3, H, W) array");
  const Shape s{1, 3, static_cast<int>(a.shape(1)), static_cast<int>(a.shape(2))};
  return Tensor32(s, std::vector<float>(a.data(), a.data() + a.size()));
}

py::array_t<float> to_array(const Tensor32& t) {
  const Shape& s = t.shape();
  std::vector<py::ssize_t> dims;
  if (s.c == 1) {
    dims = {s.h, s.w};
  } else {
    dims = {s.c, s.h, s.w};
  }
  py::array_t<float> out(dims);
  std::copy(t.raw(), t.raw() + t.numel(), out.mutable_data());
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Guided depth super-resolution core";

  py::register_exception<Error>(m, "PagsrError", PyExc_RuntimeError);

  py::class_<ModelConfig>(m, "ModelConfig")
      .def(py::init([](int l, int c, int d, int g, int cg, std::uint64_t seed, bool residual) {
             ModelConfig cfg{l, c, d, g, cg, seed, residual};
             cfg.validate();
             return cfg;
           }),
           py::arg("upsample_exponent") = 1, py::arg("base_channels") = 64,
           py::arg("rdb_layers") = 4, py::arg("growth_rate") = 32,
           py::arg("guidance_channels") = 64, py::arg("seed") = 0,
           py::arg("global_residual") = true)
      .def_readwrite("upsample_exponent", &ModelConfig::upsample_exponent)
      .def_readwrite("base_channels", &ModelConfig::base_channels)
      .def_readwrite("rdb_layers", &ModelConfig::rdb_layers)
      .def_readwrite("growth_rate", &ModelConfig::growth_rate)
      .def_readwrite("guidance_channels", &ModelConfig::guidance_channels)
      .def_readwrite("seed", &ModelConfig::seed)
      .def_readwrite("global_residual", &ModelConfig::global_residual)
      .def_property_readonly("factor", &ModelConfig::factor)
      .def("__repr__", [](const ModelConfig& c) { return "ModelConfig(" + c.str() + ")"; });

  py::class_<ModelWeights<float>>(m, "Weights")
      .def_static("init", &init_weights<float>, py::arg("config"))
      .def_static("zeros", &zero_weights<float>, py::arg("config"))
      .def_static("load", py::overload_cast<const std::filesystem::path&>(&load_weights),
                  py::arg("path"))
      .def("save", [](const ModelWeights<float>& w, const std::filesystem::path& p) {
        save_weights(w, p);
      })
      .def_property_readonly("config", [](const ModelWeights<float>& w) { return w.config; })
      .def("names", [](const ModelWeights<float>& w) {
        std::vector<std::string> out;
        for (const auto& e : w.params.entries()) out.push_back(e.name);
        return out;
      })
      .def("get", [](const ModelWeights<float>& w, const std::string& name) {
        const Tensor32& t = w.params.get(name);
        const auto d = t.shape().dims();
        py::array_t<float> out(std::vector<py::ssize_t>(d.begin(), d.end()));
        std::copy(t.raw(), t.raw() + t.numel(), out.mutable_data());
        return out;
      })
      .def("to_bytes", [](const ModelWeights<float>& w) {
        const auto bytes = encode_weights(w);
        return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
      })
      .def_static("from_bytes", [](const py::bytes& b) {
        const std::string s = b;
        return decode_weights(std::vector<unsigned char>(s.begin(), s.end()));
      })
      .def("__len__", [](const ModelWeights<float>& w) { return w.params.size(); });

  m.def("parameter_count", &parameter_count, py::arg("config"));

  m.def("bicubic_resample",
        [](const FloatArray& depth, int h, int w) { return to_array(bicubic_resample(from_depth(depth), h, w)); },
        py::arg("depth"), py::arg("height"), py::arg("width"));

  m.def("degrade",
        [](const FloatArray& depth, int factor, double sigma, std::uint64_t seed) {
          DegradationSpec spec;
          spec.factor = factor;
          spec.noise_sigma = sigma;
          return to_array(degrade(from_depth(depth), spec, seed));
        },
        py::arg("depth"), py::arg("factor"), py::arg("sigma") = 0.0, py::arg("seed") = 0);

  m.def("rmse", [](const FloatArray& a, const FloatArray& b) { return rmse(from_depth(a), from_depth(b)); });
  m.def("masked_rmse",
        [](const FloatArray& a, const FloatArray& b) { return masked_rmse(from_depth(a), from_depth(b)); });
  m.def("patch_count", &patch_count, py::arg("height"), py::arg("width"), py::arg("size") = 256,
        py::arg("stride") = 64);

  m.def("synthetic_scene",
        [](int h, int w, std::uint64_t seed) {
          const auto s = synthetic_scene(h, w, seed);
          return py::make_tuple(to_array(s.depth), to_array(s.rgb));
        },
        py::arg("height"), py::arg("width"), py::arg("seed") = 0);

  m.def("super_resolve",
        [](const ModelWeights<float>& w, const FloatArray& depth_lr, const FloatArray& rgb) {
          return to_array(super_resolve(w, from_depth(depth_lr), from_rgb(rgb)));
        },
        py::arg("weights"), py::arg("depth_lr"), py::arg("rgb"));

  m.def("load_image", [](const std::filesystem::path& p) {
    const auto img = load_image(p);
    return py::make_tuple(to_array(img.pixels), img.bit_depth);
  });
  m.def("save_image",
        [](const FloatArray& a, const std::filesystem::path& p, int bit_depth) {
          save_image(a.ndim() == 2 ? from_depth(a) : from_rgb(a), p, bit_depth);
        },
        py::arg("image"), py::arg("path"), py::arg("bit_depth") = 16);

  m.def("train",
        [](ModelWeights<float>& w, const std::vector<std::pair<FloatArray, FloatArray>>& pairs,
           int batch_size, double learning_rate, int epochs, int max_steps, std::uint64_t seed,
           double noise_sigma) {
          DegradationSpec spec;
          spec.factor = w.config.factor();
          spec.noise_sigma = noise_sigma;
          std::vector<RgbdSample> samples;
          std::uint64_t sample_seed = seed;
          for (const auto& [depth, rgb] : pairs) {
            samples.push_back(make_sample(from_depth(depth), from_rgb(rgb), spec, sample_seed++,
                                          "python" + std::to_string(samples.size())));
          }
          TrainConfig cfg;
          cfg.batch_size = batch_size;
          cfg.learning_rate = learning_rate;
          cfg.epochs = epochs;
          cfg.max_steps = max_steps;
          cfg.scale = spec.factor;
          cfg.seed = seed;
          std::vector<LossRecord> history;
          {
            py::gil_scoped_release release;
            history = train(w, samples, cfg);
          }
          std::vector<double> losses;
          for (const auto& r : history) losses.push_back(r.loss);
          return losses;
        },
        py::arg("weights"), py::arg("samples"), py::arg("batch_size") = 8,
        py::arg("learning_rate") = 1e-4, py::arg("epochs") = 1, py::arg("max_steps") = 0,
        py::arg("seed") = 0, py::arg("noise_sigma") = 0.0,
        "Trains in place on (depth_hr, rgb) pairs and returns the per-step loss.");
}

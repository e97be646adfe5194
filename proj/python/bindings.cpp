#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <complex>
#include <optional>
#include <string>
#include <vector>

#include "kstrip/data.hpp"
#include "kstrip/error.hpp"
#include "kstrip/evaluation.hpp"
#include "kstrip/layers.hpp"
#include "kstrip/model.hpp"
#include "kstrip/runtime.hpp"
#include "kstrip/training.hpp"

namespace py = pybind11;
using namespace kstrip;

namespace {

using CArray = py::array_t<std::complex<double>, py::array::c_style | py::array::forcecast>;
using BArray = py::array_t<bool, py::array::c_style | py::array::forcecast>;

ComplexTensor to_tensor(const CArray& a) {
  Shape shape(a.shape(), a.shape() + a.ndim());
  ComplexTensor t(shape);
  const std::complex<double>* p = a.data();
  for (std::size_t i = 0; i < t.size(); ++i) t.set(i, p[i]);
  return t;
}

CArray to_array(const ComplexTensor& t) {
  std::vector<py::ssize_t> shape(t.shape().begin(), t.shape().end());
  CArray a(shape);
  std::complex<double>* p = a.mutable_data();
  for (std::size_t i = 0; i < t.size(); ++i) p[i] = t.at(i);
  return a;
}

BinaryMask to_mask(const BArray& a) {
  if (a.ndim() != 2) throw DimensionError("mask must be two-dimensional");
  BinaryMask m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
  for (std::size_t i = 0; i < m.size(); ++i) m.bits[i] = a.data()[i] ? 1 : 0;
  return m;
}

BArray to_bool_array(const BinaryMask& m) {
  BArray a({static_cast<py::ssize_t>(m.height), static_cast<py::ssize_t>(m.width)});
  for (std::size_t i = 0; i < m.size(); ++i) a.mutable_data()[i] = m.bits[i] != 0;
  return a;
}

py::dict metrics_dict(const SegMetrics& m) {
  py::dict d;
  d["n"] = m.n;
  d["dice"] = m.dice;
  d["dhd"] = m.dhd;
  d["accuracy"] = m.accuracy;
  d["sensitivity"] = m.sensitivity;
  d["specificity"] = m.specificity;
  d["phase_error"] = m.phase_error;
  d["failures"] = m.failures;
  d["mid_head_failures"] = m.mid_head_failures;
  return d;
}

std::vector<std::size_t> split_of(const std::vector<SliceSample>& samples, const std::string& which,
                                  std::uint64_t seed) {
  if (which == "all") {
    std::vector<std::size_t> all(samples.size());
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return all;
  }
  const PatientSplit s = split_patients(patient_ids(samples), seed);
  if (which == "train") return indices_for(samples, s.train);
  if (which == "val") return indices_for(samples, s.val);
  if (which == "test") return indices_for(samples, s.test);
  throw ConfigError("split must be one of train, val, test, all");
}

}  // namespace

PYBIND11_MODULE(_kstrip, m) {
  m.doc() = "Complex-valued k-space skull stripping";
  tune_allocator();

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<DimensionError>(m, "DimensionError", base.ptr());
  py::register_exception<UnsupportedSizeError>(m, "UnsupportedSizeError", base.ptr());
  py::register_exception<ContractError>(m, "ContractError", base.ptr());
  py::register_exception<NumericError>(m, "NumericError", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<IntegrityError>(m, "IntegrityError", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());

  m.def("fft2", [](const CArray& a) { return to_array(fft2(to_tensor(a))); });
  m.def("ifft2", [](const CArray& a) { return to_array(ifft2(to_tensor(a))); });
  m.def("fftshift", [](const CArray& a) { return to_array(fftshift(to_tensor(a))); });
  m.def("ifftshift", [](const CArray& a) { return to_array(ifftshift(to_tensor(a))); });
  m.def("to_image", [](const CArray& k) { return to_array(to_image(to_tensor(k))); },
        "ifft2(ifftshift(k)) of centered k-space");
  m.def("binarize", [](const CArray& image, double factor) { return to_bool_array(binarize(to_tensor(image), factor)); },
        py::arg("image"), py::arg("factor") = 1.7);
  m.def("dice", [](const BArray& x, const BArray& y) { return dice(to_mask(x), to_mask(y)); });
  m.def("directed_hausdorff", [](const BArray& x, const BArray& y) { return directed_hausdorff(to_mask(x), to_mask(y)); });
  m.def("confusion", [](const BArray& pred, const BArray& truth) {
    const Confusion c = confusion(to_mask(pred), to_mask(truth));
    py::dict d;
    d["tp"] = c.tp;
    d["fp"] = c.fp;
    d["tn"] = c.tn;
    d["fn"] = c.fn;
    d["accuracy"] = c.accuracy();
    d["sensitivity"] = c.sensitivity();
    d["specificity"] = c.specificity();
    return d;
  });
  m.def("exclusion_threshold", &exclusion_threshold, py::arg("height"), py::arg("width"));

  m.def("set_conv_precision", [](const std::string& p) { set_conv_precision(parse_conv_precision(p)); });
  m.def("conv_precision", [] { return to_string(conv_precision()); });

  py::class_<SliceSample>(m, "Sample")
      .def_property_readonly("k_in", [](const SliceSample& s) { return to_array(s.k_in); })
      .def_property_readonly("k_target", [](const SliceSample& s) { return to_array(s.k_target); })
      .def_property_readonly("brain_mask", [](const SliceSample& s) { return to_bool_array(s.brain_mask); })
      .def_readonly("patient_id", &SliceSample::patient_id)
      .def_readonly("slice_idx", &SliceSample::slice_idx)
      .def_readonly("brain_pixels", &SliceSample::brain_pixels)
      .def("__repr__", [](const SliceSample& s) {
        return "<Sample patient " + std::to_string(s.patient_id) + " slice " + std::to_string(s.slice_idx) + ">";
      });

  m.def(
      "generate",
      [](std::uint32_t patients, std::uint32_t slices, std::size_t size, std::uint64_t seed) {
        PhantomSpec spec;
        spec.height = spec.width = size;
        spec.seed = seed;
        spec.validate();
        std::vector<SliceSample> out;
        for (std::uint32_t p = 0; p < patients; ++p) {
          auto v = gen_patient(spec, p, slices);
          out.insert(out.end(), std::make_move_iterator(v.begin()), std::make_move_iterator(v.end()));
        }
        return out;
      },
      py::arg("patients"), py::arg("slices"), py::arg("size") = 64, py::arg("seed") = 0);
  m.def("read_dataset", &read_dataset, py::arg("path"));
  m.def("write_dataset", &write_dataset, py::arg("samples"), py::arg("path"));
  m.def("split", &split_of, py::arg("samples"), py::arg("which"), py::arg("seed") = 0,
        "Sample indices of a patient-wise split");

  py::class_<KStripModel>(m, "Model")
      .def_static(
          "build",
          [](std::size_t size, std::size_t base, std::size_t levels, std::size_t blocks, double dropout,
             std::uint64_t seed) {
            KStripConfig c;
            c.height = c.width = size;
            c.base_channels = base;
            c.levels = levels;
            c.blocks_per_level = c.decoder_blocks = blocks;
            c.bottleneck_channels = base << levels;
            c.dropout_p = dropout;
            c.validate();
            return KStripModel::build(c, seed);
          },
          py::arg("size") = 64, py::arg("base") = 8, py::arg("levels") = 2, py::arg("blocks") = 2,
          py::arg("dropout") = 0.05, py::arg("seed") = 0)
      .def_static("load", &load, py::arg("path"))
      .def("save", [](KStripModel& model, const std::string& path) { save(model, path); })
      .def("infer",
           [](KStripModel& model, const CArray& k) {
             const ComplexTensor t = to_tensor(k);
             const Shape& s = t.shape();
             if (s.size() == 2 || s.size() == 3) {
               return to_array(model.infer(t.reshaped({1, 1, s[s.size() - 2], s.back()})).reshaped(s));
             }
             return to_array(model.infer(t));
           },
           "Prediction for centered k-space shaped [H, W], [1, H, W] or [B, 1, H, W]")
      .def_property_readonly("parameter_count", &KStripModel::parameter_count)
      .def_property_readonly("config", [](const KStripModel& model) {
        const KStripConfig& c = model.config();
        py::dict d;
        d["height"] = c.height;
        d["width"] = c.width;
        d["base_channels"] = c.base_channels;
        d["levels"] = c.levels;
        d["blocks_per_level"] = c.blocks_per_level;
        d["decoder_blocks"] = c.decoder_blocks;
        d["bottleneck_channels"] = c.bottleneck_channels;
        d["dropout"] = c.dropout_p;
        return d;
      });

  m.def(
      "train",
      [](KStripModel& model, const std::vector<SliceSample>& samples, std::size_t epochs, std::size_t batch_size,
         double lr, std::size_t lr_period, std::uint64_t seed, std::uint64_t split_seed, bool augment,
         const std::string& precision, const std::string& out_dir) {
        TrainConfig tc;
        tc.epochs = epochs;
        tc.batch_size = batch_size;
        tc.lr = lr;
        tc.lr_period = lr_period;
        tc.seed = seed;
        tc.augment = augment;
        tc.conv_precision = parse_conv_precision(precision);
        tc.out_dir = out_dir;
        tc.meta["split_seed"] = std::to_string(split_seed);
        const TrainData data{&samples, split_of(samples, "train", split_seed), split_of(samples, "val", split_seed)};
        TrainResult r;
        {
          py::gil_scoped_release release;
          r = train(model, data, tc);
        }
        py::list log;
        for (const EpochRecord& e : r.log) {
          py::dict d;
          d["epoch"] = e.epoch;
          d["split"] = e.split;
          d["loss"] = e.loss;
          d["lr"] = e.lr;
          d["seconds"] = e.seconds;
          d["steps"] = e.steps;
          log.append(d);
        }
        return log;
      },
      py::arg("model"), py::arg("samples"), py::arg("epochs") = 50, py::arg("batch_size") = 16, py::arg("lr") = 1e-3,
      py::arg("lr_period") = 25, py::arg("seed") = 0, py::arg("split_seed") = 0, py::arg("augment") = true,
      py::arg("conv_precision") = "f64", py::arg("out_dir") = "");

  m.def(
      "evaluate",
      [](KStripModel* model, const std::vector<SliceSample>& samples, const std::string& which,
         std::uint64_t split_seed, double threshold) {
        EvalOptions eo;
        eo.threshold_factor = threshold;
        const Predictor predict = model != nullptr ? model_predictor(*model) : oracle_predictor();
        const EvalReport r = evaluate(predict, samples, split_of(samples, which, split_seed), eo);
        return metrics_dict(r.summary);
      },
      py::arg("model"), py::arg("samples"), py::arg("split") = "test", py::arg("split_seed") = 0,
      py::arg("threshold") = 1.7, "Aggregate metrics; model=None scores the target k-space itself");
}

// Copyright 2026 The rtfm Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "cli.hpp"
#include "rtfm/dro.hpp"
#include "rtfm/loop.hpp"
#include "rtfm/metrics.hpp"
#include "rtfm/scm_generator.hpp"
#include "rtfm/toy_model.hpp"

namespace py = pybind11;
using namespace rtfm;
using nlohmann::json;

namespace {

std::vector<TabularDataset> parse_batch(const std::vector<std::string>& payloads) {
  std::vector<TabularDataset> out;
  out.reserve(payloads.size());
  for (const auto& p : payloads) out.push_back(from_payload(json::parse(p)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_rtfm, m) {
  m.attr("__version__") = RTFM_VERSION;

  static py::exception<Error> error(m, "RtfmError", PyExc_RuntimeError);
  py::register_exception_translator([](std::exception_ptr p) {
    try {
      if (p) std::rethrow_exception(p);
    } catch (const InvalidArgument& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    } catch (const Error& e) {
      error((e.code() + ": " + e.what()).c_str());
    } catch (const json::exception& e) {
      PyErr_SetString(PyExc_ValueError, e.what());
    }
  });

  m.def("default_theta", [] { return canonical_dump(to_json(ThetaParams{})); });
  m.def("theta_grid_size", &theta_grid_size);

  m.def(
      "generate_dataset",
      [](const std::string& theta, std::uint64_t seed, int n_train, int n_test) {
        return canonical_dump(to_payload(generate_dataset(theta_from_json(json::parse(theta)), seed, n_train, n_test)));
      },
      py::arg("theta"), py::arg("seed"), py::arg("n_train"), py::arg("n_test"));
  m.def("dataset_hash", [](const std::string& payload) { return dataset_hash(from_payload(json::parse(payload))); });

  m.def(
      "dro_weights",
      [](std::vector<double> gaps, double c_frac) {
        const std::size_t n = gaps.size();
        const DroWeights w = build_dro_weights(std::vector<ThetaParams>(n), std::move(gaps), c_frac);
        py::dict d;
        d["eta"] = w.eta;
        d["weights"] = w.weights;
        d["entropy"] = w.entropy;
        d["h_min"] = w.h_min;
        d["objective"] = w.weighted_objective();
        return d;
      },
      py::arg("gaps"), py::arg("c_frac") = 0.5);

  m.def(
      "auc_ovo",
      [](const Eigen::MatrixXd& probs, const std::vector<int>& labels) {
        return auc_ovo(ClassProbMatrix::from_raw(probs), labels);
      },
      py::arg("probs"), py::arg("labels"));
  m.def(
      "report",
      [](const std::string& csv, const std::string& reference) {
        return canonical_dump(report_summary(ScoreTable::from_csv(csv), reference));
      },
      py::arg("csv"), py::arg("reference") = "RTFM");

  py::class_<ToyModel>(m, "ToyModel")
      .def(py::init([](double log_bandwidth, double log_smoothing, double log_temperature) {
             return ToyModel(ToyWeights{log_bandwidth, log_smoothing, log_temperature});
           }),
           py::arg("log_bandwidth") = 0.0, py::arg("log_smoothing") = 0.0, py::arg("log_temperature") = 0.0)
      .def_property_readonly("weights", [](const ToyModel& t) { return t.weights().as_array(); })
      .def_property_readonly("step", &ToyModel::step)
      .def("predict",
           [](const ToyModel& t, const std::string& payload) {
             return Eigen::MatrixXd(t.predict(from_payload(json::parse(payload))).probs());
           })
      .def("train_step",
           [](ToyModel& t, const std::vector<std::string>& payloads, double lr) {
             const auto batch = parse_batch(payloads);
             return t.train_step(batch, lr);
           },
           py::arg("payloads"), py::arg("lr") = kToyLearningRate)
      .def("fingerprint", &ToyModel::fingerprint);

  m.def(
      "run_cli",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = cli::dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"));
}

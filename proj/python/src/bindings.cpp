#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <string>
#include <vector>

#include "mixlab/config.hpp"
#include "mixlab/errors.hpp"
#include "mixlab/metrics.hpp"
#include "mixlab/runner.hpp"
#include "mixlab/stats.hpp"
#include "mixlab/theory.hpp"

namespace py = pybind11;
using namespace mixlab;
using runner::Json;

namespace {

// Configs and records cross the boundary as JSON text; the Python layer
// converts to and from dicts.
runner::RunConfig parse_config(const std::string& text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const Json::parse_error& e) {
    throw FormatError(std::string("config is not valid JSON: ") + e.what());
  }
  return runner::RunConfig::from_json(j);
}

}  // namespace

PYBIND11_MODULE(_mixlab, m) {
  m.doc() = "mixlab native core";

  auto base = py::register_exception<Error>(m, "MixlabError", PyExc_RuntimeError);
  py::register_exception<InvalidArgument>(m, "InvalidArgument", base.ptr());
  py::register_exception<FormatError>(m, "FormatError", base.ptr());
  py::register_exception<DegenerateInput>(m, "DegenerateInput", base.ptr());

  m.def("config_hash", [](const std::string& cfg) { return parse_config(cfg).hash(); });
  m.def("normalize_config", [](const std::string& cfg) {
    const auto c = parse_config(cfg);
    c.validate();
    return c.to_json().dump();
  });

  m.def(
      "run",
      [](const std::string& cfg, bool write_files) {
        const auto c = parse_config(cfg);
        runner::RunOptions o;
        o.write_files = write_files;
        runner::RunRecord r;
        {
          py::gil_scoped_release release;
          r = runner::run(c, o);
        }
        return runner::record_to_json(r).dump();
      },
      py::arg("config"), py::arg("write_files") = false);

  m.def("metrics_csv", [](const std::string& record) {
    return runner::metrics_csv(runner::record_from_json(Json::parse(record)));
  });

  m.def("sweep_grad_rate", [](const std::string& cfg, const std::string& grid) {
    const auto c = parse_config(cfg);
    auto g = runner::SweepGrid::from_json(Json::parse(grid));
    if (g.seeds.empty()) g.seeds = {c.seed};
    std::vector<runner::SweepRow> rows;
    {
      py::gil_scoped_release release;
      rows = runner::sweep_grad_rate(g, c);
    }
    return runner::sweep_csv(rows);
  });

  m.def("vanilla_grad_early", [](const Vector& xp, const Vector& xn) { return theory::vanilla_grad_early({xp, xn}); });
  m.def("mix_grad_early", [](const Vector& xp, const Vector& xn) { return theory::mix_grad_early({xp, xn}); });
  m.def("total_grad_early", [](const Vector& xp, const Vector& xn) { return theory::total_grad_early({xp, xn}); });

  m.def(
      "interference_sweep",
      [](std::size_t dim, double separation, double sigma, const std::vector<std::size_t>& ns,
         const std::vector<std::uint64_t>& seeds, std::uint64_t direction_seed) {
        const auto est =
            theory::interference_sweep(theory::two_gaussian_pairs(dim, separation, sigma, direction_seed), ns, seeds);
        py::dict out;
        out["n_values"] = est.n_values;
        out["mean_epsilon"] = est.mean_epsilon;
        out["fitted_slope"] = est.fitted_slope;
        return out;
      },
      py::arg("dim"), py::arg("separation"), py::arg("sigma"), py::arg("n_values"), py::arg("seeds"),
      py::arg("direction_seed") = 0);

  m.def("relative_fluctuation", &theory::relative_fluctuation);
  m.def("equivalence_lambda", [](double f_loss, double f_plus, double f_minus) {
    const auto s = theory::equivalence_lambda(f_loss, f_plus, f_minus);
    py::dict out;
    out["lambda_star"] = s.lambda_star;
    out["M"] = s.M;
    out["delta"] = s.delta;
    return out;
  });
  m.def("mixed_score", &theory::mixed_score);
  m.def("loss_at_lambda", &theory::loss_at_lambda);
  m.def("benr_theoretical", [](const Vector& x1, const Vector& x2, const Vector& x3) {
    const auto b = theory::benr_theoretical(x1, x2, x3);
    return py::make_tuple(b.vanilla, b.mix);
  });

  m.def("benr", [](const std::vector<Vector>& updates) { return metrics::benr(updates); });
  m.def("atd", [](const Vector& a, const Vector& b) { return metrics::atd(a, b); });
  m.def("grad_rate", [](const Vector& mix, const Vector& van) { return metrics::grad_rate(mix, van); });

  m.def("welch_t_one_tailed", [](const std::vector<double>& a, const std::vector<double>& b) {
    const auto r = stats::welch_t_one_tailed(a, b);
    py::dict out;
    out["t"] = r.t;
    out["p"] = r.p;
    out["dof"] = r.dof;
    return out;
  });
  m.def("spearman", [](const std::vector<double>& x, const std::vector<double>& y) { return stats::spearman(x, y); });
}

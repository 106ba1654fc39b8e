#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "ldtv/binomial.hpp"
#include "ldtv/charfun.hpp"
#include "ldtv/core/error.hpp"
#include "ldtv/experiment.hpp"
#include "ldtv/ldlr.hpp"
#include "ldtv/orthopoly.hpp"
#include "ldtv/subgraph.hpp"

namespace py = pybind11;
using namespace ldtv;

namespace {

py::dict bound_dict(const CertifiedBound& b, double tv) {
  py::dict d;
  d["tv_bound"] = b.tv_bound;
  d["exact_tv"] = tv;
  d["chi2_noisy_truncated"] = b.chi2_noisy_truncated;
  d["mass_dropped"] = b.components.mass_dropped;
  d["degree_used"] = b.degree_used;
  d["tau"] = b.tau;
  d["T"] = b.T;
  return d;
}

}  // namespace

PYBIND11_MODULE(_ldtv, m) {
  m.doc() = "Low-degree advantage and total-variation tools";
  m.attr("__version__") = tool_version();

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<BudgetExceeded>(m, "BudgetExceeded", PyExc_RuntimeError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  m.def(
      "hermite_values",
      [](double x, int max_degree) {
        std::vector<double> out(std::size_t(max_degree) + 1);
        hermite_values(x, out);
        return out;
      },
      py::arg("x"), py::arg("max_degree"), "h_0(x) .. h_k(x), normalized probabilists' Hermite");

  m.def(
      "krawtchouk_values",
      [](int n, double gamma, int w, int max_degree) {
        KrawtchoukBasis basis(n, gamma, max_degree);
        std::vector<long double> v(std::size_t(max_degree) + 1);
        basis.support_values(w, v);
        return std::vector<double>(v.begin(), v.end());
      },
      py::arg("n"), py::arg("gamma"), py::arg("w"), py::arg("max_degree"),
      "Kr_0 .. Kr_k at the support point of weight w");

  m.def(
      "biased_product_bound",
      [](int n, double gamma, double eta, double eps, int D) {
        KrawtchoukBasis basis(n, gamma, D);
        const auto pi = WeightLaw::binomial(n, gamma, gamma + eta);
        const auto b = certified_tv_bound(pi, eps, D, basis);
        const double tv = exact_tv(make_weight_law(n, gamma), noisy_weight_law(pi, eps, gamma));
        auto d = bound_dict(b, tv);
        d["chi2_D"] = chi2_sym_boolean(pi, basis, D).chi2;
        return d;
      },
      py::arg("n"), py::arg("gamma"), py::arg("eta"), py::arg("eps"), py::arg("D"),
      "certified TV bound and exact TV for i.i.d. Ber(gamma + eta) coordinates");

  m.def(
      "weight_law_bound",
      [](std::vector<double> pmf, double gamma, double eps, int D) {
        const int n = int(pmf.size()) - 1;
        const auto pi = WeightLaw::from_pmf(n, gamma, std::move(pmf));
        KrawtchoukBasis basis(n, gamma, D);
        const auto b = certified_tv_bound(pi, eps, D, basis);
        return bound_dict(b, exact_tv(make_weight_law(n, gamma), noisy_weight_law(pi, eps, gamma)));
      },
      py::arg("pmf"), py::arg("gamma"), py::arg("eps"), py::arg("D"),
      "certified TV bound for a symmetric law given by its weight pmf on {0..n}");

  m.def(
      "poly_cf",
      [](std::vector<double> coeffs, int nodes) { return poly_cf(HermitePoly{std::move(coeffs)}, nodes).value; },
      py::arg("coeffs"), py::arg("nodes") = 400, "E exp(i p(g)) for p = sum_j c_j h_j");

  m.def(
      "chi_theta",
      [](const Eigen::MatrixXd& M, const std::string& pattern) { return chi_theta(M, named_pattern(pattern)); },
      py::arg("M"), py::arg("pattern"), "normalized signed count of a named pattern");
  m.def(
      "chi_theta_edges",
      [](const Eigen::MatrixXd& M, std::vector<std::pair<int, int>> edges) {
        return chi_theta(M, make_pattern(std::move(edges)));
      },
      py::arg("M"), py::arg("edges"), "normalized signed count of a pattern given by its edge list");

  m.def("experiment_kinds", &experiment_kinds);
  m.def("describe_schema", &describe_schema, py::arg("kind"));
  m.def(
      "run_experiment",
      [](const std::string& config_text) {
        const auto rec = run_experiment(normalize_config(parse_config(config_text)));
        return py::module_::import("json").attr("loads")(record_json(rec));
      },
      py::arg("config"), "run a 'key = value' config and return the record as a dict");
  m.def(
      "run_experiment_csv",
      [](const std::string& config_text) {
        return record_csv(run_experiment(normalize_config(parse_config(config_text))));
      },
      py::arg("config"));
}

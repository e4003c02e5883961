#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "latmut/ancestry.hpp"
#include "latmut/asg.hpp"
#include "latmut/diffusion.hpp"
#include "latmut/moran.hpp"
#include "latmut/specfun.hpp"
#include "latmut/stationary.hpp"

namespace py = pybind11;
using namespace latmut;

namespace {

ModelParams make_params(double theta1, double theta2, double beta) {
  ModelParams p{theta1, theta2, beta};
  p.validate();
  return p;
}

}  // namespace

PYBIND11_MODULE(_latmut, m) {
  m.doc() = "Stationary sampling formulas, conditional ancestral processes and "
            "ancestral-selection-graph rates for a two-allele locus under selection";

  py::class_<Philox>(m, "Philox")
      .def(py::init<std::uint64_t, std::uint64_t>(), py::arg("seed"), py::arg("stream"))
      .def("uniform", &Philox::uniform)
      .def("normal", &Philox::normal)
      .def("gamma", &Philox::gamma, py::arg("shape"), py::arg("rate") = 1.0)
      .def("poisson", &Philox::poisson, py::arg("mean"));

  m.def("hyp1f1", [](double a, double b, double z) {
    LogValue v = hyp1f1({a, b, z});
    return std::make_pair(v.log_magnitude, v.sign);
  }, py::arg("a"), py::arg("b"), py::arg("z"),
     "log-magnitude and sign of 1F1(a;b;z)");

  m.def("log_norm_const", [](double t1, double t2, double beta) {
    return log_norm_const(make_params(t1, t2, beta));
  });
  m.def("log_stationary_pdf", [](double x, double t1, double t2, double beta) {
    return log_stationary_pdf(x, make_params(t1, t2, beta));
  });
  m.def("log_sampling_prob", [](long n1, long n2, double t1, double t2, double beta) {
    return log_sampling_prob({n1, n2}, make_params(t1, t2, beta));
  });
  m.def("log_posterior_pdf",
        [](double x, long n1, long n2, double t1, double t2, double beta) {
          return log_posterior_pdf(x, {n1, n2}, make_params(t1, t2, beta));
        });
  m.def("posterior_sample",
        [](long n1, long n2, double t1, double t2, double beta, std::uint64_t seed,
           long draws) {
          Philox rng(seed, 0);
          std::vector<double> out;
          out.reserve(static_cast<std::size_t>(draws));
          ModelParams p = make_params(t1, t2, beta);
          for (long i = 0; i < draws; ++i) out.push_back(posterior_sample({n1, n2}, p, rng));
          return out;
        },
        py::arg("n1"), py::arg("n2"), py::arg("theta1"), py::arg("theta2"), py::arg("beta"),
        py::arg("seed") = 1, py::arg("draws") = 1);

  m.def("ewens_alleles_pmf", [](int n, double theta) {
    return ewens_alleles_pmf(n, theta).pmf;
  }, py::arg("n"), py::arg("theta"), "P(K = k) for k = 1..n");

  m.def("negbinom_pmf", &negbinom_pmf, py::arg("ell"), py::arg("s"), py::arg("theta1"));
  m.def("mixed_sampling_prob", &mixed_sampling_prob, py::arg("n1"), py::arg("alpha"),
        py::arg("s"), py::arg("theta1"));
  m.def("moran_step_probs", [](long ell, long N, double s, double u1, double u2) {
    return moran_step_probs(ell, {N, s, u1, u2});
  });

  m.def("simulate_cir",
        [](const std::string& kind, double t1, double t2, double bt, double z0, double dt,
           double horizon, std::uint64_t seed, bool exact) {
          CirKind k = kind == "q_zero" ? CirKind::QZero
                      : kind == "z_gen" ? CirKind::ZGen
                                        : CirKind::QTilde;
          Philox rng(seed, 0);
          return simulate_cir(k, make_params(t1, t2, 0.0), {bt}, z0, dt, horizon, rng,
                              exact ? CirScheme::ExactTransition
                                    : CirScheme::FullTruncationEuler);
        },
        py::arg("kind"), py::arg("theta1"), py::arg("theta2"), py::arg("beta_tilde"),
        py::arg("z0"), py::arg("dt"), py::arg("horizon"), py::arg("seed") = 1,
        py::arg("exact") = false);

  m.def("log_qo", [](long r1, long r2, long v1, long v2, double theta, double pi1,
                     double beta) {
    return log_qo(r1, r2, v1, v2, {theta, pi1, 1.0 - pi1}, beta);
  });

  m.def("reduced_rates",
        [](long r1, long r2, long v1, long v2, double theta, double pi1, double beta) {
          RateTable tab = reduced_rates({r1, r2, v1, v2}, {theta, pi1, 1.0 - pi1}, beta);
          py::dict out;
          for (const auto& e : tab.entries) out[e.label.c_str()] = e.rate;
          out["null"] = tab.null_rate;
          return out;
        });

  m.def("simulate_conditional_ancestry_k1",
        [](long n1, long n2, double t1, double t2, double beta, double dt,
           std::uint64_t seed, long replicates) {
          ModelParams p = make_params(t1, t2, beta);
          SampleCounts counts{n1, n2};
          std::vector<int> out;
          WfOptions wf;
          wf.dt = dt;
          for (long r = 0; r < replicates; ++r) {
            Philox rng(seed, static_cast<std::uint64_t>(r));
            ReversedStationaryPathSource path(counts, p, wf, rng);
            AncestryEventLog log = simulate_conditional_ancestry(counts, p, path, rng,
                                                                 TrackMode::Type1Only);
            out.push_back(latent_counts(log).first);
          }
          return out;
        },
        py::arg("n1"), py::arg("n2"), py::arg("theta1"), py::arg("theta2"), py::arg("beta"),
        py::arg("dt") = 1e-3, py::arg("seed") = 1, py::arg("replicates") = 1);
}

// Python bindings for the main operations: distortion preprocessing, the
// rate-distortion solver, success-probability estimates and oracles, the
// block codec, and the LZ extension.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "sflab/codec.hpp"
#include "sflab/core_types.hpp"
#include "sflab/exact_oracle.hpp"
#include "sflab/experiments.hpp"
#include "sflab/lz_universal.hpp"
#include "sflab/rd_solver.hpp"
#include "sflab/saddlepoint.hpp"
#include "sflab/version.hpp"

namespace py = pybind11;
using namespace sflab;

namespace {

const char* branch_name(RateBranch b) {
  return b == RateBranch::positive_rate ? "positive_rate" : "zero_rate";
}

const char* source_name(ProbSource s) {
  switch (s) {
    case ProbSource::saddle_estimate: return "saddle_estimate";
    case ProbSource::exact_enum: return "exact_enum";
    case ProbSource::exact_dp: return "exact_dp";
    case ProbSource::exact_convolution: return "exact_convolution";
    case ProbSource::quadrature: return "quadrature";
    case ProbSource::monte_carlo: return "monte_carlo";
  }
  return "unknown";
}

py::dict prob_dict(const SuccessProb& p) {
  py::dict d;
  d["log_value"] = p.log_value;
  d["branch"] = branch_name(p.branch);
  d["source"] = source_name(p.source);
  if (p.components) {
    py::dict c;
    c["rate_term"] = p.components->rate_term;
    c["poly_term"] = p.components->poly_term;
    c["const_term"] = p.components->const_term;
    d["components"] = c;
  }
  if (p.log_lower) d["log_lower"] = *p.log_lower;
  if (p.log_upper) d["log_upper"] = *p.log_upper;
  if (p.std_error) d["std_error"] = *p.std_error;
  return d;
}

py::dict rd_dict(const RdSolution& sol) {
  py::dict d;
  d["rate_nats"] = sol.rate;
  d["s0"] = sol.s0;
  d["q0"] = sol.q0.probs();
  d["m"] = sol.m_s0q0;
  d["hess_det"] = sol.hess_det ? py::cast(*sol.hess_det) : py::none();
  d["zero_rate"] = sol.zero_rate;
  d["d_max_q0"] = sol.d_max_q0;
  d["stationarity"] = sol.stationarity;
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "universal d-semifaithful coding laboratory";
  m.attr("__version__") = SFLAB_VERSION;

  py::class_<DistortionMatrix>(m, "DistortionMatrix")
      .def(py::init<int, int, std::vector<double>>(), py::arg("k"), py::arg("j"),
           py::arg("entries"))
      .def_static("hamming", &DistortionMatrix::hamming, py::arg("k"))
      .def("__call__", &DistortionMatrix::operator(), py::arg("x"), py::arg("xhat"))
      .def_property_readonly("k", &DistortionMatrix::source_size)
      .def_property_readonly("j", &DistortionMatrix::repro_size)
      .def_property_readonly("d_max", &DistortionMatrix::d_max)
      .def_property_readonly("delta", &DistortionMatrix::delta)
      .def_property_readonly("normalized", &DistortionMatrix::normalized)
      .def_property_readonly("entries", &DistortionMatrix::entries);

  m.def(
      "normalize_distortion",
      [](const DistortionMatrix& d) {
        auto norm = normalize_distortion(d);
        return py::make_tuple(norm.matrix, norm.row_mins);
      },
      py::arg("d"), "Returns (normalized matrix, row minima of the original).");
  m.def("compute_delta", &compute_delta, py::arg("d"));
  m.def(
      "empirical",
      [](const std::vector<int>& x, int k) { return empirical(SourceBlock(x, k)).probs(); },
      py::arg("x"), py::arg("k"));
  m.def(
      "block_distortion",
      [](const std::vector<int>& x, const std::vector<int>& xhat,
         const DistortionMatrix& d) {
        return block_distortion(SourceBlock(x, d.source_size()),
                                ReproBlock(xhat, d.repro_size()), d);
      },
      py::arg("x"), py::arg("xhat"), py::arg("d"));

  m.def(
      "eval_F",
      [](double s, const std::vector<double>& q, const std::vector<double>& p,
         const DistortionMatrix& d, double level) {
        return eval_F(s, Qpmf(q), Pmf(p), d, level);
      },
      py::arg("s"), py::arg("q"), py::arg("p"), py::arg("d"), py::arg("distortion"));
  m.def(
      "solve_s0",
      [](const std::vector<double>& q, const std::vector<double>& p,
         const DistortionMatrix& d, double level) {
        return solve_s0(Qpmf(q), Pmf(p), d, level);
      },
      py::arg("q"), py::arg("p"), py::arg("d"), py::arg("distortion"));
  m.def(
      "rd_function",
      [](const std::vector<double>& p, const DistortionMatrix& d, double level,
         bool with_curvature) {
        RdSolution sol = rd_function(Pmf(p), d, level);
        if (with_curvature && !sol.zero_rate) curvature(Pmf(p), d, level, sol);
        return rd_dict(sol);
      },
      py::arg("p"), py::arg("d"), py::arg("distortion"), py::arg("with_curvature") = false);

  m.def("k_n", &k_n, py::arg("s"), py::arg("m"), py::arg("delta"), py::arg("n_distortion"));
  m.def(
      "success_prob_estimate",
      [](const std::vector<int>& x, int k, const DistortionMatrix& d, double level,
         std::uint64_t mc_seed, long mc_samples) {
        return prob_dict(
            success_prob_estimate(SourceBlock(x, k), d, level, mc_seed, mc_samples));
      },
      py::arg("x"), py::arg("k"), py::arg("d"), py::arg("distortion"),
      py::arg("mc_seed") = 0x5eedf01dULL, py::arg("mc_samples") = 1'000'000L);
  m.def(
      "success_exact_enum",
      [](const std::vector<int>& x, int k, const DistortionMatrix& d, double level) {
        return prob_dict(success_exact_enum(SourceBlock(x, k), d, level));
      },
      py::arg("x"), py::arg("k"), py::arg("d"), py::arg("distortion"));
  m.def(
      "success_exact_dp",
      [](const std::vector<int>& x, int k, const DistortionMatrix& d, double level) {
        return prob_dict(success_exact_dp(SourceBlock(x, k), d, level));
      },
      py::arg("x"), py::arg("k"), py::arg("d"), py::arg("distortion"));
  m.def(
      "success_given_q_convolution",
      [](const std::vector<int>& x, int k, const DistortionMatrix& d, double level,
         const std::vector<double>& q) {
        return prob_dict(success_given_q_convolution(SourceBlock(x, k), d, level, Qpmf(q)));
      },
      py::arg("x"), py::arg("k"), py::arg("d"), py::arg("distortion"), py::arg("q"));
  m.def(
      "success_monte_carlo",
      [](const std::vector<int>& x, int k, const DistortionMatrix& d, double level,
         long trials, std::uint64_t seed) {
        return prob_dict(success_monte_carlo(SourceBlock(x, k), d, level, trials, seed));
      },
      py::arg("x"), py::arg("k"), py::arg("d"), py::arg("distortion"), py::arg("trials"),
      py::arg("seed"));
  m.def(
      "log_mixture_weight",
      [](const std::vector<int>& xhat, int j) {
        return log_mixture_weight(ReproBlock(xhat, j));
      },
      py::arg("xhat"), py::arg("j"));

  m.def(
      "codeword",
      [](std::uint64_t seed, int a, int n, int j, std::uint64_t index) {
        return codeword(VirtualCodebook(seed, a, n, j), index).symbols;
      },
      py::arg("seed"), py::arg("a"), py::arg("n"), py::arg("j"), py::arg("index"));
  m.def(
      "encode_block",
      [](const std::vector<int>& x, int k, const DistortionMatrix& d, double level,
         std::uint64_t seed, int a, std::uint64_t max_scan) {
        const SourceBlock src(x, k);
        const VirtualCodebook cb(seed, a, src.n(), d.repro_size());
        const EncodeResult enc = encode(cb, src, d, level, max_scan);
        const auto bytes = write_container(cb, enc.bits);
        py::dict info;
        info["index"] = enc.index;
        info["hit"] = enc.hit;
        info["scanned"] = enc.scanned;
        info["length_nats"] = enc.length_nats;
        info["length_bits"] = static_cast<int>(enc.bits.bit_count);
        return py::make_tuple(py::bytes(reinterpret_cast<const char*>(bytes.data()),
                                        bytes.size()),
                              info);
      },
      py::arg("x"), py::arg("k"), py::arg("d"), py::arg("distortion"), py::arg("seed"),
      py::arg("a"), py::arg("max_scan"));
  m.def(
      "decode_block",
      [](const py::bytes& blob) {
        const std::string buf = blob;
        const std::vector<std::uint8_t> bytes(buf.begin(), buf.end());
        const Container c = read_container(bytes);
        return decode(c.codebook, c.payload).symbols;
      },
      py::arg("container"));
  m.def("length_nats", &length_nats, py::arg("index"));

  m.def(
      "lz78_phrase_count",
      [](const std::vector<int>& xhat, int j) {
        return lz78_phrase_count(ReproBlock(xhat, j));
      },
      py::arg("xhat"), py::arg("j"));
  m.def("lz_codelength_bits",
        py::overload_cast<int, int>(&lz_codelength_bits), py::arg("phrase_count"),
        py::arg("alphabet_factor"));
  m.def(
      "lz_success_prob",
      [](const std::vector<int>& x, int k, const DistortionMatrix& d, double level) {
        const LzSuccess res = lz_success_prob(SourceBlock(x, k), d, level);
        py::dict out;
        out["log_value"] = res.prob.log_value;
        out["min_lz_bits"] = res.min_lz_bits;
        out["sphere_size"] = res.sphere_size;
        out["log_normalizer"] = res.log_normalizer;
        return out;
      },
      py::arg("x"), py::arg("k"), py::arg("d"), py::arg("distortion"));
  m.def(
      "fs_lower_bound",
      [](const std::vector<int>& x, int k, const DistortionMatrix& d, double level,
         int states) {
        const FsBound b = fs_lower_bound(SourceBlock(x, k), d, level, states);
        return py::make_tuple(b.bits, b.argmin.symbols);
      },
      py::arg("x"), py::arg("k"), py::arg("d"), py::arg("distortion"), py::arg("states"));

  m.def(
      "max_conditional_entropy",
      [](const std::vector<double>& p, const DistortionMatrix& d, double level) {
        return max_conditional_entropy(Pmf(p), d, level);
      },
      py::arg("p"), py::arg("d"), py::arg("distortion"));

  m.def(
      "read_distortion_matrix",
      [](const std::string& text) {
        std::istringstream in(text);
        return read_distortion_matrix(in);
      },
      py::arg("text"));
}

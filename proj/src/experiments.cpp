#include "sflab/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <limits>
#include <map>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "sflab/codec.hpp"
#include "sflab/exact_oracle.hpp"
#include "sflab/lz_universal.hpp"
#include "sflab/numeric.hpp"
#include "sflab/rng.hpp"
#include "sflab/saddlepoint.hpp"
#include "sflab/version.hpp"

namespace sflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

std::uint64_t derive_stream(std::uint64_t a, std::uint64_t b, std::uint64_t c = 0) {
  return a * 0x9e3779b97f4a7c15ULL + b * 0xbf58476d1ce4e5b9ULL + c;
}

SourceBlock random_block(int n, int k, std::uint64_t seed, std::uint64_t stream) {
  CounterRng rng(seed, stream);
  std::vector<int> syms(n);
  for (int i = 0; i < n; ++i)
    syms[i] = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(k)));
  return SourceBlock(std::move(syms), k);
}

std::vector<int> type_counts(const SourceBlock& x) {
  std::vector<int> counts(x.alphabet_size, 0);
  for (int s : x.symbols) ++counts[s];
  return counts;
}

// rate cache keyed by the block type; rd_function depends on x only via it
struct RateCache {
  const DistortionMatrix& d;
  double level;
  std::map<std::vector<int>, double> rates;

  double rate(const SourceBlock& x) {
    const auto key = type_counts(x);
    const auto it = rates.find(key);
    if (it != rates.end()) return it->second;
    const double r = rd_function(empirical(x), d, level).rate;
    rates.emplace(key, r);
    return r;
  }
};

DistortionMatrix study_matrix(const ExperimentConfig& cfg, std::uint64_t variant) {
  switch (cfg.dist_kind) {
    case DistSourceKind::hamming:
      return DistortionMatrix::hamming(std::max(cfg.source_alphabet, cfg.repro_alphabet));
    case DistSourceKind::file: {
      std::ifstream in(cfg.dist_file);
      if (!in) throw std::invalid_argument("cannot open distortion file: " + cfg.dist_file);
      return read_distortion_matrix(in);
    }
    case DistSourceKind::random_grid: {
      CounterRng rng(cfg.seed, derive_stream(0xd157, variant));
      return sample_grid_matrix(1.0, cfg.source_alphabet, cfg.repro_alphabet,
                                cfg.grid_resolution, rng);
    }
  }
  throw std::logic_error("unreachable");
}

std::uint64_t scan_budget(const ExperimentConfig& cfg, int n, double rate, double extra_lnn) {
  const double log_budget =
      n * rate + extra_lnn * std::log(static_cast<double>(n)) + 8.0;
  if (log_budget > std::log(static_cast<double>(cfg.max_scan)))
    return cfg.max_scan;
  return std::max<std::uint64_t>(1, static_cast<std::uint64_t>(std::exp(log_budget)));
}

std::uint64_t stream_hash(const VirtualCodebook& cb, int words) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (int i = 1; i <= words; ++i) {
    const ReproBlock w = codeword(cb, static_cast<std::uint64_t>(i));
    for (int s : w.symbols) {
      h ^= static_cast<std::uint64_t>(s) + 1;
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void push_row(Table& t, int n, std::uint64_t seed, const std::string& dhash,
              std::vector<std::string> cells) {
  t.rows.push_back(TableRow{n, seed, dhash, std::move(cells)});
}

std::string fmt_u64(std::uint64_t v) { return std::to_string(v); }

double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

double percentile(std::vector<double> v, double pct) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const double idx = pct / 100.0 * (static_cast<double>(v.size()) - 1.0);
  const auto lo = static_cast<std::size_t>(std::floor(idx));
  const auto hi = static_cast<std::size_t>(std::ceil(idx));
  const double frac = idx - static_cast<double>(lo);
  return v[lo] * (1.0 - frac) + v[hi] * frac;
}

}  // namespace

Study parse_study_name(const std::string& name) {
  if (name == "lemma1_ratio") return Study::lemma1_ratio;
  if (name == "redundancy_sweep") return Study::redundancy_sweep;
  if (name == "universality_grid") return Study::universality_grid;
  if (name == "lz_comparison") return Study::lz_comparison;
  throw std::invalid_argument("unknown study: " + name);
}

std::string study_name(Study s) {
  switch (s) {
    case Study::lemma1_ratio: return "lemma1_ratio";
    case Study::redundancy_sweep: return "redundancy_sweep";
    case Study::universality_grid: return "universality_grid";
    case Study::lz_comparison: return "lz_comparison";
  }
  return "unknown";
}

ExperimentConfig parse_config(std::istream& in, Study study) {
  ExperimentConfig cfg;
  cfg.study = study;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(eq == std::string::npos ? line : line.substr(0, eq));
    if (key.empty()) continue;
    if (eq == std::string::npos)
      throw std::invalid_argument("config line " + std::to_string(lineno) + ": missing '='");
    const std::string value = trim(line.substr(eq + 1));

    auto parse_list_int = [&](const std::string& v) {
      std::vector<int> out;
      std::stringstream ss(v);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stoi(tok));
      return out;
    };
    auto parse_list_double = [&](const std::string& v) {
      std::vector<double> out;
      std::stringstream ss(v);
      std::string tok;
      while (std::getline(ss, tok, ',')) out.push_back(std::stod(tok));
      return out;
    };

    try {
      if (key == "n_list") cfg.n_list = parse_list_int(value);
      else if (key == "K") cfg.source_alphabet = std::stoi(value);
      else if (key == "J") cfg.repro_alphabet = std::stoi(value);
      else if (key == "A") cfg.codebook_base = std::stoi(value);
      else if (key == "D") cfg.distortion_level = std::stod(value);
      else if (key == "trials") cfg.trials = std::stol(value);
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "output") cfg.output = value;
      else if (key == "epsilon") cfg.epsilon = std::stod(value);
      else if (key == "max_scan") cfg.max_scan = std::stoull(value);
      else if (key == "mc_samples") cfg.mc_samples = std::stol(value);
      else if (key == "resolution") cfg.grid_resolution = std::stoi(value);
      else if (key == "grid_count") cfg.grid_count = std::stoi(value);
      else if (key == "offgrid_count") cfg.offgrid_count = std::stoi(value);
      else if (key == "D_list") cfg.distortion_sweep = parse_list_double(value);
      else if (key == "dist_source") {
        if (value == "hamming") cfg.dist_kind = DistSourceKind::hamming;
        else if (value.rfind("file:", 0) == 0) {
          cfg.dist_kind = DistSourceKind::file;
          cfg.dist_file = value.substr(5);
        } else if (value.rfind("random_grid:", 0) == 0) {
          cfg.dist_kind = DistSourceKind::random_grid;
          const auto rest = value.substr(12);
          const auto colon = rest.find(':');
          if (colon == std::string::npos)
            throw std::invalid_argument("random_grid needs resolution:count");
          cfg.grid_resolution = std::stoi(rest.substr(0, colon));
          cfg.grid_count = std::stoi(rest.substr(colon + 1));
        } else {
          throw std::invalid_argument("bad dist_source: " + value);
        }
      } else {
        throw std::invalid_argument("unknown config key: " + key);
      }
    } catch (const std::invalid_argument&) {
      throw;
    } catch (const std::exception&) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": bad value for " + key);
    }
  }
  validate_config(cfg);
  return cfg;
}

void validate_config(const ExperimentConfig& cfg) {
  if (cfg.n_list.empty()) throw std::invalid_argument("n_list must be nonempty");
  for (int n : cfg.n_list)
    if (n < 1) throw std::invalid_argument("block lengths must be positive");
  if (cfg.trials < 1) throw std::invalid_argument("trials must be >= 1");
  if (cfg.codebook_base <= std::max(cfg.source_alphabet, cfg.repro_alphabet))
    throw std::invalid_argument("A must exceed max(J, K)");
  if (cfg.distortion_level < 0.0) throw std::invalid_argument("D must be >= 0");
  if (cfg.source_alphabet < 1 || cfg.repro_alphabet < 1)
    throw std::invalid_argument("alphabet sizes must be positive");
  if (cfg.grid_resolution < 1) throw std::invalid_argument("resolution must be >= 1");
  if (cfg.dist_kind == DistSourceKind::file && cfg.dist_file.empty())
    throw std::invalid_argument("dist_source=file needs a path");
}

void Table::sort_rows() {
  std::stable_sort(rows.begin(), rows.end(), [](const TableRow& a, const TableRow& b) {
    if (a.n != b.n) return a.n < b.n;
    if (a.seed != b.seed) return a.seed < b.seed;
    return a.dist_hash < b.dist_hash;
  });
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

std::string distortion_hash(const DistortionMatrix& d) {
  std::string repr = std::to_string(d.source_size()) + "x" + std::to_string(d.repro_size());
  char buf[40];
  for (double e : d.entries()) {
    std::snprintf(buf, sizeof(buf), "%.17g,", e);
    repr += buf;
  }
  return hex64(fnv1a(repr));
}

std::string config_hash(const ExperimentConfig& cfg) {
  std::string repr = study_name(cfg.study) + ";";
  for (int n : cfg.n_list) repr += std::to_string(n) + ",";
  repr += ";K=" + std::to_string(cfg.source_alphabet);
  repr += ";J=" + std::to_string(cfg.repro_alphabet);
  repr += ";A=" + std::to_string(cfg.codebook_base);
  repr += ";D=" + format_double(cfg.distortion_level);
  repr += ";dist=" + std::to_string(static_cast<int>(cfg.dist_kind)) + ":" + cfg.dist_file;
  repr += ";res=" + std::to_string(cfg.grid_resolution);
  repr += ";grid=" + std::to_string(cfg.grid_count);
  repr += ";off=" + std::to_string(cfg.offgrid_count);
  repr += ";trials=" + std::to_string(cfg.trials);
  repr += ";seed=" + std::to_string(cfg.seed);
  repr += ";eps=" + format_double(cfg.epsilon);
  repr += ";scan=" + std::to_string(cfg.max_scan);
  repr += ";mc=" + std::to_string(cfg.mc_samples);
  repr += ";sweep=";
  for (double dd : cfg.distortion_sweep) repr += format_double(dd) + ",";
  return hex64(fnv1a(repr));
}

std::string rd_solution_json(const RdSolution& sol) {
  nlohmann::json j;
  j["rate_nats"] = sol.rate;
  j["s0"] = sol.s0;
  j["q0"] = sol.q0.probs();
  j["m"] = sol.m_s0q0;
  if (sol.hess_det)
    j["hess_det"] = *sol.hess_det;
  else
    j["hess_det"] = nullptr;
  j["zero_rate"] = sol.zero_rate;
  return j.dump();
}

std::string oracle_instance_hash(const SourceBlock& x, const DistortionMatrix& d,
                                 double distortion_level) {
  std::string repr = distortion_hash(d) + "|D=";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", distortion_level);
  repr += buf;
  repr += "|x=";
  std::vector<int> counts(x.alphabet_size, 0);  // oracles depend on x via its type
  for (int s : x.symbols) ++counts[s];
  for (int c : counts) repr += std::to_string(c) + ",";
  return hex64(fnv1a(repr));
}

void write_oracle_fixtures(const std::vector<std::pair<std::string, double>>& fixtures,
                           const std::string& path) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [hash, log_ps] : fixtures) j[hash] = log_ps;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << j.dump(2) << '\n';
}

std::vector<std::pair<std::string, double>> load_oracle_fixtures(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  const auto j = nlohmann::json::parse(in);
  std::vector<std::pair<std::string, double>> out;
  for (const auto& [key, value] : j.items()) out.emplace_back(key, value.get<double>());
  return out;
}

double max_conditional_entropy(const Pmf& p, const DistortionMatrix& d,
                               double distortion_level) {
  const int j = d.repro_size();
  const Qpmf uniform = Qpmf::uniform(j);
  double reachable_min = 0.0;
  double uniform_mean = 0.0;
  for (int x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    double row_min = kInf, row_mean = 0.0;
    for (int y = 0; y < j; ++y) {
      row_min = std::min(row_min, d(x, y));
      row_mean += d(x, y) / j;
    }
    reachable_min += p[x] * row_min;
    uniform_mean += p[x] * row_mean;
  }
  if (distortion_level < reachable_min - 1e-12)
    throw std::domain_error("no conditional distribution meets the distortion budget");
  if (distortion_level >= uniform_mean)
    return std::log(static_cast<double>(j));

  // Bisect the common tilt; the tilted mean is tilted_distortion_mean with a
  // uniform q.
  double lo = 0.0, hi = 1.0;
  while (tilted_distortion_mean(hi, uniform, p, d) > distortion_level && hi < 1e9) hi *= 2.0;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double gap = tilted_distortion_mean(mid, uniform, p, d) - distortion_level;
    if (std::abs(gap) <= 1e-12) {
      lo = hi = mid;
      break;
    }
    (gap > 0.0 ? lo : hi) = mid;
  }
  const double mu = 0.5 * (lo + hi);

  // H(phi_x) = mu * mean_x + ln Ztilde_x, phi_x(y) proportional to e^{-mu d}.
  double entropy = 0.0;
  for (int x = 0; x < p.size(); ++x) {
    if (p[x] == 0.0) continue;
    double m = -kInf;
    for (int y = 0; y < j; ++y) m = std::max(m, -mu * d(x, y));
    double z = 0.0, zd = 0.0;
    for (int y = 0; y < j; ++y) {
      const double e = std::exp(-mu * d(x, y) - m);
      z += e;
      zd += e * d(x, y);
    }
    entropy += p[x] * (mu * zd / z + m + std::log(z));
  }
  return entropy;
}

StudyResult run_lemma1_ratio(const ExperimentConfig& cfg) {
  StudyResult res;
  Table& t = res.table;
  const std::string chash = config_hash(cfg);
  t.columns = {"kind",        "n",          "trial",      "seed",
               "dist_hash",   "config_hash", "rate_nats", "rate_bits",
               "log_ps_exact", "log_ps_saddle", "log_ratio",
               "median_abs_log_ratio", "status"};

  const DistortionMatrix d = study_matrix(cfg, 0);
  const auto norm = normalize_distortion(d);
  const std::string dhash = distortion_hash(norm.matrix);

  for (int n : cfg.n_list) {
    std::vector<double> abs_ratios;
    for (long trial = 0; trial < cfg.trials; ++trial) {
      const std::uint64_t stream = derive_stream(static_cast<std::uint64_t>(n), trial, 1);
      const SourceBlock x = random_block(n, cfg.source_alphabet, cfg.seed, stream);
      const RdSolution sol = rd_function(empirical(x), norm.matrix, cfg.distortion_level);
      if (res.rd_example.empty()) res.rd_example = rd_solution_json(sol);

      const SuccessProb exact = success_exact_dp(x, norm.matrix, cfg.distortion_level);
      std::string status = "ok";
      double log_saddle = std::numeric_limits<double>::quiet_NaN();
      double log_ratio = std::numeric_limits<double>::quiet_NaN();
      if (n < 2) {
        status = "saddle_unavailable_n1";
      } else {
        try {
          const SuccessProb saddle = success_prob_estimate(
              x, norm.matrix, cfg.distortion_level, derive_stream(cfg.seed, 0xb01),
              cfg.mc_samples);
          log_saddle = saddle.log_value;
          log_ratio = log_saddle - exact.log_value;
          if (std::isfinite(log_ratio)) abs_ratios.push_back(std::abs(log_ratio));
          if (sol.zero_rate)
            // At min_q D_max(q) = D the zero-rate volume constant vanishes and
            // only the exact oracle is informative.
            status = std::isfinite(log_saddle) ? "zero_rate" : "zero_rate_boundary";
        } catch (const std::domain_error&) {
          status = "saddle_boundary_q0";
        }
      }
      push_row(t, n, cfg.seed, dhash,
               {"instance", std::to_string(n), std::to_string(trial), fmt_u64(cfg.seed),
                dhash, chash, format_double(sol.rate), format_double(sol.rate / kLn2),
                format_double(exact.log_value), format_double(log_saddle),
                format_double(log_ratio), "", status});
    }
    push_row(t, n, cfg.seed, dhash,
             {"summary", std::to_string(n), "", fmt_u64(cfg.seed), dhash, chash, "", "",
              "", "", "", format_double(median(abs_ratios)), "ok"});
  }
  t.sort_rows();
  return res;
}

StudyResult run_redundancy_sweep(const ExperimentConfig& cfg) {
  StudyResult res;
  Table& t = res.table;
  const std::string chash = config_hash(cfg);
  t.columns = {"kind",       "n",         "trial",        "seed",       "dist_hash",
               "config_hash", "rate_nats", "rate_bits",   "length_nats", "length_bits",
               "redundancy_per_lnn", "hit", "scanned",    "epsilon",
               "bound_this_scheme",  "bound_mw1", "bound_mw2", "bound_mw3",
               "p95_redundancy_per_lnn", "status"};

  const DistortionMatrix d0 = study_matrix(cfg, 0);
  const auto norm = normalize_distortion(d0);
  const std::string dhash = distortion_hash(norm.matrix);
  const int big_j = cfg.repro_alphabet;
  const int big_k = cfg.source_alphabet;
  const double bound_this = big_j / 2.0 + 2.0 + cfg.epsilon;
  const double bound_mw1 = 2.0 * big_j * big_k + big_j + 3.0;
  const double bound_mw2 = static_cast<double>(big_j) * big_k + big_j;
  const double bound_mw3 =
      static_cast<double>(big_j) * big_j * big_k * big_k + big_j - 2.0;

  for (int n : cfg.n_list) {
    RateCache cache{norm.matrix, cfg.distortion_level, {}};
    std::vector<double> redundancies;
    for (long trial = 0; trial < cfg.trials; ++trial) {
      const std::uint64_t stream = derive_stream(static_cast<std::uint64_t>(n), trial, 2);
      const SourceBlock x = random_block(n, cfg.source_alphabet, cfg.seed, stream);
      const double rate = cache.rate(x);
      const std::uint64_t cb_seed = derive_stream(cfg.seed, stream, 3);
      const VirtualCodebook cb(cb_seed, cfg.codebook_base, n, cfg.repro_alphabet);
      const std::uint64_t budget = scan_budget(cfg, n, rate, big_j / 2.0 + 2.0);
      const EncodeResult enc = encode(cb, x, norm.matrix, cfg.distortion_level, budget);
      const double red = (enc.length_nats - n * rate) / std::log(static_cast<double>(n));
      redundancies.push_back(red);
      push_row(t, n, cb_seed, dhash,
               {"trial", std::to_string(n), std::to_string(trial), fmt_u64(cb_seed), dhash,
                chash, format_double(rate), format_double(rate / kLn2),
                format_double(enc.length_nats), format_double(enc.length_nats / kLn2),
                format_double(red), enc.hit ? "1" : "0", fmt_u64(enc.scanned),
                format_double(cfg.epsilon), format_double(bound_this),
                format_double(bound_mw1), format_double(bound_mw2), format_double(bound_mw3),
                "", enc.hit ? "ok" : "scan_budget_exhausted"});
      if (!enc.hit)
        res.violations.push_back("scan budget exhausted: n=" + std::to_string(n) +
                                 " trial=" + std::to_string(trial) +
                                 " seed=" + std::to_string(cb_seed));
    }
    push_row(t, n, cfg.seed, dhash,
             {"summary", std::to_string(n), "", fmt_u64(cfg.seed), dhash, chash, "", "", "",
              "", "", "", "", format_double(cfg.epsilon), format_double(bound_this),
              format_double(bound_mw1), format_double(bound_mw2), format_double(bound_mw3),
              format_double(percentile(redundancies, 95.0)), "ok"});
  }
  res.ok = res.violations.empty();
  t.sort_rows();
  return res;
}

StudyResult run_universality_grid(const ExperimentConfig& cfg) {
  StudyResult res;
  Table& t = res.table;
  const std::string chash = config_hash(cfg);
  t.columns = {"n",       "trial",     "seed",      "dist_hash", "config_hash",
               "matrix_kind", "rate_nats", "rate_bits", "D_shifted", "D_original",
               "distortion", "bound",    "hit",       "scanned",   "stream_hash",
               "status"};

  const int n = cfg.n_list.front();
  const std::uint64_t cb_seed = cfg.seed;  // one codebook for every matrix
  const VirtualCodebook cb(cb_seed, cfg.codebook_base, n, cfg.repro_alphabet);
  const std::uint64_t shash = stream_hash(cb, 8);

  struct MatrixCase {
    DistortionMatrix raw;      // measured against
    DistortionMatrix encode_with;  // grid: == raw; off-grid: snapped
    std::string kind;
    double extra;  // off-grid distortion allowance
  };
  std::vector<MatrixCase> cases;
  for (int g = 0; g < cfg.grid_count; ++g) {
    CounterRng rng(cfg.seed, derive_stream(0x9a1d, g));
    DistortionMatrix m = sample_grid_matrix(1.0, cfg.source_alphabet, cfg.repro_alphabet,
                                            cfg.grid_resolution, rng);
    cases.push_back({m, m, "grid", 0.0});
  }
  for (int g = 0; g < cfg.offgrid_count; ++g) {
    CounterRng rng(cfg.seed, derive_stream(0x0ff9, g));
    std::vector<double> entries(static_cast<std::size_t>(cfg.source_alphabet) *
                                cfg.repro_alphabet);
    for (auto& e : entries) e = rng.next_unit();
    DistortionMatrix raw(cfg.source_alphabet, cfg.repro_alphabet, std::move(entries));
    DistortionMatrix snapped = snap_to_grid(raw, 1.0, cfg.grid_resolution);
    cases.push_back({raw, snapped, "offgrid", n * 1.0 / cfg.grid_resolution});
  }

  for (const MatrixCase& mc : cases) {
    const auto norm = normalize_distortion(mc.encode_with);
    const std::string dhash = distortion_hash(mc.raw);
    const double level = cfg.distortion_level * norm.matrix.d_max();
    RateCache cache{norm.matrix, level, {}};
    for (long trial = 0; trial < cfg.trials; ++trial) {
      const std::uint64_t stream = derive_stream(static_cast<std::uint64_t>(n), trial, 4);
      const SourceBlock x = random_block(n, cfg.source_alphabet, cfg.seed, stream);
      const Pmf phat = empirical(x);
      const double rate = cache.rate(x);
      const std::uint64_t budget = scan_budget(cfg, n, rate, 2.0);
      const EncodeResult enc = encode(cb, x, norm.matrix, level, budget);
      std::string status = enc.hit ? "ok" : "scan_budget_exhausted";
      double measured = std::numeric_limits<double>::quiet_NaN();
      const double d_original = level + norm.shift(phat);
      // Bound under the matrix the trial is measured against.
      const double bound = enc.hit
          ? n * d_original + (mc.kind == "offgrid" ? mc.extra : 0.0) + 1e-9
          : std::numeric_limits<double>::quiet_NaN();
      if (enc.hit) {
        const ReproBlock xhat = decode(cb, enc.bits);
        // Measured against the raw matrix; off-grid gets the snap allowance.
        measured = block_distortion(x, xhat, mc.raw);
        if (measured > bound) {
          status = "distortion_violation";
          res.violations.push_back(
              "distortion violation: kind=" + mc.kind + " dist_hash=" + dhash +
              " trial=" + std::to_string(trial) + " seed=" + std::to_string(cfg.seed) +
              " measured=" + format_double(measured) + " bound=" + format_double(bound));
        }
      } else {
        res.violations.push_back("scan budget exhausted: dist_hash=" + dhash +
                                 " trial=" + std::to_string(trial) +
                                 " seed=" + std::to_string(cfg.seed));
      }
      push_row(t, n, cfg.seed, dhash,
               {std::to_string(n), std::to_string(trial), fmt_u64(cfg.seed), dhash, chash,
                mc.kind, format_double(rate), format_double(rate / kLn2),
                format_double(level), format_double(d_original), format_double(measured),
                format_double(bound), enc.hit ? "1" : "0", fmt_u64(enc.scanned),
                hex64(shash), status});
    }
  }
  res.ok = res.violations.empty();
  t.sort_rows();
  return res;
}

StudyResult run_lz_comparison(const ExperimentConfig& cfg) {
  StudyResult res;
  Table& t = res.table;
  const std::string chash = config_hash(cfg);
  t.columns = {"n",        "D",     "trial", "seed",  "dist_hash", "config_hash",
               "E_nats",   "rate_nats", "rate_bits", "log_ps_lz", "inv_ps",
               "sphere_size", "min_lz_bits_jfactor", "min_lz_bits_kfactor",
               "cost_sphere_log", "cost_mixture_log", "winner", "status"};

  const DistortionMatrix d0 = study_matrix(cfg, 0);
  const auto norm = normalize_distortion(d0);
  const std::string dhash = distortion_hash(norm.matrix);
  std::vector<double> sweep = cfg.distortion_sweep;
  if (sweep.empty()) sweep = {cfg.distortion_level};

  for (int n : cfg.n_list) {
    for (double level : sweep) {
      for (long trial = 0; trial < cfg.trials; ++trial) {
        const std::uint64_t stream =
            derive_stream(static_cast<std::uint64_t>(n), trial, 5);
        const SourceBlock x = random_block(n, cfg.source_alphabet, cfg.seed, stream);
        const Pmf phat = empirical(x);
        std::string status = "ok";
        double e_nats = std::numeric_limits<double>::quiet_NaN();
        double rate = std::numeric_limits<double>::quiet_NaN();
        double log_ps = std::numeric_limits<double>::quiet_NaN();
        double sphere = std::numeric_limits<double>::quiet_NaN();
        double min_lz_j = std::numeric_limits<double>::quiet_NaN();
        double min_lz_k = std::numeric_limits<double>::quiet_NaN();
        try {
          e_nats = max_conditional_entropy(phat, norm.matrix, level);
          rate = rd_function(phat, norm.matrix, level).rate;
          const LzSuccess lz = lz_success_prob(x, norm.matrix, level);
          log_ps = lz.prob.log_value;
          sphere = lz.sphere_size;
          min_lz_j = lz.min_lz_bits;
          min_lz_k = lz.min_lz_bits_src_factor;
        } catch (const std::exception& e) {
          status = std::string("guard: ") + e.what();
        }
        const double cost_sphere = n * e_nats;
        const double cost_mixture = -log_ps;
        const char* winner = cost_sphere < cost_mixture ? "sphere_search" : "lz_mixture";
        push_row(t, n, cfg.seed, dhash,
                 {std::to_string(n), format_double(level), std::to_string(trial),
                  fmt_u64(cfg.seed), dhash, chash, format_double(e_nats),
                  format_double(rate), format_double(rate / kLn2), format_double(log_ps),
                  format_double(std::exp(-log_ps)), format_double(sphere),
                  format_double(min_lz_j), format_double(min_lz_k),
                  format_double(cost_sphere), format_double(cost_mixture),
                  status == "ok" ? winner : "", status});
      }
    }
  }
  t.sort_rows();
  return res;
}

StudyResult run_study(const ExperimentConfig& cfg) {
  switch (cfg.study) {
    case Study::lemma1_ratio: return run_lemma1_ratio(cfg);
    case Study::redundancy_sweep: return run_redundancy_sweep(cfg);
    case Study::universality_grid: return run_universality_grid(cfg);
    case Study::lz_comparison: return run_lz_comparison(cfg);
  }
  throw std::logic_error("unreachable");
}

void emit(const StudyResult& result, const ExperimentConfig& cfg,
          const std::string& csv_path, const std::string& json_path) {
  std::ofstream csv(csv_path, std::ios::binary);
  if (!csv) throw std::runtime_error("cannot write " + csv_path);
  for (std::size_t i = 0; i < result.table.columns.size(); ++i) {
    if (i) csv << ',';
    csv << result.table.columns[i];
  }
  csv << '\n';
  for (const TableRow& row : result.table.rows) {
    for (std::size_t i = 0; i < row.cells.size(); ++i) {
      if (i) csv << ',';
      csv << row.cells[i];
    }
    csv << '\n';
  }
  if (!csv) throw std::runtime_error("write failed: " + csv_path);

  nlohmann::json sidecar;
  sidecar["study"] = study_name(cfg.study);
  sidecar["config_hash"] = config_hash(cfg);
  sidecar["version"] = SFLAB_VERSION;
  sidecar["ok"] = result.ok;
  sidecar["violations"] = result.violations;
  if (!result.rd_example.empty())
    sidecar["rd_solution_example"] = nlohmann::json::parse(result.rd_example);
  nlohmann::json jc;
  jc["n_list"] = cfg.n_list;
  jc["K"] = cfg.source_alphabet;
  jc["J"] = cfg.repro_alphabet;
  jc["A"] = cfg.codebook_base;
  jc["D"] = cfg.distortion_level;
  jc["trials"] = cfg.trials;
  jc["seed"] = cfg.seed;
  jc["epsilon"] = cfg.epsilon;
  jc["max_scan"] = cfg.max_scan;
  jc["mc_samples"] = cfg.mc_samples;
  jc["resolution"] = cfg.grid_resolution;
  jc["grid_count"] = cfg.grid_count;
  jc["offgrid_count"] = cfg.offgrid_count;
  jc["D_list"] = cfg.distortion_sweep;
  sidecar["config"] = jc;
  std::ofstream js(json_path, std::ios::binary);
  if (!js) throw std::runtime_error("cannot write " + json_path);
  js << sidecar.dump(2) << '\n';
  if (!js) throw std::runtime_error("write failed: " + json_path);
}

}  // namespace sflab

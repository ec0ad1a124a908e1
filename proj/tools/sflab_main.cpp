// sflab: batch studies over the semifaithful coding stack, plus a single-block
// encode/decode pair speaking the SFC1 container format.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sflab/codec.hpp"
#include "sflab/core_types.hpp"
#include "sflab/experiments.hpp"
#include "sflab/rd_solver.hpp"
#include "sflab/version.hpp"

namespace {

int run_study_command(const std::string& study, const std::string& config_path,
                      std::uint64_t seed, bool seed_set, const std::string& out_dir) {
  sflab::ExperimentConfig cfg;
  try {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "cannot open config: " << config_path << "\n";
      return 2;
    }
    cfg = sflab::parse_config(in, sflab::parse_study_name(study));
    if (seed_set) cfg.seed = seed;
    sflab::validate_config(cfg);
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }

  const std::string stem = cfg.output.empty() ? sflab::study_name(cfg.study) : cfg.output;
  const auto dir = std::filesystem::path(out_dir);
  std::filesystem::create_directories(dir);
  const sflab::StudyResult result = sflab::run_study(cfg);
  sflab::emit(result, cfg, (dir / (stem + ".csv")).string(),
              (dir / (stem + ".json")).string());
  for (const std::string& v : result.violations) std::cerr << "violation: " << v << "\n";
  std::cout << stem << ": " << result.table.rows.size() << " rows, "
            << (result.ok ? "ok" : "violations") << "\n";
  return result.ok ? 0 : 1;
}

int run_encode(const std::string& dist_file, const std::string& in_path,
               const std::string& out_path, double level, std::uint64_t seed,
               std::uint64_t max_scan, int base, int n_expected) {
  std::ifstream din(dist_file);
  if (!din) {
    std::cerr << "cannot open distortion file: " << dist_file << "\n";
    return 2;
  }
  const sflab::DistortionMatrix d = sflab::read_distortion_matrix(din);

  std::ifstream xin(in_path);
  if (!xin) {
    std::cerr << "cannot open input sequence: " << in_path << "\n";
    return 2;
  }
  const std::vector<int> syms = sflab::read_symbol_sequence(xin);
  if (n_expected > 0 && static_cast<int>(syms.size()) != n_expected) {
    std::cerr << "sequence length " << syms.size() << " does not match --n " << n_expected
              << "\n";
    return 2;
  }
  const sflab::SourceBlock x(syms, d.source_size());

  const int a = base > 0 ? base : std::max(d.source_size(), d.repro_size()) + 1;
  const sflab::VirtualCodebook cb(seed, a, x.n(), d.repro_size());
  if (max_scan == 0) {
    // Default scan budget from the empirical rate of the shifted problem.
    const auto norm = sflab::normalize_distortion(d);
    const double shifted = level - norm.shift(sflab::empirical(x));
    double rate = std::log(static_cast<double>(d.repro_size()));
    if (shifted >= 0.0)
      rate = sflab::rd_function(sflab::empirical(x), norm.matrix, shifted).rate;
    const double log_budget =
        std::min(x.n() * std::log(static_cast<double>(d.repro_size())),
                 x.n() * rate + (d.repro_size() / 2.0 + 2.0) * std::log(double(x.n())) + 8.0);
    max_scan = log_budget > std::log(1e8) ? static_cast<std::uint64_t>(1e8)
                                          : static_cast<std::uint64_t>(std::exp(log_budget)) + 1;
  }

  const sflab::EncodeResult enc = sflab::encode(cb, x, d, level, max_scan);
  const auto bytes = sflab::write_container(cb, enc.bits);
  std::ofstream out(out_path, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return 2;
  }
  std::cout << "index=" << enc.index << " bits=" << enc.bits.bit_count
            << " length_nats=" << enc.length_nats << " hit=" << (enc.hit ? 1 : 0)
            << " scanned=" << enc.scanned << "\n";
  return enc.hit ? 0 : 1;
}

int run_decode(const std::string& in_path, const std::string& out_path) {
  std::ifstream in(in_path, std::ios::binary);
  if (!in) {
    std::cerr << "cannot open container: " << in_path << "\n";
    return 2;
  }
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  const sflab::Container c = sflab::read_container(bytes);
  const sflab::ReproBlock xhat = sflab::decode(c.codebook, c.payload);
  std::ofstream out(out_path);
  sflab::write_symbol_sequence(out, xhat.symbols);
  if (!out) {
    std::cerr << "cannot write " << out_path << "\n";
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"semifaithful coding lab"};
  app.set_version_flag("--version", SFLAB_VERSION);
  app.require_subcommand(1);

  std::string config_path, out_dir = ".";
  std::uint64_t seed = 0;
  bool seed_set = false;
  for (const std::string name :
       {"lemma1_ratio", "redundancy_sweep", "universality_grid", "lz_comparison"}) {
    auto* sub = app.add_subcommand(name, "run the " + name + " study");
    sub->add_option("--config", config_path, "flat key=value config file")->required();
    sub->add_option("--seed", seed, "override the config seed")
        ->each([&](const std::string&) { seed_set = true; });
    sub->add_option("--out", out_dir, "output directory");
  }

  std::string dist_file, in_path, out_path;
  double level = 0.0;
  std::uint64_t enc_seed = 1, max_scan = 0;
  int base = 0, n_expected = 0;
  auto* enc = app.add_subcommand("encode", "encode one block into an SFC1 container");
  enc->add_option("--dist-file", dist_file, "distortion matrix file")->required();
  enc->add_option("--in", in_path, "input symbol sequence")->required();
  enc->add_option("--out", out_path, "output container path")->required();
  enc->add_option("--D", level, "distortion level per symbol")->required();
  enc->add_option("--seed", enc_seed, "codebook seed");
  enc->add_option("--max-scan", max_scan, "scan cap (0 = automatic)");
  enc->add_option("--a", base, "codebook base A (0 = max(J,K)+1)");
  enc->add_option("--n", n_expected, "expected block length");

  std::string dec_in, dec_out;
  auto* dec = app.add_subcommand("decode", "decode an SFC1 container");
  dec->add_option("--in", dec_in, "container path")->required();
  dec->add_option("--out", dec_out, "output symbol sequence path")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    for (const std::string name :
         {"lemma1_ratio", "redundancy_sweep", "universality_grid", "lz_comparison"}) {
      if (app.got_subcommand(name))
        return run_study_command(name, config_path, seed, seed_set, out_dir);
    }
    if (app.got_subcommand("encode"))
      return run_encode(dist_file, in_path, out_path, level, enc_seed, max_scan, base,
                        n_expected);
    if (app.got_subcommand("decode")) return run_decode(dec_in, dec_out);
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

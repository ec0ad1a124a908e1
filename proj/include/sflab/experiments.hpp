#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "sflab/core_types.hpp"
#include "sflab/rd_solver.hpp"

namespace sflab {

enum class Study { lemma1_ratio, redundancy_sweep, universality_grid, lz_comparison };

enum class DistSourceKind { hamming, file, random_grid };

struct ExperimentConfig {
  Study study = Study::lemma1_ratio;
  std::vector<int> n_list{16, 32, 64};
  int source_alphabet = 2;  // K
  int repro_alphabet = 2;   // J
  int codebook_base = 3;    // A
  double distortion_level = 0.25;
  DistSourceKind dist_kind = DistSourceKind::hamming;
  std::string dist_file;
  int grid_resolution = 32;
  int grid_count = 20;
  int offgrid_count = 5;
  long trials = 100;
  std::uint64_t seed = 1;
  std::string output;  // filename stem; defaults to the study name
  double epsilon = 0.5;
  std::uint64_t max_scan = 10'000'000;
  long mc_samples = 1'000'000;
  std::vector<double> distortion_sweep;  // lz_comparison
};

Study parse_study_name(const std::string& name);
std::string study_name(Study s);

// Flat key = value text config; # starts a comment. Throws
// std::invalid_argument on unknown keys, bad values, or invariant violations.
ExperimentConfig parse_config(std::istream& in, Study study);
void validate_config(const ExperimentConfig& cfg);

struct TableRow {
  int n = 0;
  std::uint64_t seed = 0;
  std::string dist_hash;
  std::vector<std::string> cells;
};

struct Table {
  std::vector<std::string> columns;
  std::vector<TableRow> rows;

  void sort_rows();  // deterministic output order: (n, seed, dist_hash)
};

struct StudyResult {
  Table table;
  bool ok = true;
  std::vector<std::string> violations;
  std::string rd_example;  // RdSolution JSON record for the first solved instance
};

StudyResult run_lemma1_ratio(const ExperimentConfig& cfg);
StudyResult run_redundancy_sweep(const ExperimentConfig& cfg);
StudyResult run_universality_grid(const ExperimentConfig& cfg);
StudyResult run_lz_comparison(const ExperimentConfig& cfg);
StudyResult run_study(const ExperimentConfig& cfg);

// CSV with header, UTF-8, LF endings, sorted rows; JSON sidecar with the
// config, its hash, and the library version.
void emit(const StudyResult& result, const ExperimentConfig& cfg,
          const std::string& csv_path, const std::string& json_path);

std::string config_hash(const ExperimentConfig& cfg);
std::string distortion_hash(const DistortionMatrix& d);
std::string format_double(double v);

// E(D): max of H(Xhat | X) over conditional distributions with expected
// distortion at most D, in nats. The maximizer tilts each row by a common
// exponential multiplier chosen to meet the constraint.
double max_conditional_entropy(const Pmf& p, const DistortionMatrix& d,
                               double distortion_level);

std::string rd_solution_json(const RdSolution& sol);

// Oracle regression fixtures: a JSON object mapping a canonical instance hash
// to the exact log success probability, suitable for freezing into CI.
std::string oracle_instance_hash(const SourceBlock& x, const DistortionMatrix& d,
                                 double distortion_level);
void write_oracle_fixtures(const std::vector<std::pair<std::string, double>>& fixtures,
                           const std::string& path);
std::vector<std::pair<std::string, double>> load_oracle_fixtures(const std::string& path);

}  // namespace sflab

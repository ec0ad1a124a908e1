#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace sflab {

// Probability vector over the source alphabet {0..K-1}.
class Pmf {
 public:
  explicit Pmf(std::vector<double> probs);
  static Pmf uniform(int k);

  double operator[](int i) const { return probs_[i]; }
  int size() const { return static_cast<int>(probs_.size()); }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// Probability vector over the reproduction alphabet {0..J-1}.
class Qpmf {
 public:
  explicit Qpmf(std::vector<double> probs);
  static Qpmf uniform(int j);

  double operator[](int i) const { return probs_[i]; }
  int size() const { return static_cast<int>(probs_.size()); }
  const std::vector<double>& probs() const { return probs_; }

 private:
  std::vector<double> probs_;
};

// K x J nonnegative per-letter distortion matrix with its lattice metadata.
// delta() is the greatest common divisor of the positive entries, 0 when they
// are incommensurable (or the matrix is identically zero).
class DistortionMatrix {
 public:
  DistortionMatrix(int k, int j, std::vector<double> entries);
  static DistortionMatrix hamming(int k);

  double operator()(int x, int xhat) const { return entries_[x * j_ + xhat]; }
  int source_size() const { return k_; }
  int repro_size() const { return j_; }
  double d_max() const { return d_max_; }
  double delta() const { return delta_; }
  bool normalized() const { return normalized_; }
  bool degenerate() const { return d_max_ == 0.0; }
  double row_min(int x) const;
  const std::vector<double>& entries() const { return entries_; }

 private:
  int k_;
  int j_;
  std::vector<double> entries_;
  double d_max_;
  double delta_;
  bool normalized_;
};

struct SourceBlock {
  SourceBlock(std::vector<int> syms, int k);

  int n() const { return static_cast<int>(symbols.size()); }

  std::vector<int> symbols;
  int alphabet_size;  // K
};

struct ReproBlock {
  ReproBlock(std::vector<int> syms, int j);

  int n() const { return static_cast<int>(symbols.size()); }

  std::vector<int> symbols;
  int alphabet_size;  // J
};

// Result of shifting row minima to zero. shift(p) is the expected row minimum
// of the ORIGINAL matrix under p; block distortions satisfy
//   d_original(x, xhat) = d_normalized(x, xhat) + n * shift(empirical(x)).
struct NormalizedDistortion {
  DistortionMatrix matrix;
  std::vector<double> row_mins;

  double shift(const Pmf& p) const;
};

NormalizedDistortion normalize_distortion(const DistortionMatrix& d);

// Lattice constant of a normalized matrix: largest delta > 0 such that every
// positive entry is an integer multiple, 0 for incommensurable entries or the
// all-zero matrix.
double compute_delta(const DistortionMatrix& d);

Pmf empirical(const SourceBlock& x);

double block_distortion(const SourceBlock& x, const ReproBlock& xhat,
                        const DistortionMatrix& d);

// Text formats: "K J" header followed by K rows of J reals; sequences are
// whitespace-separated integer symbols.
DistortionMatrix read_distortion_matrix(std::istream& in);
std::vector<int> read_symbol_sequence(std::istream& in);
void write_symbol_sequence(std::ostream& out, const std::vector<int>& syms);

}  // namespace sflab

#pragma once

#include <cstdint>
#include <vector>

#include "sflab/core_types.hpp"
#include "sflab/rng.hpp"

namespace sflab {

// Ordered bit string with explicit length, MSB-first within each byte.
struct BitString {
  std::vector<std::uint8_t> bytes;
  std::size_t bit_count = 0;

  void push(bool bit);
  bool get(std::size_t pos) const;
};

// A^n codebook of mixture-drawn codewords, materialized on demand: codeword i
// is a pure function of (seed, i), so encoder and decoder only share the
// parameters below.
struct VirtualCodebook {
  VirtualCodebook(std::uint64_t seed, int a, int n, int j);

  std::uint64_t seed;
  int a;  // codebook size parameter, > max(J, K)
  int n;  // block length
  int j;  // reproduction alphabet size

  // ln(A^n) saturated to +inf overflow-free; the encoder never scans past it.
  double log_size() const;
};

// Streams the letters of codeword `index` without materializing the block:
// draws q uniformly on the simplex, then n i.i.d. letters.
class CodewordStream {
 public:
  CodewordStream(const VirtualCodebook& cb, std::uint64_t index);
  int next();

 private:
  CounterRng rng_;
  std::vector<double> q_;
};

ReproBlock codeword(const VirtualCodebook& cb, std::uint64_t index);

struct EncodeResult {
  std::uint64_t index = 0;  // first qualifying codeword, or the scan cap on miss
  BitString bits;
  double length_nats = 0.0;
  bool hit = false;
  std::uint64_t scanned = 0;
};

// Scans i = 1, 2, ... for the first codeword within distortion
// n*D + 1e-9 of x; encodes the index with an Elias delta code. A miss after
// max_scan codewords is an explicit hit = false result, never an error.
EncodeResult encode(const VirtualCodebook& cb, const SourceBlock& x,
                    const DistortionMatrix& d, double distortion_level,
                    std::uint64_t max_scan);

ReproBlock decode(const VirtualCodebook& cb, const BitString& bits);

// Elias delta code over the positive integers.
void elias_delta_encode(std::uint64_t i, BitString& out);
std::uint64_t elias_delta_decode(const BitString& bits, std::size_t& pos);
int elias_delta_bit_length(std::uint64_t i);
double length_nats(std::uint64_t i);

// Single-block container, bit-exact:
//   "SFC1" | n:u32 LE | J:u16 LE | A:u16 LE | seed:u64 LE |
//   payload bit-length:u32 LE | payload bits padded to a byte.
std::vector<std::uint8_t> write_container(const VirtualCodebook& cb, const BitString& payload);
struct Container {
  VirtualCodebook codebook;
  BitString payload;
};
Container read_container(const std::vector<std::uint8_t>& bytes);

// Distortion grid with entries on {0, d_max/resolution, ..., d_max}.
DistortionMatrix sample_grid_matrix(double d_max, int k, int j, int resolution,
                                    CounterRng& rng);
DistortionMatrix snap_to_grid(const DistortionMatrix& d, double d_max, int resolution);

}  // namespace sflab

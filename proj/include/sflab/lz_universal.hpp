#pragma once

#include <cstdint>
#include <functional>

#include "sflab/codec.hpp"
#include "sflab/core_types.hpp"
#include "sflab/success_prob.hpp"

namespace sflab {

// One LZ78 phrase: the dictionary index of its longest proper prefix plus one
// fresh letter. letter < 0 marks a final phrase that repeats an existing
// dictionary entry (input ended mid-phrase).
struct LzPhrase {
  int prefix;
  int letter;
};

struct LzParse {
  std::vector<LzPhrase> phrases;

  int phrase_count() const { return static_cast<int>(phrases.size()); }
  std::vector<int> reconstruct() const;
};

LzParse lz78_parse(const ReproBlock& xhat);
int lz78_phrase_count(const ReproBlock& xhat);

// Code-length functional LZ(xhat) = [c+1] log2(2 * alpha * [c+1]) bits. The
// alphabet factor is parameterized; blocks default to their reproduction
// alphabet size.
double lz_codelength_bits(int phrase_count, int alphabet_factor);
double lz_codelength_bits(const ReproBlock& xhat);

// Largest number of distinct phrases whose concatenation forms xhat, by
// branch and bound. Guarded to n <= 24.
int max_distinct_parse(const ReproBlock& xhat);

// Finite-state converse bound: exact minimum over the distortion sphere of
//   [c(xhat) + s^2] log2((c(xhat) + s^2) / (4 s^2)) + 2 s^2,
// with c() taken as the LZ78 incremental phrase count. Enumerates the sphere;
// guarded to J^n <= 2^20.
struct FsBound {
  double bits;
  ReproBlock argmin;
};
FsBound fs_lower_bound(const SourceBlock& x, const DistortionMatrix& d,
                       double distortion_level, int states);

// General-distortion variant: the sphere membership test is a caller-supplied
// functional on block pairs; everything else is unchanged.
using BlockDistortionFn = std::function<double(const SourceBlock&, const ReproBlock&)>;
FsBound fs_lower_bound_general(const SourceBlock& x, const BlockDistortionFn& dist,
                               int repro_alphabet, double total_budget, int states);

enum class LzNormalizer { exact_enum, kraft_bound };

// ln W(xhat) for W(xhat) proportional to 2^{-LZ(xhat)}. exact_enum computes
// the normalizer by full enumeration; kraft_bound returns the unnormalized
// value, a valid lower bound since the normalizer is at most 1.
double log_lz_mixture_weight(const ReproBlock& xhat, LzNormalizer mode);

struct LzSuccess {
  SuccessProb prob;      // exact sphere sum of the normalized LZ mixture
  double min_lz_bits;    // min over the sphere of LZ(xhat), repro-alphabet factor
  double min_lz_bits_src_factor;  // same minimum under the source-alphabet factor
  int sphere_min_phrases;         // phrase count achieving the minimum
  double sphere_size;    // number of reproduction blocks in the sphere
  double log_normalizer; // ln sum 2^{-LZ}; <= 0 by the Kraft chain
};

LzSuccess lz_success_prob(const SourceBlock& x, const DistortionMatrix& d,
                          double distortion_level);
LzSuccess lz_success_prob_general(const SourceBlock& x, const BlockDistortionFn& dist,
                                  int repro_alphabet, double total_budget);

// First-hit encoder with codewords drawn i.i.d. from the LZ mixture: exact
// alias-table sampling after full enumeration for n <= 12, rejection sampling
// against the Kraft-unnormalized weights for 12 < n <= 20.
EncodeResult lz_encode(const SourceBlock& x, const DistortionMatrix& d,
                       double distortion_level, std::uint64_t cb_seed,
                       std::uint64_t max_scan);

}  // namespace sflab

#include "sflab/codec.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "sflab/numeric.hpp"

namespace sflab {

namespace {

constexpr double kHitSlack = 1e-9;

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
  out.push_back(static_cast<std::uint8_t>(v & 0xff));
  out.push_back(static_cast<std::uint8_t>(v >> 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>((v >> (8 * i)) & 0xff));
}

std::uint64_t get_le(const std::vector<std::uint8_t>& in, std::size_t at, int nbytes) {
  if (at + nbytes > in.size()) throw std::runtime_error("container truncated");
  std::uint64_t v = 0;
  for (int i = 0; i < nbytes; ++i) v |= static_cast<std::uint64_t>(in[at + i]) << (8 * i);
  return v;
}

}  // namespace

void BitString::push(bool bit) {
  if (bit_count % 8 == 0) bytes.push_back(0);
  if (bit) bytes.back() |= static_cast<std::uint8_t>(0x80u >> (bit_count % 8));
  ++bit_count;
}

bool BitString::get(std::size_t pos) const {
  if (pos >= bit_count) throw std::out_of_range("bit string exhausted");
  return (bytes[pos / 8] >> (7 - pos % 8)) & 1u;
}

VirtualCodebook::VirtualCodebook(std::uint64_t s, int a_, int n_, int j_)
    : seed(s), a(a_), n(n_), j(j_) {
  if (n < 1) throw std::invalid_argument("block length must be positive");
  if (j < 1) throw std::invalid_argument("reproduction alphabet must be nonempty");
  if (a <= j) throw std::invalid_argument("codebook base A must exceed max(J, K)");
}

double VirtualCodebook::log_size() const { return n * std::log(static_cast<double>(a)); }

CodewordStream::CodewordStream(const VirtualCodebook& cb, std::uint64_t index)
    : rng_(cb.seed, index), q_(sample_simplex(cb.j, rng_)) {}

int CodewordStream::next() { return sample_letter(q_, rng_.next_unit()); }

ReproBlock codeword(const VirtualCodebook& cb, std::uint64_t index) {
  if (index < 1) throw std::invalid_argument("codeword indices start at 1");
  CodewordStream stream(cb, index);
  std::vector<int> syms(cb.n);
  for (int i = 0; i < cb.n; ++i) syms[i] = stream.next();
  return ReproBlock(std::move(syms), cb.j);
}

int elias_delta_bit_length(std::uint64_t i) {
  const int nbits = std::bit_width(i);
  const int lbits = std::bit_width(static_cast<std::uint64_t>(nbits));
  return nbits + 2 * lbits - 2;
}

double length_nats(std::uint64_t i) {
  if (i < 1) throw std::invalid_argument("index must be >= 1");
  return elias_delta_bit_length(i) * kLn2;
}

void elias_delta_encode(std::uint64_t i, BitString& out) {
  if (i < 1) throw std::invalid_argument("index must be >= 1");
  const int nbits = std::bit_width(i);
  const int lbits = std::bit_width(static_cast<std::uint64_t>(nbits));
  for (int b = 0; b < lbits - 1; ++b) out.push(false);
  for (int b = lbits - 1; b >= 0; --b) out.push((nbits >> b) & 1);
  for (int b = nbits - 2; b >= 0; --b) out.push((i >> b) & 1);
}

std::uint64_t elias_delta_decode(const BitString& bits, std::size_t& pos) {
  int zeros = 0;
  while (!bits.get(pos)) {
    ++pos;
    if (++zeros > 63) throw std::runtime_error("malformed index code");
  }
  ++pos;  // leading 1 of the length field
  std::uint64_t nbits = 1;
  for (int b = 0; b < zeros; ++b) nbits = (nbits << 1) | (bits.get(pos++) ? 1u : 0u);
  if (nbits > 64) throw std::runtime_error("malformed index code");
  std::uint64_t value = 1;
  for (std::uint64_t b = 1; b < nbits; ++b) value = (value << 1) | (bits.get(pos++) ? 1u : 0u);
  return value;
}

EncodeResult encode(const VirtualCodebook& cb, const SourceBlock& x,
                    const DistortionMatrix& d, double distortion_level,
                    std::uint64_t max_scan) {
  if (max_scan < 1) throw std::invalid_argument("max_scan must be >= 1");
  if (x.n() != cb.n) throw std::invalid_argument("block length does not match codebook");
  if (cb.a <= x.alphabet_size)
    throw std::invalid_argument("codebook base A must exceed max(J, K)");
  // Indices beyond A^n are never requested.
  std::uint64_t cap = max_scan;
  if (cb.log_size() < 63 * kLn2) {
    std::uint64_t size = 1;
    for (int i = 0; i < cb.n; ++i) size *= static_cast<std::uint64_t>(cb.a);
    cap = std::min(cap, size);
  }

  const double limit = cb.n * distortion_level + kHitSlack;
  EncodeResult res;
  for (std::uint64_t i = 1; i <= cap; ++i) {
    CodewordStream stream(cb, i);
    double dist = 0.0;
    bool ok = true;
    for (int t = 0; t < cb.n; ++t) {
      dist += d(x.symbols[t], stream.next());
      if (dist > limit) {
        ok = false;
        break;
      }
    }
    if (ok) {
      res.index = i;
      res.hit = true;
      res.scanned = i;
      elias_delta_encode(i, res.bits);
      res.length_nats = length_nats(i);
      return res;
    }
  }
  res.index = cap;
  res.hit = false;
  res.scanned = cap;
  elias_delta_encode(cap, res.bits);
  res.length_nats = length_nats(cap);
  return res;
}

ReproBlock decode(const VirtualCodebook& cb, const BitString& bits) {
  std::size_t pos = 0;
  const std::uint64_t index = elias_delta_decode(bits, pos);
  if (pos != bits.bit_count) throw std::runtime_error("trailing bits after index code");
  return codeword(cb, index);
}

std::vector<std::uint8_t> write_container(const VirtualCodebook& cb, const BitString& payload) {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), {'S', 'F', 'C', '1'});
  put_u32(out, static_cast<std::uint32_t>(cb.n));
  put_u16(out, static_cast<std::uint16_t>(cb.j));
  put_u16(out, static_cast<std::uint16_t>(cb.a));
  put_u64(out, cb.seed);
  put_u32(out, static_cast<std::uint32_t>(payload.bit_count));
  out.insert(out.end(), payload.bytes.begin(), payload.bytes.end());
  return out;
}

Container read_container(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "SFC1", 4) != 0)
    throw std::runtime_error("bad container magic");
  const auto n = static_cast<int>(get_le(bytes, 4, 4));
  const auto j = static_cast<int>(get_le(bytes, 8, 2));
  const auto a = static_cast<int>(get_le(bytes, 10, 2));
  const std::uint64_t seed = get_le(bytes, 12, 8);
  const auto bit_count = static_cast<std::size_t>(get_le(bytes, 20, 4));
  const std::size_t payload_bytes = (bit_count + 7) / 8;
  if (bytes.size() < 24 + payload_bytes) throw std::runtime_error("container truncated");
  BitString payload;
  payload.bytes.assign(bytes.begin() + 24, bytes.begin() + 24 + payload_bytes);
  payload.bit_count = bit_count;
  return Container{VirtualCodebook(seed, a, n, j), std::move(payload)};
}

DistortionMatrix sample_grid_matrix(double d_max, int k, int j, int resolution,
                                    CounterRng& rng) {
  if (resolution < 1) throw std::invalid_argument("grid resolution must be >= 1");
  const double step = d_max / resolution;
  std::vector<double> entries(static_cast<std::size_t>(k) * j);
  for (auto& e : entries)
    e = step * rng.next_below(static_cast<std::uint32_t>(resolution) + 1);
  return DistortionMatrix(k, j, std::move(entries));
}

DistortionMatrix snap_to_grid(const DistortionMatrix& d, double d_max, int resolution) {
  if (resolution < 1) throw std::invalid_argument("grid resolution must be >= 1");
  const double step = d_max / resolution;
  std::vector<double> entries(d.entries().size());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    double snapped = std::round(d.entries()[i] / step) * step;
    snapped = std::clamp(snapped, 0.0, d_max);
    entries[i] = snapped;
  }
  return DistortionMatrix(d.source_size(), d.repro_size(), std::move(entries));
}

}  // namespace sflab

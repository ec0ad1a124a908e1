#include "sflab/lz_universal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "sflab/numeric.hpp"

namespace sflab {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kSphereSlack = 1e-9;

void check_space(int n, int j, double limit) {
  if (n * std::log(static_cast<double>(j)) > std::log(limit))
    throw std::runtime_error("instance too large for sphere enumeration");
}

// Odometer over all J^n reproduction blocks in lexicographic order.
bool advance(std::vector<int>& syms, int j) {
  for (int i = static_cast<int>(syms.size()) - 1; i >= 0; --i) {
    if (++syms[i] < j) return true;
    syms[i] = 0;
  }
  return false;
}

int parse_count(const std::vector<int>& syms, int j) {
  std::unordered_map<std::uint64_t, int> trie;
  int node = 0;
  int next_id = 1;
  int count = 0;
  for (int c : syms) {
    const std::uint64_t key = static_cast<std::uint64_t>(node) * j + c;
    const auto it = trie.find(key);
    if (it != trie.end()) {
      node = it->second;
    } else {
      trie.emplace(key, next_id++);
      ++count;
      node = 0;
    }
  }
  if (node != 0) ++count;  // trailing repeat of an existing phrase
  return count;
}

// Smallest possible LZ78 phrase count for length n: phrase k has length at
// most k, so c(c+1)/2 >= n; a constant block attains it.
int min_phrase_count(int n) {
  int c = 1;
  while (c * (c + 1) / 2 < n) ++c;
  return c;
}

struct WalkerAlias {
  std::vector<double> prob;
  std::vector<std::uint32_t> alias;

  void build(const std::vector<double>& weights) {
    const std::size_t n = weights.size();
    prob.assign(n, 0.0);
    alias.assign(n, 0);
    double total = 0.0;
    for (double w : weights) total += w;
    std::vector<double> scaled(n);
    for (std::size_t i = 0; i < n; ++i) scaled[i] = weights[i] * n / total;
    std::vector<std::uint32_t> small, large;
    for (std::size_t i = 0; i < n; ++i)
      (scaled[i] < 1.0 ? small : large).push_back(static_cast<std::uint32_t>(i));
    while (!small.empty() && !large.empty()) {
      const std::uint32_t s = small.back();
      const std::uint32_t l = large.back();
      small.pop_back();
      prob[s] = scaled[s];
      alias[s] = l;
      scaled[l] -= 1.0 - scaled[s];
      if (scaled[l] < 1.0) {
        large.pop_back();
        small.push_back(l);
      }
    }
    for (std::uint32_t i : large) prob[i] = 1.0;
    for (std::uint32_t i : small) prob[i] = 1.0;
  }

  std::size_t draw(CounterRng& rng) const {
    const auto slot = static_cast<std::size_t>(
        rng.next_below(static_cast<std::uint32_t>(prob.size())));
    return rng.next_unit() < prob[slot] ? slot : alias[slot];
  }
};

std::vector<int> nth_block(std::uint64_t id, int n, int j) {
  std::vector<int> syms(n);
  for (int i = n - 1; i >= 0; --i) {
    syms[i] = static_cast<int>(id % j);
    id /= j;
  }
  return syms;
}

}  // namespace

std::vector<int> LzParse::reconstruct() const {
  std::vector<std::vector<int>> strings{{}};  // node 0 is the empty phrase
  std::vector<int> out;
  for (const LzPhrase& ph : phrases) {
    std::vector<int> s = strings[ph.prefix];
    if (ph.letter >= 0) {
      s.push_back(ph.letter);
      strings.push_back(s);
    }
    out.insert(out.end(), s.begin(), s.end());
  }
  return out;
}

LzParse lz78_parse(const ReproBlock& xhat) {
  if (xhat.n() < 1) throw std::invalid_argument("cannot parse an empty block");
  std::unordered_map<std::uint64_t, int> trie;
  LzParse parse;
  int node = 0;
  int next_id = 1;
  for (int c : xhat.symbols) {
    const std::uint64_t key =
        static_cast<std::uint64_t>(node) * xhat.alphabet_size + c;
    const auto it = trie.find(key);
    if (it != trie.end()) {
      node = it->second;
    } else {
      parse.phrases.push_back({node, c});
      trie.emplace(key, next_id++);
      node = 0;
    }
  }
  if (node != 0) parse.phrases.push_back({node, -1});
  return parse;
}

int lz78_phrase_count(const ReproBlock& xhat) {
  return parse_count(xhat.symbols, xhat.alphabet_size);
}

double lz_codelength_bits(int phrase_count, int alphabet_factor) {
  const double c1 = phrase_count + 1.0;
  return c1 * std::log2(2.0 * alphabet_factor * c1);
}

double lz_codelength_bits(const ReproBlock& xhat) {
  return lz_codelength_bits(lz78_phrase_count(xhat), xhat.alphabet_size);
}

int max_distinct_parse(const ReproBlock& xhat) {
  const int n = xhat.n();
  if (n > 24) throw std::runtime_error("max_distinct_parse is guarded to n <= 24");
  const int j = xhat.alphabet_size;

  // min_total[t]: least total length of t pairwise-distinct strings (J of
  // length 1, J^2 of length 2, ...); ub[m] = largest t with min_total[t] <= m.
  std::vector<int> min_total{0};
  {
    long long level_cap = j, used = 0;
    int len = 1;
    while (min_total.back() <= n) {
      if (used == level_cap) {
        ++len;
        level_cap = std::min<long long>(level_cap * j, n + 1);
        used = 0;
      }
      min_total.push_back(min_total.back() + len);
      ++used;
    }
  }
  std::vector<int> ub(n + 1, 0);
  for (int m = 1; m <= n; ++m) {
    int t = 0;
    while (t + 1 < static_cast<int>(min_total.size()) && min_total[t + 1] <= m) ++t;
    ub[m] = std::max(t, 1);
  }

  int best = 0;
  std::set<std::string> used;
  long long nodes = 0;
  std::function<void(int, int)> dfs = [&](int pos, int count) {
    if (++nodes > 5'000'000)
      throw std::runtime_error("max_distinct_parse search budget exceeded");
    if (pos == n) {
      best = std::max(best, count);
      return;
    }
    if (count + ub[n - pos] <= best) return;
    for (int len = 1; pos + len <= n; ++len) {
      std::string phrase(xhat.symbols.begin() + pos, xhat.symbols.begin() + pos + len);
      if (pos + len < n && used.count(phrase)) continue;  // last phrase may repeat
      const bool inserted = used.insert(phrase).second;
      dfs(pos + len, count + 1);
      if (inserted) used.erase(phrase);
    }
  };
  dfs(0, 0);
  return best;
}

FsBound fs_lower_bound(const SourceBlock& x, const DistortionMatrix& d,
                       double distortion_level, int states) {
  check_space(x.n(), d.repro_size(), 1 << 20);
  const int n = x.n();
  const int j = d.repro_size();
  const double limit = n * distortion_level + kSphereSlack;
  const double s2 = static_cast<double>(states) * states;

  double best = kInf;
  std::vector<int> best_syms;
  std::vector<int> syms(n, 0);
  do {
    double dist = 0.0;
    bool inside = true;
    for (int i = 0; i < n; ++i) {
      dist += d(x.symbols[i], syms[i]);
      if (dist > limit) {
        inside = false;
        break;
      }
    }
    if (!inside) continue;
    const double c = parse_count(syms, j);
    const double value = (c + s2) * std::log2((c + s2) / (4.0 * s2)) + 2.0 * s2;
    if (value < best) {
      best = value;
      best_syms = syms;
    }
  } while (advance(syms, j));
  if (!std::isfinite(best)) throw std::domain_error("distortion sphere is empty");
  return FsBound{best, ReproBlock(std::move(best_syms), j)};
}

FsBound fs_lower_bound_general(const SourceBlock& x, const BlockDistortionFn& dist,
                               int repro_alphabet, double total_budget, int states) {
  check_space(x.n(), repro_alphabet, 1 << 20);
  const int n = x.n();
  const double s2 = static_cast<double>(states) * states;
  double best = kInf;
  std::vector<int> best_syms;
  std::vector<int> syms(n, 0);
  do {
    const ReproBlock candidate(syms, repro_alphabet);
    if (dist(x, candidate) > total_budget + kSphereSlack) continue;
    const double c = parse_count(syms, repro_alphabet);
    const double value = (c + s2) * std::log2((c + s2) / (4.0 * s2)) + 2.0 * s2;
    if (value < best) {
      best = value;
      best_syms = syms;
    }
  } while (advance(syms, repro_alphabet));
  if (!std::isfinite(best)) throw std::domain_error("distortion sphere is empty");
  return FsBound{best, ReproBlock(std::move(best_syms), repro_alphabet)};
}

double log_lz_mixture_weight(const ReproBlock& xhat, LzNormalizer mode) {
  const double own_bits = lz_codelength_bits(xhat);
  if (mode == LzNormalizer::kraft_bound) return -own_bits * kLn2;
  check_space(xhat.n(), xhat.alphabet_size, 1e7);
  KahanSum norm;
  std::vector<int> syms(xhat.n(), 0);
  do {
    norm.add(std::exp2(-lz_codelength_bits(parse_count(syms, xhat.alphabet_size),
                                           xhat.alphabet_size)));
  } while (advance(syms, xhat.alphabet_size));
  return -own_bits * kLn2 - std::log(norm.value());
}

namespace {

LzSuccess lz_success_impl(const SourceBlock& x, int j, int src_alphabet,
                          const std::function<bool(const std::vector<int>&)>& in_sphere) {
  KahanSum norm, sphere_mass;
  int min_phrases = -1;
  double sphere_count = 0.0;
  std::vector<int> syms(x.n(), 0);
  do {
    const int phrases = parse_count(syms, j);
    const double bits = lz_codelength_bits(phrases, j);
    const double w = std::exp2(-bits);
    norm.add(w);
    if (in_sphere(syms)) {
      sphere_mass.add(w);
      if (min_phrases < 0 || phrases < min_phrases) min_phrases = phrases;
      sphere_count += 1.0;
    }
  } while (advance(syms, j));

  LzSuccess out;
  out.prob.source = ProbSource::exact_enum;
  const double p = sphere_mass.value() / norm.value();
  out.prob.log_value = p > 0.0 ? std::log(std::min(p, 1.0)) : -kInf;
  // The codelength is monotone in the phrase count, so the sphere minimum is
  // attained at min_phrases under either alphabet factor.
  out.sphere_min_phrases = min_phrases;
  out.min_lz_bits = min_phrases >= 0 ? lz_codelength_bits(min_phrases, j) : kInf;
  out.min_lz_bits_src_factor =
      min_phrases >= 0 ? lz_codelength_bits(min_phrases, src_alphabet) : kInf;
  out.sphere_size = sphere_count;
  out.log_normalizer = std::log(norm.value());
  return out;
}

}  // namespace

LzSuccess lz_success_prob(const SourceBlock& x, const DistortionMatrix& d,
                          double distortion_level) {
  check_space(x.n(), d.repro_size(), 1e7);
  const double limit = x.n() * distortion_level + kSphereSlack;
  return lz_success_impl(x, d.repro_size(), d.source_size(),
                         [&](const std::vector<int>& syms) {
                           double dist = 0.0;
                           for (int i = 0; i < x.n(); ++i) {
                             dist += d(x.symbols[i], syms[i]);
                             if (dist > limit) return false;
                           }
                           return true;
                         });
}

LzSuccess lz_success_prob_general(const SourceBlock& x, const BlockDistortionFn& dist,
                                  int repro_alphabet, double total_budget) {
  check_space(x.n(), repro_alphabet, 1e7);
  return lz_success_impl(x, repro_alphabet, x.alphabet_size,
                         [&](const std::vector<int>& syms) {
                           return dist(x, ReproBlock(syms, repro_alphabet)) <=
                                  total_budget + kSphereSlack;
                         });
}

EncodeResult lz_encode(const SourceBlock& x, const DistortionMatrix& d,
                       double distortion_level, std::uint64_t cb_seed,
                       std::uint64_t max_scan) {
  if (max_scan < 1) throw std::invalid_argument("max_scan must be >= 1");
  const int n = x.n();
  const int j = d.repro_size();
  if (n > 20) throw std::runtime_error("lz_encode is guarded to n <= 20");
  const double limit = n * distortion_level + kSphereSlack;

  const bool exact = n <= 12 && n * std::log(static_cast<double>(j)) <= std::log(1e7);
  WalkerAlias alias;
  std::uint64_t space = 1;
  if (exact) {
    for (int i = 0; i < n; ++i) space *= static_cast<std::uint64_t>(j);
    std::vector<double> weights(space);
    std::vector<int> syms(n, 0);
    std::uint64_t id = 0;
    do {
      weights[id++] = std::exp2(-lz_codelength_bits(parse_count(syms, j), j));
    } while (advance(syms, j));
    alias.build(weights);
  }
  const double min_bits = lz_codelength_bits(min_phrase_count(n), j);

  auto draw_block = [&](std::uint64_t index) {
    CounterRng rng(cb_seed, index);
    if (exact) return nth_block(alias.draw(rng), n, j);
    for (long tries = 0; tries < 10'000'000; ++tries) {
      std::vector<int> syms(n);
      for (int i = 0; i < n; ++i)
        syms[i] = static_cast<int>(rng.next_below(static_cast<std::uint32_t>(j)));
      const double bits = lz_codelength_bits(parse_count(syms, j), j);
      if (rng.next_unit() < std::exp2(min_bits - bits)) return syms;
    }
    throw std::runtime_error("lz mixture rejection sampler stalled");
  };

  EncodeResult res;
  for (std::uint64_t i = 1; i <= max_scan; ++i) {
    const auto syms = draw_block(i);
    double dist = 0.0;
    bool ok = true;
    for (int t = 0; t < n; ++t) {
      dist += d(x.symbols[t], syms[t]);
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
  res.index = max_scan;
  res.hit = false;
  res.scanned = max_scan;
  elias_delta_encode(max_scan, res.bits);
  res.length_nats = length_nats(max_scan);
  return res;
}

}  // namespace sflab

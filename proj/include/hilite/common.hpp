#pragma once

#include <cstdint>
#include <fstream>
#include <functional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hilite {

/// Runtime failure inside a pipeline stage (bad input file, invalid config,
/// divergence). The CLI maps it to exit status 1.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Strings
// ---------------------------------------------------------------------------

std::string to_lower(std::string_view s);
std::string_view trim(std::string_view s);

/// Lowercases and collapses runs of whitespace to a single space.
/// Used as the map key for queries.
std::string normalize_query(std::string_view q);

std::vector<std::string_view> split(std::string_view s, char sep);

/// True if the token has at least one ASCII letter or digit, or any
/// non-ASCII byte.
bool has_word_char(std::string_view s);

/// Quote a CSV field when it contains a comma, quote or newline.
std::string csv_escape(std::string_view s);

/// Parse one CSV record (RFC 4180 quoting, single line).
std::vector<std::string> csv_parse_line(std::string_view line);

/// Fixed-point formatting with `digits` decimals, locale independent.
std::string format_fixed(double v, int digits);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::ifstream open_input(const std::string& path);
std::ofstream open_output(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);

// ---------------------------------------------------------------------------
// Deterministic randomness
// ---------------------------------------------------------------------------

/// 64-bit FNV-1a. Stable across platforms, unlike std::hash.
std::uint64_t fnv1a64(std::string_view s, std::uint64_t seed = 0);

/// Seeded generator with platform-independent derived distributions.
/// std::uniform_*_distribution output differs between standard libraries,
/// so everything here is built from raw mt19937_64 words.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer in [0, n). n must be > 0.
  std::size_t index(std::size_t n);
  /// Uniform integer in [lo, hi].
  int range(int lo, int hi);
  bool bernoulli(double p) { return uniform() < p; }
  /// Standard normal via Box-Muller.
  double normal();

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[index(i)]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// Derive an independent stream seed from a base seed and a label.
std::uint64_t derive_seed(std::uint64_t base, std::string_view label);

// ---------------------------------------------------------------------------
// Parallelism
// ---------------------------------------------------------------------------

/// Number of workers to use when the caller passes 0.
unsigned default_threads();

/// Runs fn(i) for i in [0, n) over `threads` workers using static contiguous
/// chunks. fn must only write to slot i of caller-owned storage; results are
/// then reduced by the caller in index order, which keeps output independent
/// of the worker count.
void parallel_for(std::size_t n, unsigned threads,
                  const std::function<void(std::size_t)>& fn);

}  // namespace hilite

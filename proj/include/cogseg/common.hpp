// cogseg/common.hpp
//
// Shared small utilities: error taxonomy, log-domain arithmetic, seeded
// RNG streams and UTF-8 code point splitting.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace cogseg {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// ---------------------------------------------------------------------------
// Errors. The CLI maps these onto exit codes: ConfigError -> 2,
// DataError -> 3, NumericError -> 4.
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : Error {
  using Error::Error;
};
struct DataError : Error {
  using Error::Error;
};
struct NumericError : Error {
  using Error::Error;
};

struct MissingPhone : DataError {
  explicit MissingPhone(const std::string& phone)
      : DataError("MissingPhone: unknown phone '" + phone + "'") {}
};
struct MissingFeature : DataError {
  explicit MissingFeature(const std::string& what)
      : DataError("MissingFeature: " + what) {}
};
struct MissingChar : DataError {
  explicit MissingChar(const std::string& c)
      : DataError("MissingChar: unknown lost character '" + c + "'") {}
};
struct InvalidTemperature : ConfigError {
  explicit InvalidTemperature(double t)
      : ConfigError("InvalidTemperature: T must be > 0, got " +
                    std::to_string(t)) {}
};
struct InvalidInput : DataError {
  using DataError::DataError;
};
struct EmptyVocabulary : DataError {
  EmptyVocabulary() : DataError("EmptyVocabulary: vocabulary has no stems") {}
};
struct SpanLengthOutOfRange : DataError {
  SpanLengthOutOfRange(int len, int lo, int hi)
      : DataError("SpanLengthOutOfRange: span length " + std::to_string(len) +
                  " outside [" + std::to_string(lo) + ", " +
                  std::to_string(hi) + "]") {}
};
struct ParseError : DataError {
  ParseError(const std::string& file, int line, const std::string& what)
      : DataError("ParseError: " + file + ":" + std::to_string(line) + ": " +
                  what) {}
};
struct SpecError : ConfigError {
  using ConfigError::ConfigError;
};
struct NonFiniteError : NumericError {
  explicit NonFiniteError(const std::string& where)
      : NumericError("NonFiniteError: non-finite value in " + where) {}
};
struct InvalidK : ConfigError {
  explicit InvalidK(int k)
      : ConfigError("InvalidK: k must be >= 1, got " + std::to_string(k)) {}
};

// ---------------------------------------------------------------------------
// Log-domain arithmetic.
// ---------------------------------------------------------------------------

// log(exp(a) + exp(b)), safe for -inf operands.
inline double log_add(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = a > b ? a : b;
  const double lo = a > b ? b : a;
  return hi + std::log1p(std::exp(lo - hi));
}

inline double log_sum_exp(const double* v, std::size_t n) {
  double hi = kNegInf;
  for (std::size_t i = 0; i < n; ++i)
    if (v[i] > hi) hi = v[i];
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::exp(v[i] - hi);
  return hi + std::log(s);
}

inline double log_sum_exp(const std::vector<double>& v) {
  return log_sum_exp(v.data(), v.size());
}

// Signed log-domain value: sign * exp(lg). Used by the backward passes of
// the boundary DPs, where adjoints can be negative but span hundreds of
// orders of magnitude.
struct SLog {
  double lg = kNegInf;  // log magnitude
  double sign = 1.0;    // +1 or -1 (irrelevant when lg == -inf)

  static SLog zero() { return SLog{}; }
  static SLog from_log(double lg, double sign = 1.0) { return SLog{lg, sign}; }
  static SLog from_double(double x) {
    if (x == 0.0) return SLog{};
    return SLog{std::log(std::fabs(x)), x > 0 ? 1.0 : -1.0};
  }
  double to_double() const { return sign * std::exp(lg); }
  bool is_zero() const { return lg == kNegInf; }
};

inline SLog sl_add(SLog a, SLog b) {
  if (a.is_zero()) return b;
  if (b.is_zero()) return a;
  if (a.sign == b.sign) return SLog{log_add(a.lg, b.lg), a.sign};
  // Opposite signs: subtract magnitudes.
  const SLog& hi = a.lg >= b.lg ? a : b;
  const SLog& lo = a.lg >= b.lg ? b : a;
  const double d = lo.lg - hi.lg;  // <= 0
  const double m = 1.0 - std::exp(d);
  if (m <= 0.0) return SLog{};  // exact cancellation
  return SLog{hi.lg + std::log(m), hi.sign};
}

// a * exp(log_b) for positive multiplier given in log space.
inline SLog sl_mul_log(SLog a, double log_b) {
  if (a.is_zero() || log_b == kNegInf) return SLog{};
  return SLog{a.lg + log_b, a.sign};
}

// ---------------------------------------------------------------------------
// Deterministic RNG streams. All randomness in the project flows from one
// 64-bit seed; independent streams are derived by hashing a stream tag into
// the seed with splitmix64.
// ---------------------------------------------------------------------------

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline std::uint64_t derive_stream(std::uint64_t seed, std::string_view tag) {
  std::uint64_t h = seed;
  for (char c : tag) h = splitmix64(h ^ static_cast<std::uint8_t>(c));
  return splitmix64(h);
}

inline std::mt19937_64 make_rng(std::uint64_t seed, std::string_view tag) {
  return std::mt19937_64(derive_stream(seed, tag));
}

// ---------------------------------------------------------------------------
// UTF-8 helpers. Lost-language text is treated as a sequence of code points.
// ---------------------------------------------------------------------------

inline std::vector<std::string> utf8_split(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const unsigned char b = static_cast<unsigned char>(s[i]);
    std::size_t len = 1;
    if ((b & 0x80u) == 0x00u)
      len = 1;
    else if ((b & 0xe0u) == 0xc0u)
      len = 2;
    else if ((b & 0xf0u) == 0xe0u)
      len = 3;
    else if ((b & 0xf8u) == 0xf0u)
      len = 4;
    if (i + len > s.size()) len = 1;  // tolerate truncated trailing byte
    out.emplace_back(s.substr(i, len));
    i += len;
  }
  return out;
}

inline bool is_finite(double x) { return std::isfinite(x); }

}  // namespace cogseg

#include <cmath>
#include <limits>
#include <numbers>

#include "likspec/error.hpp"
#include "likspec/rng.hpp"

namespace likspec {

int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kIo:
      return 2;
    case ErrorCode::kDegenerate:
    case ErrorCode::kNumeric:
    case ErrorCode::kTraining:
      return 3;
    default:
      return 1;
  }
}

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kDuplicateId: return "duplicate-id";
    case ErrorCode::kTooShort: return "too-short";
    case ErrorCode::kDegenerate: return "degenerate-input";
    case ErrorCode::kPairConflict: return "pair-conflict";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kGridMismatch: return "grid-mismatch";
    case ErrorCode::kNotFitted: return "not-fitted";
    case ErrorCode::kTraining: return "training";
    case ErrorCode::kConfig: return "config";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kNumeric: return "numeric";
  }
  return "unknown";
}

std::uint64_t Rng::index(std::uint64_t n) {
  // Largest multiple of n representable; draws at or above it are rejected.
  const std::uint64_t limit =
      std::numeric_limits<std::uint64_t>::max() -
      std::numeric_limits<std::uint64_t>::max() % n;
  std::uint64_t r;
  do {
    r = engine_();
  } while (r >= limit);
  return r % n;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  double u1;
  do {
    u1 = uniform();
  } while (u1 <= 0.0);
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(theta);
  has_spare_ = true;
  return r * std::cos(theta);
}

std::uint64_t stable_hash(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t mix_seed(std::uint64_t seed, std::string_view key) {
  // splitmix64 finalizer over the combined value
  std::uint64_t z = seed ^ stable_hash(key);
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace likspec

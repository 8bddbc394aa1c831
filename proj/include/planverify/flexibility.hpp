#pragma once

// Strictness weights and the seeded sampling of the active constraint set.
//
// Every soft constraint is included independently with probability equal to
// its weight. Draws come from SplitMix64 (Steele, Lea & Flood, "Fast
// splittable pseudorandom number generators", OOPSLA 2014) so that a seed
// reproduces the same set in any implementation:
//
//   state += 0x9E3779B97F4A7C15
//   z = (state ^ (state >> 30)) * 0xBF58476D1CE4E5B9
//   z = (z ^ (z >> 27)) * 0x94D049BB133111EB
//   return z ^ (z >> 31)
//
// A uniform double in [0,1) is the top 53 bits of one output times 2^-53.
// Constraints are visited in ascending byte order of their id and each
// consumes exactly one draw, hard ones included.

#include <algorithm>
#include <cmath>
#include <ranges>
#include <cstdint>
#include <string>
#include <vector>

#include "planverify/error.hpp"

namespace planverify {

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Seed for the k-th verification of a run: output k+1 of SplitMix64(seed).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t k) noexcept {
  SplitMix64 g(seed + k * 0x9E3779B97F4A7C15ULL);
  return g.next();
}

/// A strictness in [0,1]; 1 is a hard rule. The UI shows it as percent.
class StrictnessWeight {
 public:
  constexpr StrictnessWeight() = default;

  explicit StrictnessWeight(double value) : value_(value) {
    if (!(value >= 0.0 && value <= 1.0))
      throw Error(ErrorCode::WeightOutOfRange,
                  "strictness " + std::to_string(value) + " is outside [0, 1]");
  }

  static StrictnessWeight from_percent(double percent) { return StrictnessWeight(percent / 100.0); }

  constexpr double value() const noexcept { return value_; }
  double percent() const noexcept { return value_ * 100.0; }

  friend constexpr bool operator==(StrictnessWeight, StrictnessWeight) = default;

 private:
  double value_ = 1.0;
};

enum class Hardness { Hard, Soft };

inline const char* to_string(Hardness h) { return h == Hardness::Hard ? "hard" : "soft"; }

inline Hardness classify(StrictnessWeight w) noexcept {
  return w.value() == 1.0 ? Hardness::Hard : Hardness::Soft;
}

struct SampleDraw {
  std::string id;
  double weight = 1.0;
  double draw = 0.0;
  bool included = false;

  friend bool operator==(const SampleDraw&, const SampleDraw&) = default;
};

struct SampledSet {
  std::vector<std::string> included;
  std::uint64_t seed = 0;
  std::vector<SampleDraw> draws;

  bool contains(const std::string& id) const {
    return std::find(included.begin(), included.end(), id) != included.end();
  }

  friend bool operator==(const SampledSet&, const SampledSet&) = default;
};

/// `Constraints` is any range of records exposing `id`, `strictness` and
/// `confirmed`.
template <class Constraints>
SampledSet sample_active_set(const Constraints& constraints, std::uint64_t seed) {
  std::vector<const std::ranges::range_value_t<Constraints>*> order;
  for (const auto& c : constraints) {
    if (!c.confirmed)
      throw Error(ErrorCode::UnconfirmedConstraint, "constraint " + c.id + " is not confirmed");
    order.push_back(&c);
  }
  std::sort(order.begin(), order.end(), [](auto* a, auto* b) { return a->id < b->id; });

  SampledSet out;
  out.seed = seed;
  SplitMix64 rng(seed);
  for (const auto* c : order) {
    const double w = c->strictness.value();
    const double u = rng.uniform();
    const bool keep = classify(c->strictness) == Hardness::Hard || u < w;
    out.draws.push_back({c->id, w, u, keep});
    if (keep) out.included.push_back(c->id);
  }
  return out;
}

}  // namespace planverify

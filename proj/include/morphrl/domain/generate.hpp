#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "morphrl/domain/morphology.hpp"

namespace morphrl {

using Rng = std::mt19937_64;

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

// Ranges for sample_morphology. Positive physical quantities are drawn
// log-uniformly; joint angles (which may be negative) uniformly.
struct GenSpec {
  int min_limbs = 2;
  int max_limbs = 6;
  Range mass{0.5, 2.0};
  Range length{0.2, 0.6};
  Range shape_radius{0.03, 0.08};
  Range joint_low{-1.2, -0.1};
  Range joint_high{0.1, 1.2};
  Range gear{0.5, 3.0};
  Range damping{0.05, 0.5};
  Range armature{0.01, 0.1};
  Range coupling{0.05, 0.5};
};

// Throws ConfigError on empty or inverted ranges.
void validate_gen_spec(const GenSpec& spec);

Morphology sample_morphology(Rng& rng, const GenSpec& spec, std::string id);

enum class PerturbKind { armature, damping, gear, density, shape, joint_angle };

inline constexpr PerturbKind kAllPerturbKinds[] = {PerturbKind::armature, PerturbKind::damping,
                                                   PerturbKind::gear,     PerturbKind::density,
                                                   PerturbKind::shape,    PerturbKind::joint_angle};

std::string_view to_string(PerturbKind kind);
// Throws InvalidInput for unknown names.
PerturbKind parse_perturb_kind(std::string_view name);

inline constexpr double kDefaultPerturbStrength = 0.5;

// Rescales one parameter family per limb by factors drawn log-uniformly from
// [1/(1+strength), 1+strength]; joint_angle instead shifts each joint range by
// an offset that keeps initial_angle inside. The new id is
// "<old id>/<kind><index>".
Morphology perturb_context(const Morphology& m, PerturbKind kind, Rng& rng, double strength = kDefaultPerturbStrength,
                           int index = 0);

struct RobotSplit {
  std::vector<std::string> train;
  std::vector<std::string> validation;
  std::vector<std::string> test;

  friend bool operator==(const RobotSplit&, const RobotSplit&) = default;
};

struct SplitCounts {
  std::size_t train = 0;
  std::size_t validation = 0;
  std::size_t test = 0;
};

// Seeded shuffle, then train/validation/test taken in order.
RobotSplit split_robots(const std::vector<std::string>& ids, std::uint64_t seed, SplitCounts counts);

}  // namespace morphrl

#pragma once

#include <array>
#include <span>
#include <vector>

#include "morphrl/domain/morphology.hpp"
#include "morphrl/numeric/array.hpp"
#include "morphrl/numeric/kernels.hpp"

namespace morphrl {

// Observable context layout per limb:
//   0 mass, 1 length, 2 shape_radius, 3 joint_low, 4 joint_high,
//   5 initial_angle, 6 parent_offset.x, 7 parent_offset.y
inline constexpr std::size_t kContextWidth = 8;
// Underlying state per limb: angle, angular velocity, tip height / length.
inline constexpr std::size_t kStateWidth = 3;

std::array<double, kContextWidth> observable_context(const LimbContext& limb);

// The policy input o_t: per-slot state and observable context, an optional
// terrain lookahead shared by every limb, and the slot validity mask.
struct ModularObservation {
  Array state;      // [slots, kStateWidth]
  Array context;    // [slots, kContextWidth]
  Array lookahead;  // [samples]; empty when the terrain kind provides none
  Mask valid;       // [slots]

  std::size_t slots() const { return valid.size(); }
  std::size_t lookahead_width() const { return lookahead.size(); }

  friend bool operator==(const ModularObservation&, const ModularObservation&) = default;
};

struct UnderlyingState {
  std::vector<double> angles;
  std::vector<double> omegas;
  std::vector<double> tip_heights;
};

// φ((s', c)) = (s', c⁺). Builds the observation from the underlying state
// and the observable part of the morphology's context only. pad_to (0 means
// the limb count) adds zeroed, masked-off slots.
ModularObservation observe(const UnderlyingState& state, const Morphology& m, std::span<const double> lookahead,
                           std::size_t pad_to = 0);

// Appends masked-off zero slots.
ModularObservation pad_observation(const ModularObservation& obs, std::size_t slots);

// Reorders slots: result slot i holds input slot perm[i].
ModularObservation permute_observation(const ModularObservation& obs, std::span<const std::size_t> perm);

}  // namespace morphrl

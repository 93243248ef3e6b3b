#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

namespace morphrl {

// Per-limb context. The first eight quantities (geometry, joint range,
// parent offset) are observable; gear, damping, armature and coupling are
// hidden from the policy.
struct LimbContext {
  double mass = 1.0;          // kg
  double length = 0.4;        // m
  double shape_radius = 0.05; // m
  double joint_low = -0.5;    // rad
  double joint_high = 0.5;    // rad
  double initial_angle = 0.0; // rad
  // Unit vector from parent to this limb's attachment point; (0, 0) on the root.
  std::array<double, 2> parent_offset{0.0, 0.0};
  double gear = 1.0;      // torque units
  double damping = 0.1;   // N·m·s/rad
  double armature = 0.02; // kg·m²
  double coupling = 0.1;  // N·m/rad

  friend bool operator==(const LimbContext&, const LimbContext&) = default;
};

inline constexpr int kRootParent = -1;
inline constexpr std::size_t kDefaultMaxLimbs = 12;

struct Morphology {
  std::string id;
  std::vector<LimbContext> limbs;
  std::vector<int> parent;  // parent[i] indexes limbs; the root holds kRootParent

  std::size_t limb_count() const { return limbs.size(); }
  friend bool operator==(const Morphology&, const Morphology&) = default;
};

// True when parent encodes one rooted tree: a single root, in-range indices,
// and every ancestor chain reaching the root without revisiting a limb.
bool is_single_rooted_tree(const std::vector<int>& parent);

// Throws InvalidInput naming the first violated invariant.
void validate_morphology(const Morphology& m, std::size_t max_limbs = kDefaultMaxLimbs);

// Parent and children of each limb.
std::vector<std::vector<int>> limb_neighbors(const Morphology& m);

// Canonical string of the unordered rooted tree shape (ignores parameters).
std::string topology_signature(const Morphology& m);

}  // namespace morphrl

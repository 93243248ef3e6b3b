#include "morphrl/domain/morphology.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "morphrl/errors.hpp"

namespace morphrl {

bool is_single_rooted_tree(const std::vector<int>& parent) {
  const auto n = static_cast<int>(parent.size());
  if (n == 0) return false;
  int roots = 0;
  for (int p : parent) {
    if (p == kRootParent) {
      ++roots;
    } else if (p < 0 || p >= n) {
      return false;
    }
  }
  if (roots != 1) return false;
  // 0 unvisited, 1 on current chain, 2 known to reach the root.
  std::vector<int> state(static_cast<std::size_t>(n), 0);
  for (int start = 0; start < n; ++start) {
    std::vector<int> chain;
    int cur = start;
    while (cur != kRootParent && state[cur] == 0) {
      state[cur] = 1;
      chain.push_back(cur);
      cur = parent[cur];
    }
    if (cur != kRootParent && state[cur] == 1) return false;
    for (int c : chain) state[c] = 2;
  }
  return true;
}

void validate_morphology(const Morphology& m, std::size_t max_limbs) {
  const std::string where = "morphology '" + m.id + "': ";
  if (m.limbs.empty()) throw InvalidInput(where + "no limbs");
  if (m.limbs.size() > max_limbs) {
    throw InvalidInput(where + std::to_string(m.limbs.size()) + " limbs exceeds max " + std::to_string(max_limbs));
  }
  if (m.parent.size() != m.limbs.size()) throw InvalidInput(where + "parent array length differs from limb count");
  if (!is_single_rooted_tree(m.parent)) throw InvalidInput(where + "parent array is not a single rooted tree");
  for (std::size_t i = 0; i < m.limbs.size(); ++i) {
    const LimbContext& l = m.limbs[i];
    const std::string limb = where + "limb " + std::to_string(i) + ": ";
    if (!(l.joint_low < l.joint_high)) throw InvalidInput(limb + "joint_low must be < joint_high");
    if (l.initial_angle < l.joint_low || l.initial_angle > l.joint_high) {
      throw InvalidInput(limb + "initial_angle outside joint range");
    }
    for (double v : {l.mass, l.length, l.gear, l.damping, l.armature, l.coupling}) {
      if (!(v > 0.0) || !std::isfinite(v)) throw InvalidInput(limb + "physical parameters must be positive");
    }
    if (!(l.shape_radius > 0.0)) throw InvalidInput(limb + "shape_radius must be positive");
  }
}

std::vector<std::vector<int>> limb_neighbors(const Morphology& m) {
  std::vector<std::vector<int>> nb(m.limb_count());
  for (std::size_t i = 0; i < m.parent.size(); ++i) {
    const int p = m.parent[i];
    if (p == kRootParent) continue;
    nb[i].push_back(p);
    nb[static_cast<std::size_t>(p)].push_back(static_cast<int>(i));
  }
  return nb;
}

std::string topology_signature(const Morphology& m) {
  std::vector<std::vector<int>> children(m.limb_count());
  int root = 0;
  for (std::size_t i = 0; i < m.parent.size(); ++i) {
    if (m.parent[i] == kRootParent) {
      root = static_cast<int>(i);
    } else {
      children[static_cast<std::size_t>(m.parent[i])].push_back(static_cast<int>(i));
    }
  }
  std::function<std::string(int)> encode = [&](int v) {
    std::vector<std::string> parts;
    for (int c : children[static_cast<std::size_t>(v)]) parts.push_back(encode(c));
    std::sort(parts.begin(), parts.end());
    std::string s = "(";
    for (const auto& p : parts) s += p;
    return s + ")";
  };
  return encode(root);
}

}  // namespace morphrl

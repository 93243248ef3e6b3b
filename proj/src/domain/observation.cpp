#include "morphrl/domain/observation.hpp"

#include <algorithm>

#include "morphrl/errors.hpp"

namespace morphrl {

std::array<double, kContextWidth> observable_context(const LimbContext& l) {
  return {l.mass,          l.length,           l.shape_radius,     l.joint_low,
          l.joint_high,    l.initial_angle,    l.parent_offset[0], l.parent_offset[1]};
}

ModularObservation observe(const UnderlyingState& state, const Morphology& m, std::span<const double> lookahead,
                           std::size_t pad_to) {
  const std::size_t n = m.limb_count();
  if (state.angles.size() != n || state.omegas.size() != n || state.tip_heights.size() != n) {
    throw InvalidInput("observe: state has " + std::to_string(state.angles.size()) + " limbs, morphology '" + m.id +
                       "' has " + std::to_string(n));
  }
  const std::size_t slots = std::max(pad_to, n);
  ModularObservation obs;
  obs.state = Array(Shape{slots, kStateWidth});
  obs.context = Array(Shape{slots, kContextWidth});
  obs.lookahead = Array(Shape{lookahead.size()}, std::vector<double>(lookahead.begin(), lookahead.end()));
  obs.valid.assign(slots, 0);
  for (std::size_t i = 0; i < n; ++i) {
    obs.state(i, 0) = state.angles[i];
    obs.state(i, 1) = state.omegas[i];
    obs.state(i, 2) = state.tip_heights[i];
    const auto c = observable_context(m.limbs[i]);
    std::copy(c.begin(), c.end(), obs.context.row(i).begin());
    obs.valid[i] = 1;
  }
  return obs;
}

ModularObservation pad_observation(const ModularObservation& obs, std::size_t slots) {
  if (slots < obs.slots()) throw InvalidInput("pad_observation: cannot shrink");
  ModularObservation out;
  out.state = Array(Shape{slots, kStateWidth});
  out.context = Array(Shape{slots, kContextWidth});
  out.lookahead = obs.lookahead;
  out.valid.assign(slots, 0);
  std::copy(obs.state.data().begin(), obs.state.data().end(), out.state.data().begin());
  std::copy(obs.context.data().begin(), obs.context.data().end(), out.context.data().begin());
  std::copy(obs.valid.begin(), obs.valid.end(), out.valid.begin());
  return out;
}

ModularObservation permute_observation(const ModularObservation& obs, std::span<const std::size_t> perm) {
  const std::size_t n = obs.slots();
  if (perm.size() != n) throw InvalidInput("permute_observation: permutation length mismatch");
  std::vector<bool> seen(n, false);
  ModularObservation out = obs;
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t src = perm[i];
    if (src >= n || seen[src]) throw InvalidInput("permute_observation: not a permutation");
    seen[src] = true;
    std::copy(obs.state.row(src).begin(), obs.state.row(src).end(), out.state.row(i).begin());
    std::copy(obs.context.row(src).begin(), obs.context.row(src).end(), out.context.row(i).begin());
    out.valid[i] = obs.valid[src];
  }
  return out;
}

}  // namespace morphrl

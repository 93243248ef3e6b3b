#include "morphrl/domain/generate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "morphrl/errors.hpp"

namespace morphrl {

namespace {

double log_uniform(Rng& rng, Range r) {
  if (r.lo == r.hi) return r.lo;
  std::uniform_real_distribution<double> u(std::log(r.lo), std::log(r.hi));
  return std::exp(u(rng));
}

double uniform(Rng& rng, Range r) {
  if (r.lo == r.hi) return r.lo;
  std::uniform_real_distribution<double> u(r.lo, r.hi);
  return u(rng);
}

void check_range(const char* name, Range r, bool positive) {
  if (!(r.lo <= r.hi)) throw ConfigError(std::string("gen spec: empty range for ") + name);
  if (positive && !(r.lo > 0.0)) throw ConfigError(std::string("gen spec: ") + name + " range must be positive");
}

}  // namespace

void validate_gen_spec(const GenSpec& spec) {
  if (spec.min_limbs < 1 || spec.min_limbs > spec.max_limbs) throw ConfigError("gen spec: empty limb-count range");
  if (spec.max_limbs > static_cast<int>(kDefaultMaxLimbs)) {
    throw ConfigError("gen spec: max limbs above " + std::to_string(kDefaultMaxLimbs));
  }
  check_range("mass", spec.mass, true);
  check_range("length", spec.length, true);
  check_range("shape_radius", spec.shape_radius, true);
  check_range("gear", spec.gear, true);
  check_range("damping", spec.damping, true);
  check_range("armature", spec.armature, true);
  check_range("coupling", spec.coupling, true);
  check_range("joint_low", spec.joint_low, false);
  check_range("joint_high", spec.joint_high, false);
  if (!(spec.joint_low.hi < spec.joint_high.lo)) throw ConfigError("gen spec: joint_low range must lie below joint_high");
}

Morphology sample_morphology(Rng& rng, const GenSpec& spec, std::string id) {
  validate_gen_spec(spec);
  std::uniform_int_distribution<int> count_dist(spec.min_limbs, spec.max_limbs);
  const int n = count_dist(rng);
  Morphology m;
  m.id = std::move(id);
  m.limbs.resize(static_cast<std::size_t>(n));
  m.parent.assign(static_cast<std::size_t>(n), kRootParent);
  for (int i = 0; i < n; ++i) {
    LimbContext& l = m.limbs[static_cast<std::size_t>(i)];
    if (i > 0) {
      std::uniform_int_distribution<int> parent_dist(0, i - 1);
      m.parent[static_cast<std::size_t>(i)] = parent_dist(rng);
      std::uniform_real_distribution<double> phi(-std::numbers::pi, std::numbers::pi);
      const double a = phi(rng);
      l.parent_offset = {std::cos(a), std::sin(a)};
    } else {
      l.parent_offset = {0.0, 0.0};
    }
    l.mass = log_uniform(rng, spec.mass);
    l.length = log_uniform(rng, spec.length);
    l.shape_radius = log_uniform(rng, spec.shape_radius);
    l.joint_low = uniform(rng, spec.joint_low);
    l.joint_high = uniform(rng, spec.joint_high);
    l.initial_angle = uniform(rng, Range{l.joint_low, l.joint_high});
    l.gear = log_uniform(rng, spec.gear);
    l.damping = log_uniform(rng, spec.damping);
    l.armature = log_uniform(rng, spec.armature);
    l.coupling = log_uniform(rng, spec.coupling);
  }
  return m;
}

std::string_view to_string(PerturbKind kind) {
  switch (kind) {
    case PerturbKind::armature: return "armature";
    case PerturbKind::damping: return "damping";
    case PerturbKind::gear: return "gear";
    case PerturbKind::density: return "density";
    case PerturbKind::shape: return "shape";
    case PerturbKind::joint_angle: return "joint_angle";
  }
  return "unknown";
}

PerturbKind parse_perturb_kind(std::string_view name) {
  for (PerturbKind k : kAllPerturbKinds) {
    if (to_string(k) == name) return k;
  }
  throw InvalidInput("unknown perturbation kind: " + std::string(name));
}

Morphology perturb_context(const Morphology& m, PerturbKind kind, Rng& rng, double strength, int index) {
  if (!(strength > 0.0)) throw InvalidInput("perturbation strength must be positive");
  Morphology out = m;
  out.id = m.id + "/" + std::string(to_string(kind)) + std::to_string(index);
  const Range factor_range{1.0 / (1.0 + strength), 1.0 + strength};
  for (LimbContext& l : out.limbs) {
    switch (kind) {
      case PerturbKind::armature: l.armature *= log_uniform(rng, factor_range); break;
      case PerturbKind::damping: l.damping *= log_uniform(rng, factor_range); break;
      case PerturbKind::gear: l.gear *= log_uniform(rng, factor_range); break;
      // Volume is unchanged, so density scales mass.
      case PerturbKind::density: l.mass *= log_uniform(rng, factor_range); break;
      case PerturbKind::shape: {
        const double f = log_uniform(rng, factor_range);
        l.shape_radius *= f;
        l.length *= f;
        break;
      }
      case PerturbKind::joint_angle: {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        const double half_width = 0.5 * (l.joint_high - l.joint_low);
        const double offset = std::clamp(u(rng) * strength * half_width, l.initial_angle - l.joint_high,
                                         l.initial_angle - l.joint_low);
        l.joint_low += offset;
        l.joint_high += offset;
        l.joint_low = std::min(l.joint_low, l.initial_angle);
        l.joint_high = std::max(l.joint_high, l.initial_angle);
        break;
      }
    }
  }
  return out;
}

RobotSplit split_robots(const std::vector<std::string>& ids, std::uint64_t seed, SplitCounts counts) {
  const std::size_t total = counts.train + counts.validation + counts.test;
  if (total > ids.size()) {
    throw InvalidInput("split counts sum to " + std::to_string(total) + " but only " + std::to_string(ids.size()) +
                       " robots exist");
  }
  std::vector<std::string> order = ids;
  Rng rng(seed);
  std::shuffle(order.begin(), order.end(), rng);
  RobotSplit split;
  auto it = order.begin();
  split.train.assign(it, it + static_cast<std::ptrdiff_t>(counts.train));
  it += static_cast<std::ptrdiff_t>(counts.train);
  split.validation.assign(it, it + static_cast<std::ptrdiff_t>(counts.validation));
  it += static_cast<std::ptrdiff_t>(counts.validation);
  split.test.assign(it, it + static_cast<std::ptrdiff_t>(counts.test));
  return split;
}

}  // namespace morphrl

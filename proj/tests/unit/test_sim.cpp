#include <doctest.h>

#include <cmath>

#include "../common/test_support.hpp"
#include "morphrl/errors.hpp"

using namespace morphrl;
using namespace morphrl::testing;

namespace {

Morphology single_limb() {
  Morphology m;
  m.id = "one";
  LimbContext l;
  l.mass = 1.2;
  l.length = 0.5;
  l.joint_low = -0.8;
  l.joint_high = 0.9;
  l.initial_angle = 0.3;
  l.gear = 2.0;
  l.damping = 0.2;
  l.armature = 0.05;
  m.limbs = {l};
  m.parent = {kRootParent};
  return m;
}

SimConfig quiet() {
  SimConfig c;
  c.reset_noise = 0.0;
  return c;
}

struct OracleStep {
  double theta, omega, x, reward;
};

// Single limb written out by hand: no neighbours, so no coupling term.
OracleStep scalar_oracle(const LimbContext& l, double theta, double omega, double x, double a, double slope) {
  const double dt = 0.05, k = 0.5, g = 2.0, cc = 0.05, wmax = 10.0;
  const double torque = l.gear * a - l.damping * omega - k * (theta - l.initial_angle);
  const double inertia = l.armature + l.mass * l.length * l.length / 3.0;
  double w = omega + dt * torque / inertia;
  if (w > wmax) w = wmax;
  if (w < -wmax) w = -wmax;
  double th = theta + dt * w;
  if (th > l.joint_high) {
    th = l.joint_high;
    w = 0.0;
  } else if (th < l.joint_low) {
    th = l.joint_low;
    w = 0.0;
  }
  double v = l.length * w * std::sin(th);
  if (v < 0.0) v = 0.0;
  const double nx = x + dt * (v - g * std::sin(slope));
  return {th, w, nx, (nx - x) / dt - cc * a * a};
}

std::vector<double> random_action(Rng& rng, std::size_t n) { return random_state_values(rng, n, 1.3); }

}  // namespace

TEST_SUITE("terrain") {
  TEST_CASE("constant profiles") {
    Rng rng(1);
    const Terrain flat = generate_terrain(TerrainKind::flat, rng);
    const Terrain incline = generate_terrain(TerrainKind::incline, rng);
    for (double x = -5.0; x < 60.0; x += 0.37) {
      CHECK(flat.slope_at(x) == 0.0);
      CHECK(incline.slope_at(x) == doctest::Approx(0.1745).epsilon(1e-3));
    }
    CHECK(kInclineSlope == doctest::Approx(10.0 * M_PI / 180.0).epsilon(1e-15));
    CHECK(terrain_lookahead(3.0, flat, 8) == std::vector<double>(8, 0.0));
    CHECK(terrain_lookahead(3.0, incline, 4) == std::vector<double>(4, kInclineSlope));
  }

  TEST_CASE("rough profiles are bounded and seeded") {
    for (TerrainKind kind : {TerrainKind::variable, TerrainKind::obstacles}) {
      for (std::uint64_t seed = 0; seed < 20; ++seed) {
        Rng a(seed), b(seed);
        const Terrain ta = generate_terrain(kind, a), tb = generate_terrain(kind, b);
        bool nonzero = false;
        for (int i = 0; i < 1000; ++i) {
          const double x = -2.0 + 0.07 * i;
          CHECK(ta.slope_at(x) == tb.slope_at(x));
          CHECK(std::abs(ta.slope_at(x)) <= kMaxTerrainSlope + 1e-12);
          nonzero = nonzero || ta.slope_at(x) != 0.0;
        }
        CHECK(nonzero);
        for (std::size_t i = 0; i + 1 < ta.knot_x.size(); ++i) CHECK(ta.knot_x[i] <= ta.knot_x[i + 1]);
      }
    }
    CHECK(provides_lookahead(TerrainKind::variable));
    CHECK(provides_lookahead(TerrainKind::obstacles));
    CHECK_FALSE(provides_lookahead(TerrainKind::flat));
    CHECK_FALSE(provides_lookahead(TerrainKind::incline));
    CHECK_THROWS_AS(parse_terrain_kind("ice"), ConfigError);
  }

  TEST_CASE("piecewise-linear interpolation between knots") {
    Terrain t;
    t.kind = TerrainKind::variable;
    t.knot_x = {1.0, 2.0, 4.0, 4.0, 5.0};
    t.knot_slope = {0.0, 0.2, 0.0, -0.3, 0.0};
    CHECK(t.slope_at(0.5) == 0.0);
    CHECK(t.slope_at(1.5) == doctest::Approx(0.1));
    CHECK(t.slope_at(3.0) == doctest::Approx(0.1));
    CHECK(t.slope_at(4.5) == doctest::Approx(-0.15));
    CHECK(t.slope_at(6.0) == 0.0);
  }

  TEST_CASE("lookahead matches direct evaluation") {
    Rng rng(3);
    const Terrain t = generate_terrain(TerrainKind::variable, rng);
    SimState s;
    s.x = 4.1;
    const auto ahead = lookahead(s, t, 8);
    for (std::size_t k = 0; k < 8; ++k) CHECK(ahead[k] == t.slope_at(4.1 + 0.25 * static_cast<double>(k + 1)));
    CHECK_THROWS_AS(lookahead(s, t, 0), InvalidInput);
  }
}

TEST_SUITE("reset") {
  TEST_CASE("initial state") {
    Rng rng(4);
    const Morphology m = random_robot(rng, 1, 8);
    ResetResult r = reset(m, TerrainKind::flat, rng, quiet());
    CHECK(r.state.x == 0.0);
    CHECK(r.state.t == 0);
    for (std::size_t i = 0; i < m.limbs.size(); ++i) {
      CHECK(r.state.angles[i] == m.limbs[i].initial_angle);
      CHECK(r.state.omegas[i] == 0.0);
      CHECK(r.observation.state(i, 0) == m.limbs[i].initial_angle);
    }
    CHECK(r.observation.lookahead.size() == 0);
    const ResetResult v = reset(m, TerrainKind::variable, rng);
    CHECK(v.observation.lookahead.size() == 8);
    for (std::size_t i = 0; i < m.limbs.size(); ++i) {
      CHECK(std::abs(v.state.angles[i] - m.limbs[i].initial_angle) <= 0.01 + 1e-15);
    }
    Rng a(5), b(5);
    const ResetResult ra = reset(m, TerrainKind::obstacles, a), rb = reset(m, TerrainKind::obstacles, b);
    CHECK(ra.state.angles == rb.state.angles);
    CHECK(ra.terrain.knot_x == rb.terrain.knot_x);
    Rng c(6);
    CHECK(reset(single_limb(), TerrainKind::flat, c).state.angles.size() == 1);
  }
}

TEST_SUITE("step") {
  TEST_CASE("rest is an equilibrium") {
    const Morphology m = single_limb();
    Rng rng(7);
    ResetResult r = reset(m, TerrainKind::flat, rng, quiet());
    const double zero[] = {0.0};
    const StepResult s = step(r.state, m, r.terrain, zero, quiet());
    CHECK(s.reward == 0.0);
    CHECK(r.state.angles[0] == m.limbs[0].initial_angle);
    CHECK(r.state.omegas[0] == 0.0);
    CHECK(r.state.x == 0.0);
    CHECK(r.state.t == 1);
  }

  TEST_CASE("incline slides back") {
    Rng rng(8);
    // Equal initial angles keep the coupling torque at zero, so v stays 0.
    Morphology m = random_robot(rng, 1, 5);
    for (LimbContext& l : m.limbs) l.initial_angle = std::clamp(0.05, l.joint_low, l.joint_high);
    ResetResult r = reset(m, TerrainKind::incline, rng, quiet());
    const std::vector<double> zero(m.limbs.size(), 0.0);
    for (int t = 1; t <= 20; ++t) {
      step(r.state, m, r.terrain, zero, quiet());
      CHECK(r.state.x == doctest::Approx(-t * 0.05 * 2.0 * std::sin(kInclineSlope)).epsilon(1e-12));
    }
  }

  TEST_CASE("single limb matches the scalar oracle") {
    Rng rng(9);
    const Morphology m = single_limb();
    for (TerrainKind kind : {TerrainKind::flat, TerrainKind::incline}) {
      ResetResult r = reset(m, kind, rng);
      double th = r.state.angles[0], w = 0.0, x = 0.0;
      std::uniform_real_distribution<double> u(-1.0, 1.0);
      for (int t = 0; t < 200; ++t) {
        const double a = u(rng);
        const OracleStep o = scalar_oracle(m.limbs[0], th, w, x, a, r.terrain.slope_at(x));
        const StepResult s = step(r.state, m, r.terrain, std::vector<double>{a});
        CHECK(r.state.angles[0] == doctest::Approx(o.theta).epsilon(1e-12));
        CHECK(r.state.omegas[0] == doctest::Approx(o.omega).epsilon(1e-12));
        CHECK(r.state.x == doctest::Approx(o.x).epsilon(1e-12));
        CHECK(s.reward == doctest::Approx(o.reward).epsilon(1e-12));
        th = r.state.angles[0];
        w = r.state.omegas[0];
        x = r.state.x;
      }
    }
  }

  TEST_CASE("coupling pulls neighbours together") {
    Morphology m;
    m.id = "pair";
    LimbContext l;
    l.joint_low = -1.0;
    l.joint_high = 1.0;
    m.limbs = {l, l};
    m.parent = {-1, 0};
    m.limbs[1].initial_angle = 0.4;
    SimState s;
    s.angles = {0.0, 0.4};
    s.omegas = {0.0, 0.0};
    Terrain flat;
    const double zero[] = {0.0, 0.0};
    step(s, m, flat, zero, quiet());
    const double inertia = l.armature + l.mass * l.length * l.length / 3.0;
    const double w0 = 0.05 * (-l.coupling * (0.0 - 0.4)) / inertia;
    const double w1 = 0.05 * (-l.coupling * (0.4 - 0.0)) / inertia;
    CHECK(s.omegas[0] == doctest::Approx(w0).epsilon(1e-12));
    CHECK(s.omegas[1] == doctest::Approx(w1).epsilon(1e-12));
  }

  TEST_CASE("invariants over random rollouts") {
    Rng rng(10);
    for (TerrainKind kind : {TerrainKind::flat, TerrainKind::incline, TerrainKind::variable, TerrainKind::obstacles}) {
      for (int trial = 0; trial < 5; ++trial) {
        const Morphology m = random_robot(rng, 1, 12);
        ResetResult r = reset(m, kind, rng);
        const std::size_t n = m.limbs.size();
        for (int t = 0; t < 150; ++t) {
          const auto a = random_action(rng, n);
          const double before = r.state.x;
          const StepResult s = step(r.state, m, r.terrain, a);
          double ctrl = 0.0;
          for (double v : a) ctrl += std::pow(std::clamp(v, -1.0, 1.0), 2);
          CHECK(s.reward == doctest::Approx((r.state.x - before) / 0.05 - 0.05 * ctrl / n).epsilon(1e-12));
          CHECK(s.distance == r.state.x);
          CHECK_FALSE(s.done);
          for (std::size_t i = 0; i < n; ++i) {
            CHECK(r.state.angles[i] >= m.limbs[i].joint_low);
            CHECK(r.state.angles[i] <= m.limbs[i].joint_high);
            CHECK(std::abs(r.state.omegas[i]) <= 10.0);
            CHECK(s.observation.state(i, 2) == std::sin(r.state.angles[i] + r.terrain.slope_at(r.state.x)));
          }
        }
      }
    }
  }

  TEST_CASE("bit-identical trajectories") {
    Rng pick(11);
    const Morphology m = random_robot(pick, 3, 9);
    const auto run = [&](std::uint64_t seed) {
      Rng rng(seed);
      ResetResult r = reset(m, TerrainKind::variable, rng);
      std::vector<double> trace;
      for (int t = 0; t < 100; ++t) {
        const StepResult s = step(r.state, m, r.terrain, random_action(rng, m.limbs.size()));
        trace.push_back(s.reward);
        trace.insert(trace.end(), s.observation.state.data().begin(), s.observation.state.data().end());
      }
      return trace;
    };
    CHECK(run(3) == run(3));
    CHECK(run(3) != run(4));
  }

  TEST_CASE("horizon and input errors") {
    Rng rng(12);
    const Morphology m = single_limb();
    SimConfig c;
    c.horizon = 3;
    ResetResult r = reset(m, TerrainKind::flat, rng, c);
    const double a[] = {0.5};
    CHECK_FALSE(step(r.state, m, r.terrain, a, c).done);
    CHECK_FALSE(step(r.state, m, r.terrain, a, c).done);
    CHECK(step(r.state, m, r.terrain, a, c).done);
    CHECK_THROWS_AS(step(r.state, m, r.terrain, a, c), UsageError);
    ResetResult r2 = reset(m, TerrainKind::flat, rng);
    CHECK_THROWS_AS(step(r2.state, m, r2.terrain, std::vector<double>{0.1, 0.2}), InvalidInput);
  }

  TEST_CASE("hidden gear is revealed only through dynamics") {
    Rng rng(13);
    const Morphology m = random_robot(rng, 2, 6);
    Morphology geared = m;
    for (LimbContext& l : geared.limbs) l.gear *= 1.7;
    ResetResult a = reset(m, TerrainKind::flat, rng, quiet());
    Rng rng2(14);
    ResetResult b = reset(geared, TerrainKind::flat, rng2, quiet());
    CHECK(a.observation == b.observation);
    const std::vector<double> act(m.limbs.size(), 0.5);
    const StepResult sa = step(a.state, m, a.terrain, act);
    const StepResult sb = step(b.state, geared, b.terrain, act);
    CHECK_FALSE(sa.observation == sb.observation);
  }
}

// Acceptance run: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset; MORPHRL_ACCEPT_DIR sets the work directory.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <map>
#include <set>
#include <sstream>
#include <string>

#include "../common/test_support.hpp"
#include "morphrl/domain/io.hpp"
#include "morphrl/harness/commands.hpp"
#include "morphrl/trainer/gae.hpp"
#include "morphrl/trainer/rollout.hpp"
#include "morphrl/trainer/train.hpp"

using namespace morphrl;
using namespace morphrl::testing;
namespace fs = std::filesystem;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

fs::path g_work;

fs::path fresh_dir(const std::string& name) {
  const fs::path d = g_work / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// 1. Gradient suite. One step for every check, near the cube root of machine
// epsilon; the objective is sum(mu) + value over the unrolled steps.
constexpr double kStep = 1e-5;

std::function<Var()> mu_plus_value(const Policy& p, const std::vector<ModularObservation>& seq) {
  return [&p, &seq] {
    const ContextCache cache = p.prepare(seq.front());
    HiddenStateBank bank = p.initial_bank(seq.front().slots());
    std::vector<Var> terms;
    for (const ModularObservation& o : seq) {
      PolicyOutput out = p.step(cache, o, Array(Shape{o.slots()}), &bank);
      terms.push_back(sum(out.mu));
      terms.push_back(out.value);
      if (out.new_hidden) bank = *out.new_hidden;
    }
    return sum_scalars(terms);
  };
}

Verdict gradients() {
  const auto t0 = Clock::now();
  double kernel_worst = 0.0, arch_worst = 0.0;
  std::size_t arch_failures = 0;
  std::string kernel_at, arch_at;
  for (const auto& kc : kernel_cases()) {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      Rng rng(7000 + trial);
      ParamStore ps;
      const LossFn loss = kc.setup(rng, ps);
      const double err = finite_diff_check([&] { return loss(ps); }, ps, kStep);
      if (!(err <= kernel_worst)) kernel_worst = err, kernel_at = kc.name;
    }
  }
  for (ArchKind arch : kAllArchs) {
    for (std::uint64_t trial = 0; trial < 20; ++trial) {
      Rng rng(8000 + trial);
      const Morphology m = random_robot(rng, 1, 6);
      const std::size_t look = trial % 2 == 0 ? 0 : 3;
      Policy p(small_model(arch, look), 9000 + trial);
      const auto seq = random_sequence(rng, m, is_recurrent(arch) ? 3 : 1, look);
      const double err = finite_diff_check(mu_plus_value(p, seq), p.params(), kStep);
      arch_failures += !(err < 1e-5);
      if (!(err <= arch_worst)) arch_worst = err, arch_at = std::string(to_string(arch));
    }
  }
  const double secs = seconds_since(t0);
  const bool ok = kernel_worst < 1e-5 && arch_worst < 1e-5 && secs < 120.0;
  return {ok, fmt("eps %.0e; %zu kernels x 20 trials max rel err %.2e (%s); 4 architectures x 20 trials max rel err "
                  "%.2e (%s), %zu/80 trials over; %.1f s (limit 1e-5, 120 s)",
                  kStep, kernel_cases().size(), kernel_worst, kernel_at.c_str(), arch_worst, arch_at.c_str(),
                  arch_failures, secs)};
}

// 2. Equivariance suite.
Verdict equivariance() {
  Rng rng(21);
  double perm = 0.0, pad = 0.0;
  for (int trial = 0; trial < 50; ++trial) {
    const Morphology m = random_robot(rng, 1 + trial % 12, 1 + trial % 12);
    for (ArchKind arch : kAllArchs) {
      ModelConfig c = small_model(arch);
      c.d_model = 8;
      const SymmetryGap g = symmetry_gap(Policy(c, 100 + trial), m, rng);
      perm = std::max(perm, g.permutation);
      pad = std::max(pad, g.padding);
    }
  }
  return {perm < 1e-9 && pad < 1e-9,
          fmt("50 morphologies (1-12 limbs) x 4 architectures: permutation gap %.2e, padding gap %.2e (limit 1e-9)", perm,
              pad)};
}

// 3. Fixed attention.
Verdict fixed_attention() {
  Rng rng(31);
  double drift = 0.0;
  for (ArchKind arch : {ArchKind::modumorph, ArchKind::rmomo}) {
    for (int r = 0; r < 10; ++r) {
      ModelConfig c = small_model(arch);
      c.d_model = 8;
      drift = std::max(drift, attention_drift(Policy(c, 200 + r), random_robot(rng, 2, 12), rng, 50));
    }
  }
  return {drift <= 1e-12, fmt("ModuMorph and R-MoMo on 10 robots each: max |A_0 - A_50| = %.2e (limit 1e-12)", drift)};
}

// 4. Replay correctness.
Verdict replay() {
  Rng rng(41);
  bool arithmetic = true;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t len = uniform_index(rng, 1, 1000);
    const std::size_t m = 80, l = 20;
    const auto spans = chunk_spans(len, m, l);
    std::vector<int> covered(len, 0);
    for (std::size_t k = 0; k < spans.size(); ++k) {
      const ChunkSpan& c = spans[k];
      arithmetic = arithmetic && c.start == k * (m - l) && c.valid_len == std::min(m, len - c.start);
      if (k > 0) arithmetic = arithmetic && spans[k - 1].start + spans[k - 1].valid_len - c.start == std::min(l, c.valid_len);
      for (std::size_t t = c.start + c.burn_in; t < c.start + c.valid_len; ++t) ++covered[t];
    }
    arithmetic = arithmetic && std::all_of(covered.begin(), covered.end(), [](int c) { return c == 1; });
  }
  TrainerConfig tc;
  tc.sim.horizon = 200;
  tc.rollout_steps = 200;
  const auto robots = [&] {
    std::vector<Morphology> r;
    for (int i = 0; i < 2; ++i) r.push_back(random_robot(rng, 2, 8, "r" + std::to_string(i)));
    return r;
  }();
  double worst = 0.0;
  std::size_t chunks_checked = 0;
  for (ArchKind arch : kAllArchs) {
    ModelConfig mc = small_model(arch);
    mc.d_model = 8;
    const Policy p(mc, 5);
    RolloutBuffer buf = collect_rollouts(p, robots, {0, 1}, tc, 3, 0);
    for (const Chunk& ch : make_chunks(buf, tc.chunk_m, tc.burn_in_l, true)) {
      const auto lp = replay_logp(p, ch);
      for (std::size_t i = 0; i < ch.valid_len; ++i) worst = std::max(worst, std::abs(lp[i] - ch.step(i).logp));
      ++chunks_checked;
    }
  }
  return {arithmetic && worst < 1e-8,
          fmt("100 random lengths: stride/overlap/once-coverage %s; %zu stored-hidden chunks, max |dlogp| = %.2e "
              "(limit 1e-8)",
              arithmetic ? "hold" : "VIOLATED", chunks_checked, worst)};
}

// 5. GAE oracle.
Verdict gae() {
  Rng rng(51);
  std::uniform_real_distribution<double> u(-2.0, 2.0), g(0.8, 1.0);
  std::bernoulli_distribution terminal(0.5);
  double worst = 0.0;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = uniform_index(rng, 1, 20);
    std::vector<double> r(n), v(n);
    for (std::size_t t = 0; t < n; ++t) r[t] = u(rng), v[t] = u(rng);
    std::vector<bool> d(n, false);
    d[n - 1] = terminal(rng);
    const double bootstrap = d[n - 1] ? 0.0 : u(rng), gamma = g(rng), lam = g(rng);
    std::vector<double> values = v;
    if (!d[n - 1]) values.push_back(bootstrap);
    const std::unique_ptr<bool[]> flags(new bool[n]);
    for (std::size_t t = 0; t < n; ++t) flags[t] = d[t];
    const GaeResult res = compute_gae(r, values, {flags.get(), n}, gamma, lam);
    const auto expect = gae_oracle(r, v, bootstrap, d, gamma, lam);
    for (std::size_t t = 0; t < n; ++t) worst = std::max(worst, std::abs(res.advantages[t] - expect[t]));
  }
  return {worst < 1e-10, fmt("200 episodes (length <= 20): max |A - A_oracle| = %.2e (limit 1e-10)", worst)};
}

// 6. KL early stop.
Verdict kl_stop() {
  TrainerConfig c;
  c.sim.horizon = 40;
  c.rollout_steps = 80;
  c.chunk_m = 16;
  c.burn_in_l = 4;
  c.epochs_per_iter = 4;
  c.minibatch_chunks = 2;
  c.kl_max = 0.05;
  Rng rng(61);
  std::vector<Morphology> robots{random_robot(rng, 2, 5, "a"), random_robot(rng, 2, 5, "b")};
  Policy p(small_model(ArchKind::rmomo), 7);
  RolloutBuffer buf = collect_rollouts(p, robots, {0, 1}, c, 1, 0);
  compute_advantages(buf, c);
  const auto chunks = make_chunks(buf, c.chunk_m, c.burn_in_l, true);
  const AdamConfig inflated{.lr = 0.5, .max_grad_norm = 0.0};
  Policy q = p.clone();
  Adam adam(p.params(), inflated);
  Rng update_rng(99);
  const UpdateStats s = ppo_update(p, adam, chunks, c, update_rng);
  const ScheduleReplay shadow = replay_update_schedule(q, inflated, chunks, c, 99);
  const bool frozen = shadow.stopped && shadow.hashes.size() == s.minibatches + 1 &&
                      p.params().fingerprint() == shadow.hashes.back() && shadow.kls.back() > c.kl_max;
  const std::size_t total = c.epochs_per_iter * ((chunks.size() + c.minibatch_chunks - 1) / c.minibatch_chunks);
  return {s.early_stopped && frozen,
          fmt("inflated lr: early_stopped=%s after %zu of %zu minibatch updates, approx_kl %.3g > kl_max %.3g; "
              "parameter hash %016llx %s the hash at the stop",
              s.early_stopped ? "true" : "false", s.minibatches, total, shadow.kls.back(), c.kl_max,
              static_cast<unsigned long long>(p.params().fingerprint()), frozen ? "equals" : "DIFFERS FROM")};
}

// 7. Learning smoke test.
Verdict learning() {
  const auto t0 = Clock::now();
  GenSpec spec;
  spec.min_limbs = spec.max_limbs = 3;
  Rng rng(71);
  const std::vector<Morphology> robots{sample_morphology(rng, spec, "smoke")};
  int improved = 0;
  std::string rows;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    TrainerConfig tc;
    tc.sim.horizon = 100;
    tc.rollout_steps = 100;
    tc.total_iters = 200;
    tc.checkpoint_every = 0;
    tc.seed = seed;
    ModelConfig mc;
    mc.arch = ArchKind::rmemo;
    const TrainResult res = train(tc, mc, robots);
    const double first = res.log.front().mean_return;
    double last = 0.0;
    for (std::size_t i = res.log.size() - 10; i < res.log.size(); ++i) last += res.log[i].mean_return / 10.0;
    const bool ok = last >= first + 0.5 * std::abs(first);
    improved += ok;
    rows += fmt(" seed %llu: %.3f -> %.3f%s;", static_cast<unsigned long long>(seed), first, last, ok ? "" : " (no)");
  }
  const double secs = seconds_since(t0);
  return {improved >= 4 && secs < 600.0,
          fmt("R-MeMo, 3-limb robot, 200 iterations, iteration-0 return -> final-10 mean:%s %d/5 improved by >= 50%%; "
              "%.0f s (limit 4/5, 600 s)",
              rows.c_str(), improved, secs)};
}

// 8. Directional generalization.
const char* kGeneralizationConfig = R"([run]
robot_dir = robots
split_file = robots/split.json
out_dir = runs
eval_episodes = 3

[trainer]
terrain = flat
horizon = 100
rollout_steps = 100
total_iters = 300
checkpoint_every = 100

[model]
d_model = 16
ff_width = 32
hyper_hidden = 32

[robots]
train = 16
validation = 4
test = 8

[perturb]
kinds = damping,gear
draws = 2
)";

Verdict generalization() {
  const auto t0 = Clock::now();
  const fs::path dir = fresh_dir("generalization");
  write_text_file(dir / "run.ini", kGeneralizationConfig);
  cmd_genrobots(load_run_config(dir / "run.ini", {"run.seed=7"}));

  const std::vector<std::string> sets{"test", "damping", "gear"};
  std::map<std::string, std::map<std::string, std::vector<double>>> score;  // set -> arch -> per seed
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    for (ArchKind arch : kAllArchs) {
      const std::string a(to_string(arch));
      const RunConfig rc = load_run_config(dir / "run.ini", {"run.arch=" + a, "run.seed=" + std::to_string(seed)});
      const fs::path run = cmd_train(rc);
      const std::string tag = a + "-" + std::to_string(seed);
      EvalCommand ev{run / "final", "test", rc.eval_episodes, rc.seed, dir / "eval" / (tag + "-test"), std::nullopt};
      score["test"][a].push_back(cmd_eval(rc, ev).mean);
      PerturbCommand pc{run / "final", rc.perturb_kinds, rc.perturb_draws, rc.perturb_strength, rc.eval_episodes,
                        rc.seed, "train", dir / "eval" / (tag + "-perturb")};
      for (const auto& [kind, report] : cmd_perturb_eval(rc, pc).by_kind) score[std::string(to_string(kind))][a].push_back(report.mean);
      std::fprintf(stderr, "  [8] %s seed %llu done at %.0f s\n", a.c_str(), static_cast<unsigned long long>(seed),
                   seconds_since(t0));
    }
    for (const auto& [a, b] : {std::pair{"rmomo", "modumorph"}, std::pair{"rmemo", "metamorph"}}) {
      const std::string s = std::to_string(seed);
      cmd_report_delta(dir / "eval" / (std::string(a) + "-" + s + "-test.json"),
                       dir / "eval" / (std::string(b) + "-" + s + "-test.json"),
                       dir / "delta" / (std::string(a) + "-vs-" + b + "-" + s));
    }
  }
  const double secs = seconds_since(t0);
  bool ok = secs < 4 * 3600.0;
  std::string detail;
  for (const auto& [a, b] : {std::pair{"rmomo", "modumorph"}, std::pair{"rmemo", "metamorph"}}) {
    for (const std::string& set : sets) {
      int wins = 0;
      double mean_a = 0.0, mean_b = 0.0;
      for (std::size_t s = 0; s < 5; ++s) {
        wins += score[set][a][s] >= score[set][b][s];
        mean_a += score[set][a][s] / 5.0;
        mean_b += score[set][b][s] / 5.0;
      }
      ok = ok && wins >= 4;
      detail += fmt(" %s>=%s on %s %d/5 (%.2f vs %.2f);", a, b, set.c_str(), wins, mean_a, mean_b);
    }
  }
  return {ok, fmt("%s %.0f s (limit 4/5 seeds each, 14400 s); per-robot delta reports in %s", detail.c_str(), secs,
                  (dir / "delta").c_str())};
}

// 9. Report integrity.
Verdict reports() {
  const fs::path dir = fresh_dir("reports");
  const auto report = [](std::vector<std::pair<std::string, double>> rows) {
    EvalReport r;
    for (const auto& [id, v] : rows) r.robots.push_back({id, v, 0.0, {v}});
    refresh_aggregate(r);
    return r;
  };
  write_json_file(dir / "a.json", eval_report_to_json(report({{"r1", 5.0}, {"r2", 1.0}})));
  write_json_file(dir / "b.json", eval_report_to_json(report({{"r1", 3.0}, {"r2", 2.0}})));
  const DeltaReport d = cmd_report_delta(dir / "a.json", dir / "b.json", dir / "delta");
  const std::string expected =
      "rank,robot_id,return_a,return_b,delta\n1,r1,5,3,2\n2,r2,1,2,-1\n# mean_delta,0.5\n# positive_fraction,0.5\n";
  const bool delta_ok = read_text_file(dir / "delta.csv") == expected && d.mean_delta == 0.5 && d.positive_fraction == 0.5;

  const auto perturb_rows = [&](const std::string& name, std::size_t robots, std::size_t draws) {
    const fs::path sub = dir / name;
    fs::create_directories(sub);
    write_text_file(sub / "run.ini", fmt("[trainer]\nhorizon = 5\nrollout_steps = 5\ntotal_iters = 1\n"
                                         "[model]\nd_model = 4\nff_width = 4\nhyper_hidden = 4\nlayers = 1\n"
                                         "[robots]\ntrain = %zu\nvalidation = 0\ntest = 0\nunique_topologies = false\n",
                                         robots));
    const RunConfig rc = load_run_config(sub / "run.ini");
    cmd_genrobots(rc);
    const fs::path run = cmd_train(rc);
    PerturbCommand pc{run / "final", {std::begin(kAllPerturbKinds), std::end(kAllPerturbKinds)}, draws, 0.5, 1, 0, "train", sub / "perturb"};
    const std::size_t rows = cmd_perturb_eval(rc, pc).rows;
    const std::string csv = read_text_file(sub / "perturb" / "perturb.csv");
    const auto lines = static_cast<std::size_t>(std::count(csv.begin(), csv.end(), '\n'));
    return rows == lines - 1 ? rows : 0;
  };
  const std::size_t desk = perturb_rows("desk", 16, 2), paper = perturb_rows("paper", 100, 4);
  return {delta_ok && desk == 192 && paper == 2400,
          fmt("hand-built delta report %s (deltas {2,-1}, mean 0.5, positive fraction 0.5); perturb rows %zu "
              "(expect 16x6x2 = 192) and %zu (expect 100x6x4 = 2400)",
              delta_ok ? "exact" : "MISMATCH", desk, paper)};
}

// 10. CLI determinism.
std::map<std::string, std::string> snapshot(const fs::path& dir) {
  std::map<std::string, std::string> files;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (e.is_regular_file()) files[fs::relative(e.path(), dir).string()] = read_text_file(e.path());
  }
  return files;
}

Verdict determinism() {
  const char* config = R"([run]
arch = rmomo
eval_episodes = 2
[trainer]
horizon = 40
rollout_steps = 40
total_iters = 3
checkpoint_every = 2
[model]
d_model = 8
ff_width = 8
hyper_hidden = 8
[robots]
train = 3
validation = 1
test = 2
[perturb]
draws = 1
)";
  std::vector<std::map<std::string, std::string>> trees;
  std::size_t failures = 0;
  for (int rep = 0; rep < 2; ++rep) {
    const fs::path dir = fresh_dir("determinism/rep" + std::to_string(rep));
    write_text_file(dir / "run.ini", config);
    const std::string cli = "cd " + dir.string() + " && " MORPHRL_CLI, cfg = " --config run.ini --seed 3";
    const std::string ckpt = "runs/rmomo-flat-3/final";
    const std::vector<std::string> commands{
        cli + " genrobots" + cfg,
        cli + " train" + cfg,
        cli + " eval" + cfg + " --checkpoint " + ckpt + " --set test --out out/test --trace-dir out/traces",
        cli + " eval" + cfg + " --checkpoint " + "runs/rmomo-flat-3/checkpoint_000002 --set test --out out/early",
        cli + " perturb-eval" + cfg + " --checkpoint " + ckpt + " --out out/perturb",
        cli + " report-delta out/test.json out/early.json --out out/delta",
        cli + " plotdata --metrics runs/rmomo-flat-3/metrics.csv --out out/curve.csv",
        cli + " plotdata --delta out/delta.csv --out out/delta_plot.csv"};
    for (const auto& c : commands) failures += std::system((c + " > /dev/null 2>&1").c_str()) != 0;
    trees.push_back(snapshot(dir));
  }
  std::size_t differing = 0;
  for (const auto& [name, body] : trees[0]) differing += !trees[1].contains(name) || trees[1].at(name) != body;
  differing += trees[0].size() != trees[1].size();
  return {failures == 0 && differing == 0 && trees[0].size() > 10,
          fmt("8 CLI commands run twice: %zu failed, %zu files compared, %zu differ", failures, trees[0].size(),
              differing)};
}

}  // namespace

int main(int argc, char** argv) {
  const char* env = std::getenv("MORPHRL_ACCEPT_DIR");
  g_work = env ? fs::path(env) : fs::current_path() / "acceptance_work";
  fs::create_directories(g_work);

  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient suite", gradients},
      {"equivariance suite", equivariance},
      {"fixed attention", fixed_attention},
      {"replay correctness", replay},
      {"GAE oracle", gae},
      {"KL early stop", kl_stop},
      {"learning smoke test", learning},
      {"directional generalization", generalization},
      {"report integrity", reports},
      {"CLI determinism", determinism}};

  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.contains(number)) continue;
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    failed += !v.pass;
    std::printf("%s [%d] %s: %s\n", v.pass ? "PASS" : "FAIL", number, criteria[i].first.c_str(), v.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}

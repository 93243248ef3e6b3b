#include "morphrl/harness/run_config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "morphrl/errors.hpp"
#include "morphrl/trainer/train.hpp"

namespace morphrl {

namespace {

using Setter = std::function<void(RunConfig&, const std::string&, const std::filesystem::path&)>;

std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return "";
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::string prefix(const std::string& key) { return key.empty() ? "" : key + ": "; }

template <class T>
T parse_number(const std::string& key, const std::string& text) {
  T value{};
  const char* begin = text.data();
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end) throw ConfigError(prefix(key) + "cannot parse '" + text + "'");
  return value;
}

bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw ConfigError(prefix(key) + "expected true or false, got '" + text + "'");
}

template <class T>
Setter number(T RunConfig::*group, auto member) {
  return [group, member](RunConfig& c, const std::string& v, const std::filesystem::path&) {
    auto& field = (c.*group).*member;
    field = parse_number<std::remove_reference_t<decltype(field)>>("", v);
  };
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& v) {
  std::filesystem::path p(v);
  return p.is_absolute() ? p : base / p;
}

const std::map<std::string, Setter>& setters() {
  static const std::map<std::string, Setter> table = [] {
    std::map<std::string, Setter> t;
    using P = const std::filesystem::path&;
    using S = const std::string&;
    t["run.arch"] = [](RunConfig& c, S v, P) { c.arch = parse_arch_kind(v); };
    t["run.seed"] = [](RunConfig& c, S v, P) { c.seed = parse_number<std::uint64_t>("run.seed", v); };
    t["run.robot_dir"] = [](RunConfig& c, S v, P b) { c.robot_dir = resolve(b, v); };
    t["run.split_file"] = [](RunConfig& c, S v, P b) { c.split_file = resolve(b, v); };
    t["run.train_set"] = [](RunConfig& c, S v, P) { c.train_set = v; };
    t["run.out_dir"] = [](RunConfig& c, S v, P b) { c.out_dir = resolve(b, v); };
    t["run.eval_episodes"] = [](RunConfig& c, S v, P) { c.eval_episodes = parse_number<std::size_t>("", v); };

    t["trainer.gamma"] = number(&RunConfig::trainer, &TrainerConfig::gamma);
    t["trainer.lam"] = number(&RunConfig::trainer, &TrainerConfig::lam);
    t["trainer.clip_eps"] = number(&RunConfig::trainer, &TrainerConfig::clip_eps);
    t["trainer.lr"] = number(&RunConfig::trainer, &TrainerConfig::lr);
    t["trainer.epochs_per_iter"] = number(&RunConfig::trainer, &TrainerConfig::epochs_per_iter);
    t["trainer.minibatch_chunks"] = number(&RunConfig::trainer, &TrainerConfig::minibatch_chunks);
    t["trainer.kl_max"] = number(&RunConfig::trainer, &TrainerConfig::kl_max);
    t["trainer.chunk_m"] = number(&RunConfig::trainer, &TrainerConfig::chunk_m);
    t["trainer.burn_in_l"] = number(&RunConfig::trainer, &TrainerConfig::burn_in_l);
    t["trainer.half_overlap"] = [](RunConfig& c, S v, P) { c.trainer.half_overlap = parse_bool("", v); };
    t["trainer.rollout_steps"] = number(&RunConfig::trainer, &TrainerConfig::rollout_steps);
    t["trainer.num_envs"] = number(&RunConfig::trainer, &TrainerConfig::num_envs);
    t["trainer.stored_hidden"] = [](RunConfig& c, S v, P) { c.trainer.stored_hidden = parse_bool("", v); };
    t["trainer.value_coef"] = number(&RunConfig::trainer, &TrainerConfig::value_coef);
    t["trainer.entropy_coef"] = number(&RunConfig::trainer, &TrainerConfig::entropy_coef);
    t["trainer.max_grad_norm"] = number(&RunConfig::trainer, &TrainerConfig::max_grad_norm);
    t["trainer.total_iters"] = number(&RunConfig::trainer, &TrainerConfig::total_iters);
    t["trainer.checkpoint_every"] = number(&RunConfig::trainer, &TrainerConfig::checkpoint_every);
    t["trainer.terrain"] = [](RunConfig& c, S v, P) { c.trainer.terrain = parse_terrain_kind(v); };
    t["trainer.horizon"] = [](RunConfig& c, S v, P) { c.trainer.sim.horizon = parse_number<int>("", v); };

    t["model.d_model"] = number(&RunConfig::model, &ModelConfig::d_model);
    t["model.ff_width"] = number(&RunConfig::model, &ModelConfig::ff_width);
    t["model.layers"] = number(&RunConfig::model, &ModelConfig::layers);
    t["model.heads"] = number(&RunConfig::model, &ModelConfig::heads);
    t["model.hyper_hidden"] = number(&RunConfig::model, &ModelConfig::hyper_hidden);
    t["model.max_limbs"] = number(&RunConfig::model, &ModelConfig::max_limbs);
    t["model.log_std_init"] = number(&RunConfig::model, &ModelConfig::log_std_init);

    auto sim = [](auto member) {
      return [member](RunConfig& c, S v, P) {
        auto& field = c.trainer.sim.*member;
        field = parse_number<std::remove_reference_t<decltype(field)>>("", v);
      };
    };
    t["sim.dt"] = sim(&SimConfig::dt);
    t["sim.omega_max"] = sim(&SimConfig::omega_max);
    t["sim.k_spring"] = sim(&SimConfig::k_spring);
    t["sim.g_slide"] = sim(&SimConfig::g_slide);
    t["sim.ctrl_cost"] = sim(&SimConfig::ctrl_cost);
    t["sim.reset_noise"] = sim(&SimConfig::reset_noise);
    t["sim.terrain_samples"] = sim(&SimConfig::terrain_samples);
    t["sim.lookahead_spacing"] = sim(&SimConfig::lookahead_spacing);

    t["robots.train"] = [](RunConfig& c, S v, P) { c.counts.train = parse_number<std::size_t>("", v); };
    t["robots.validation"] = [](RunConfig& c, S v, P) { c.counts.validation = parse_number<std::size_t>("", v); };
    t["robots.test"] = [](RunConfig& c, S v, P) { c.counts.test = parse_number<std::size_t>("", v); };
    t["robots.unique_topologies"] = [](RunConfig& c, S v, P) { c.unique_topologies = parse_bool("", v); };
    t["robots.min_limbs"] = [](RunConfig& c, S v, P) { c.gen.min_limbs = parse_number<int>("", v); };
    t["robots.max_limbs"] = [](RunConfig& c, S v, P) { c.gen.max_limbs = parse_number<int>("", v); };
    const std::pair<const char*, Range GenSpec::*> ranges[] = {
        {"mass", &GenSpec::mass},           {"length", &GenSpec::length},       {"shape_radius", &GenSpec::shape_radius},
        {"joint_low", &GenSpec::joint_low}, {"joint_high", &GenSpec::joint_high}, {"gear", &GenSpec::gear},
        {"damping", &GenSpec::damping},     {"armature", &GenSpec::armature},   {"coupling", &GenSpec::coupling}};
    for (const auto& [name, member] : ranges) {
      t[std::string("robots.") + name + "_lo"] = [member](RunConfig& c, S v, P) {
        (c.gen.*member).lo = parse_number<double>("", v);
      };
      t[std::string("robots.") + name + "_hi"] = [member](RunConfig& c, S v, P) {
        (c.gen.*member).hi = parse_number<double>("", v);
      };
    }

    t["perturb.kinds"] = [](RunConfig& c, S v, P) {
      c.perturb_kinds.clear();
      std::stringstream in(v);
      for (std::string item; std::getline(in, item, ',');) {
        item = trim(item);
        if (item.empty()) continue;
        try {
          c.perturb_kinds.push_back(parse_perturb_kind(item));
        } catch (const InvalidInput& e) {
          throw ConfigError(e.what());
        }
      }
    };
    t["perturb.draws"] = [](RunConfig& c, S v, P) { c.perturb_draws = parse_number<std::size_t>("", v); };
    t["perturb.strength"] = [](RunConfig& c, S v, P) { c.perturb_strength = parse_number<double>("", v); };
    return t;
  }();
  return table;
}

void apply(RunConfig& c, const std::string& key, const std::string& value, const std::filesystem::path& base) {
  const auto it = setters().find(key);
  if (it == setters().end()) throw ConfigError("unknown config key " + key);
  try {
    it->second(c, trim(value), base);
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    throw ConfigError(what.starts_with(key) ? what : key + ": " + what);
  }
}

}  // namespace

RunConfig parse_run_config(const std::string& text, const std::vector<std::string>& overrides,
                           const std::filesystem::path& base_dir) {
  boost::property_tree::ptree tree;
  std::istringstream in(text);
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ConfigError(std::string("config syntax: ") + e.what());
  }
  RunConfig c;
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty()) throw ConfigError("config key " + section + " is outside any section");
    for (const auto& [key, value] : body) apply(c, section + "." + key, value.data(), base_dir);
  }
  for (const std::string& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + o + "' is not key=value");
    apply(c, trim(o.substr(0, eq)), o.substr(eq + 1), std::filesystem::current_path());
  }
  finalize_run_config(c);
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), overrides, path.parent_path().empty() ? "." : path.parent_path());
}

void finalize_run_config(RunConfig& c) {
  c.model.arch = c.arch;
  c.trainer.seed = c.seed;
  c.model.lookahead_width = lookahead_width_for(c.trainer);
  validate_model_config(c.model);
  validate_trainer_config(c.trainer);
  validate_gen_spec(c.gen);
  if (c.gen.max_limbs > static_cast<int>(c.model.max_limbs)) {
    throw ConfigError("robots.max_limbs exceeds model.max_limbs");
  }
  if (c.train_set != "train" && c.train_set != "validation" && c.train_set != "test") {
    throw ConfigError("run.train_set must be train, validation or test");
  }
  if (c.perturb_kinds.empty()) throw ConfigError("perturb.kinds is empty");
}

std::string run_name(const RunConfig& c) {
  return std::string(to_string(c.arch)) + "-" + std::string(to_string(c.trainer.terrain)) + "-" + std::to_string(c.seed);
}

}  // namespace morphrl

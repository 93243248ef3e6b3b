#include "morphrl/domain/io.hpp"

#include <fstream>
#include <set>

#include "morphrl/errors.hpp"

namespace morphrl {

using nlohmann::json;

json morphology_to_json(const Morphology& m) {
  json limbs = json::array();
  for (const LimbContext& l : m.limbs) {
    limbs.push_back({{"mass", l.mass},
                     {"length", l.length},
                     {"shape_radius", l.shape_radius},
                     {"joint_low", l.joint_low},
                     {"joint_high", l.joint_high},
                     {"initial_angle", l.initial_angle},
                     {"parent_offset", {l.parent_offset[0], l.parent_offset[1]}},
                     {"gear", l.gear},
                     {"damping", l.damping},
                     {"armature", l.armature},
                     {"coupling", l.coupling}});
  }
  return {{"id", m.id}, {"limbs", limbs}, {"parent", m.parent}};
}

Morphology morphology_from_json(const json& j) {
  Morphology m;
  try {
    m.id = j.at("id").get<std::string>();
    for (const auto& lj : j.at("limbs")) {
      LimbContext l;
      l.mass = lj.at("mass").get<double>();
      l.length = lj.at("length").get<double>();
      l.shape_radius = lj.at("shape_radius").get<double>();
      l.joint_low = lj.at("joint_low").get<double>();
      l.joint_high = lj.at("joint_high").get<double>();
      l.initial_angle = lj.at("initial_angle").get<double>();
      const auto& off = lj.at("parent_offset");
      if (!off.is_array() || off.size() != 2) throw InvalidInput("parent_offset must have two entries");
      l.parent_offset = {off[0].get<double>(), off[1].get<double>()};
      l.gear = lj.at("gear").get<double>();
      l.damping = lj.at("damping").get<double>();
      l.armature = lj.at("armature").get<double>();
      l.coupling = lj.at("coupling").get<double>();
      m.limbs.push_back(l);
    }
    m.parent = j.at("parent").get<std::vector<int>>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("morphology document: ") + e.what());
  }
  validate_morphology(m);
  return m;
}

json split_to_json(const RobotSplit& s) {
  return {{"train", s.train}, {"validation", s.validation}, {"test", s.test}};
}

RobotSplit split_from_json(const json& j) {
  RobotSplit s;
  try {
    s = {j.at("train").get<std::vector<std::string>>(), j.at("validation").get<std::vector<std::string>>(),
         j.at("test").get<std::vector<std::string>>()};
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("split document: ") + e.what());
  }
  std::set<std::string> seen;
  for (const auto* part : {&s.train, &s.validation, &s.test}) {
    for (const std::string& id : *part) {
      if (!seen.insert(id).second) throw InvalidInput("split document: robot '" + id + "' listed twice");
    }
  }
  return s;
}

namespace {

json range_json(Range r) { return json::array({r.lo, r.hi}); }

void read_range(const json& j, const char* key, Range& r) {
  if (!j.contains(key)) return;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != 2) throw ConfigError(std::string("gen spec: ") + key + " must be [lo, hi]");
  r = Range{v[0].get<double>(), v[1].get<double>()};
}

}  // namespace

json gen_spec_to_json(const GenSpec& s) {
  return {{"limbs", {s.min_limbs, s.max_limbs}},  {"mass", range_json(s.mass)},
          {"length", range_json(s.length)},       {"shape_radius", range_json(s.shape_radius)},
          {"joint_low", range_json(s.joint_low)}, {"joint_high", range_json(s.joint_high)},
          {"gear", range_json(s.gear)},           {"damping", range_json(s.damping)},
          {"armature", range_json(s.armature)},   {"coupling", range_json(s.coupling)}};
}

GenSpec gen_spec_from_json(const json& j) {
  GenSpec s;
  try {
    if (j.contains("limbs")) {
      const auto& v = j.at("limbs");
      if (!v.is_array() || v.size() != 2) throw ConfigError("gen spec: limbs must be [min, max]");
      s.min_limbs = v[0].get<int>();
      s.max_limbs = v[1].get<int>();
    }
    read_range(j, "mass", s.mass);
    read_range(j, "length", s.length);
    read_range(j, "shape_radius", s.shape_radius);
    read_range(j, "joint_low", s.joint_low);
    read_range(j, "joint_high", s.joint_high);
    read_range(j, "gear", s.gear);
    read_range(j, "damping", s.damping);
    read_range(j, "armature", s.armature);
    read_range(j, "coupling", s.coupling);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("gen spec: ") + e.what());
  }
  validate_gen_spec(s);
  return s;
}

json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

void write_json_file(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing " + path.string());
}

Morphology load_morphology(const std::filesystem::path& path) { return morphology_from_json(read_json_file(path)); }

void save_morphology(const std::filesystem::path& path, const Morphology& m) {
  write_json_file(path, morphology_to_json(m));
}

std::vector<Morphology> load_robot_set(const std::filesystem::path& robot_dir, const std::filesystem::path& split_file,
                                       const std::string& partition) {
  const RobotSplit split = split_from_json(read_json_file(split_file));
  const std::vector<std::string>* ids = nullptr;
  if (partition == "train") {
    ids = &split.train;
  } else if (partition == "validation") {
    ids = &split.validation;
  } else if (partition == "test") {
    ids = &split.test;
  } else {
    throw ConfigError("unknown robot set '" + partition + "' (expected train, validation or test)");
  }
  std::vector<Morphology> robots;
  for (const auto& id : *ids) robots.push_back(load_morphology(robot_dir / (id + ".json")));
  return robots;
}

}  // namespace morphrl

#include "morphrl/arch/policy.hpp"

#include "morphrl/errors.hpp"

namespace morphrl {

std::string_view to_string(ArchKind arch) {
  switch (arch) {
    case ArchKind::metamorph: return "metamorph";
    case ArchKind::modumorph: return "modumorph";
    case ArchKind::rmemo: return "rmemo";
    case ArchKind::rmomo: return "rmomo";
  }
  return "unknown";
}

ArchKind parse_arch_kind(std::string_view name) {
  for (ArchKind a : {ArchKind::metamorph, ArchKind::modumorph, ArchKind::rmemo, ArchKind::rmomo}) {
    if (to_string(a) == name) return a;
  }
  throw ConfigError("unknown architecture '" + std::string(name) + "' (expected metamorph, modumorph, rmemo, rmomo)");
}

bool is_recurrent(ArchKind arch) { return arch == ArchKind::rmemo || arch == ArchKind::rmomo; }

bool uses_fixed_attention(ArchKind arch) { return arch == ArchKind::modumorph || arch == ArchKind::rmomo; }

void validate_model_config(const ModelConfig& c) {
  if (c.d_model < 2) throw ConfigError("model.d_model must be >= 2");
  if (c.arch == ArchKind::rmemo && c.d_model % 2 != 0) throw ConfigError("model.d_model must be even for rmemo");
  if (c.heads < 1 || c.d_model % c.heads != 0) throw ConfigError("model.heads must divide model.d_model");
  if (c.layers < 1) throw ConfigError("model.layers must be >= 1");
  if (c.ff_width < 1) throw ConfigError("model.ff_width must be >= 1");
  if (c.hyper_hidden < 1) throw ConfigError("model.hyper_hidden must be >= 1");
  if (c.max_limbs < 1) throw ConfigError("model.max_limbs must be >= 1");
  if (c.log_std_init < kLogStdMin || c.log_std_init > kLogStdMax) {
    throw ConfigError("model.log_std_init must lie in [-3, 1]");
  }
}

std::size_t state_feature_width(const ModelConfig& config) { return kStateWidth + config.lookahead_width; }

}  // namespace morphrl

#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "morphrl/numeric/autodiff.hpp"

namespace morphrl {

struct Parameter {
  std::string name;
  Var var;
  bool trainable = true;
};

// Ordered, uniquely named collection of learnable arrays.
class ParamStore {
 public:
  // Registers a parameter; names must be unique.
  Var add(std::string name, Array init, bool trainable = true);

  const Var& get(std::string_view name) const;
  bool contains(std::string_view name) const { return index_.contains(std::string(name)); }
  void set_trainable(std::string_view name, bool trainable);

  const std::vector<Parameter>& items() const { return items_; }
  std::size_t size() const { return items_.size(); }
  std::size_t scalar_count() const;

  // Deep copy with fresh nodes.
  ParamStore clone() const;
  // Copies values from another store with identical names and shapes.
  void assign_values(const ParamStore& other);
  // FNV-1a over names and raw value bytes.
  std::uint64_t fingerprint() const;

 private:
  std::vector<Parameter> items_;
  std::unordered_map<std::string, std::size_t> index_;
};

using GradientMap = std::map<std::string, Array>;

// Gradient of a scalar loss for every parameter; unreachable or
// non-trainable parameters get zero arrays.
GradientMap backward(const Var& loss, const ParamStore& params);

// Max over trainable coordinates of |analytic − numeric| / max(1e-8, |numeric|),
// with numeric = (f(p+eps) − f(p−eps)) / (2·eps). f must rebuild its graph
// from the current parameter values on every call.
double finite_diff_check(const std::function<Var()>& f, ParamStore& params, double eps);

// Binary format: "MRL1", then per parameter a u32 name length, UTF-8 name,
// u8 rank, u32 dims, f64 data; all little-endian.
std::vector<std::uint8_t> serialize_params(const ParamStore& params);
ParamStore deserialize_params(std::span<const std::uint8_t> bytes);
void save_params(const ParamStore& params, const std::filesystem::path& path);
ParamStore load_params(const std::filesystem::path& path);

}  // namespace morphrl

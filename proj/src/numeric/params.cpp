#include "morphrl/numeric/params.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <iterator>

#include "morphrl/errors.hpp"

namespace morphrl {

namespace {

constexpr std::uint64_t kFnvOffset = 0xcbf29ce484222325ULL;
constexpr std::uint64_t kFnvPrime = 0x100000001b3ULL;

void fnv_bytes(std::uint64_t& h, const void* data, std::size_t n) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= kFnvPrime;
  }
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f64(std::vector<std::uint8_t>& out, double v) {
  const auto bits = std::bit_cast<std::uint64_t>(v);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(bits >> (8 * i)));
}

class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  bool done() const { return pos_ == bytes_.size(); }
  std::uint8_t u8() {
    need(1);
    return bytes_[pos_++];
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return std::bit_cast<double>(v);
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw IoError("truncated parameter file");
  }
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

Var ParamStore::add(std::string name, Array init, bool trainable) {
  if (index_.contains(name)) throw InvalidInput("duplicate parameter name: " + name);
  index_.emplace(name, items_.size());
  Var v(std::move(init), trainable);
  items_.push_back(Parameter{std::move(name), v, trainable});
  return v;
}

const Var& ParamStore::get(std::string_view name) const {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw InvalidInput("unknown parameter: " + std::string(name));
  return items_[it->second].var;
}

void ParamStore::set_trainable(std::string_view name, bool trainable) {
  auto it = index_.find(std::string(name));
  if (it == index_.end()) throw InvalidInput("unknown parameter: " + std::string(name));
  items_[it->second].trainable = trainable;
  items_[it->second].var.node()->requires_grad = trainable;
}

std::size_t ParamStore::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : items_) n += p.var.size();
  return n;
}

ParamStore ParamStore::clone() const {
  ParamStore out;
  for (const auto& p : items_) out.add(p.name, p.var.value(), p.trainable);
  return out;
}

void ParamStore::assign_values(const ParamStore& other) {
  for (auto& p : items_) {
    const Var& src = other.get(p.name);
    if (src.shape() != p.var.shape()) {
      throw InvalidInput("parameter " + p.name + " shape " + shape_string(src.shape()) + " vs " +
                         shape_string(p.var.shape()));
    }
    p.var.mutable_value() = src.value();
  }
}

std::uint64_t ParamStore::fingerprint() const {
  std::uint64_t h = kFnvOffset;
  for (const auto& p : items_) {
    fnv_bytes(h, p.name.data(), p.name.size());
    const auto data = p.var.value().data();
    fnv_bytes(h, data.data(), data.size_bytes());
  }
  return h;
}

GradientMap backward(const Var& loss, const ParamStore& params) {
  for (const auto& p : params.items()) {
    if (p.var.requires_grad()) p.var.node()->grad = Array(p.var.shape());
  }
  run_backward(loss);
  GradientMap grads;
  for (const auto& p : params.items()) {
    const Array& g = p.var.grad();
    if (p.var.requires_grad() && g.shape() == p.var.shape()) {
      grads.emplace(p.name, g);
    } else {
      grads.emplace(p.name, Array(p.var.shape()));
    }
  }
  return grads;
}

double finite_diff_check(const std::function<Var()>& f, ParamStore& params, double eps) {
  if (!(eps >= 1e-8 && eps <= 1e-3)) throw InvalidInput("finite_diff_check: eps must lie in [1e-8, 1e-3]");
  const GradientMap analytic = backward(f(), params);
  NoGradGuard no_grad;
  double worst = 0.0;
  for (const auto& p : params.items()) {
    if (!p.trainable) continue;
    Var v = p.var;
    Array& value = v.mutable_value();
    const Array& g = analytic.at(p.name);
    for (std::size_t i = 0; i < value.size(); ++i) {
      const double saved = value[i];
      value[i] = saved + eps;
      const double fp = f().value().item();
      value[i] = saved - eps;
      const double fm = f().value().item();
      value[i] = saved;
      const double numeric = (fp - fm) / (2.0 * eps);
      worst = std::max(worst, std::abs(g[i] - numeric) / std::max(1e-8, std::abs(numeric)));
    }
  }
  return worst;
}

std::vector<std::uint8_t> serialize_params(const ParamStore& params) {
  std::vector<std::uint8_t> out{'M', 'R', 'L', '1'};
  for (const auto& p : params.items()) {
    put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.insert(out.end(), p.name.begin(), p.name.end());
    const Shape& shape = p.var.shape();
    if (shape.size() > 255) throw InvalidInput("parameter rank exceeds 255: " + p.name);
    out.push_back(static_cast<std::uint8_t>(shape.size()));
    for (std::size_t d : shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : p.var.value().data()) put_f64(out, v);
  }
  return out;
}

ParamStore deserialize_params(std::span<const std::uint8_t> bytes) {
  Reader in(bytes);
  if (in.str(4) != "MRL1") throw IoError("bad parameter file magic");
  ParamStore store;
  while (!in.done()) {
    std::string name = in.str(in.u32());
    const std::size_t rank = in.u8();
    Shape shape(rank);
    for (auto& d : shape) d = in.u32();
    std::vector<double> data(shape_size(shape));
    for (auto& v : data) v = in.f64();
    store.add(std::move(name), Array(std::move(shape), std::move(data)));
  }
  return store;
}

void save_params(const ParamStore& params, const std::filesystem::path& path) {
  const auto bytes = serialize_params(params);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + path.string());
}

ParamStore load_params(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_params(bytes);
}

}  // namespace morphrl

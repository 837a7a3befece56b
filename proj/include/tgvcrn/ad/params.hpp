#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <unordered_map>
#include <vector>

#include "tgvcrn/ad/tensor.hpp"

namespace tgvcrn::ad {

struct AdamConfig {
  double lr = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Named learnable tensors in insertion order, with gradients and Adam moments.
class ParamStore {
 public:
  int add(const std::string& name, Tensor init);
  int index(const std::string& name) const;
  bool contains(const std::string& name) const { return by_name_.count(name) > 0; }

  int size() const { return static_cast<int>(values_.size()); }
  const std::string& name(int i) const { return names_[i]; }
  Tensor& value(int i) { return values_[i]; }
  const Tensor& value(int i) const { return values_[i]; }
  const Tensor& grad(int i) const { return grads_[i]; }
  bool has_grad(int i) const { return has_grad_[i]; }
  const Tensor& adam_m(int i) const { return m_[i]; }
  const Tensor& adam_v(int i) const { return v_[i]; }
  std::int64_t step_count() const { return step_count_; }
  std::int64_t num_scalars() const;

  // Adds g into the gradient of parameter i and marks it populated.
  void accumulate_grad(int i, const Tensor& g);
  // Marks every gradient as populated (zero where nothing was accumulated).
  void mark_all_grads();
  void zero_grads();
  void scale_grads(double s);
  double grad_norm() const;

  // Bias-corrected Adam on every parameter. Throws ContractError if any
  // gradient is missing; leaves gradients untouched.
  void adam_step(const AdamConfig& cfg);

  // Copies values (not moments) from another store with identical layout.
  void copy_values_from(const ParamStore& other);

  // Text manifest (name, shape, offset) plus a little-endian f64 blob holding
  // values followed by both moment arrays. Round trip is bit-exact.
  void save(const std::filesystem::path& manifest, const std::filesystem::path& blob,
            const std::string& tag = "") const;
  // Loads into a store whose layout (names, shapes, order) already matches.
  // Returns the tag written by save().
  std::string load(const std::filesystem::path& manifest, const std::filesystem::path& blob);

  bool operator==(const ParamStore& o) const;

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, int> by_name_;
  std::vector<Tensor> values_, grads_, m_, v_;
  std::vector<bool> has_grad_;
  std::int64_t step_count_ = 0;
};

}  // namespace tgvcrn::ad

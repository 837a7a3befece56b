#include "tgvcrn/ad/params.hpp"

#include <cmath>
#include <sstream>

#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::ad {

int ParamStore::add(const std::string& name, Tensor init) {
  if (by_name_.count(name)) throw ContractError("duplicate parameter name: " + name);
  const int idx = size();
  names_.push_back(name);
  by_name_[name] = idx;
  grads_.emplace_back(init.rows(), init.cols());
  m_.emplace_back(init.rows(), init.cols());
  v_.emplace_back(init.rows(), init.cols());
  values_.push_back(std::move(init));
  has_grad_.push_back(false);
  return idx;
}

int ParamStore::index(const std::string& name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) throw ContractError("unknown parameter: " + name);
  return it->second;
}

std::int64_t ParamStore::num_scalars() const {
  std::int64_t n = 0;
  for (const auto& v : values_) n += v.size();
  return n;
}

void ParamStore::accumulate_grad(int i, const Tensor& g) {
  if (!g.same_shape(values_[i])) {
    throw DimensionError("gradient shape " + g.shape_str() + " for parameter " + names_[i] +
                         " of shape " + values_[i].shape_str());
  }
  grads_[i].arr() += g.arr();
  has_grad_[i] = true;
}

void ParamStore::mark_all_grads() {
  for (std::size_t i = 0; i < has_grad_.size(); ++i) has_grad_[i] = true;
}

void ParamStore::zero_grads() {
  for (std::size_t i = 0; i < grads_.size(); ++i) {
    grads_[i].arr().setZero();
    has_grad_[i] = false;
  }
}

void ParamStore::scale_grads(double s) {
  for (auto& g : grads_) g.arr() *= s;
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& g : grads_) sq += g.arr().square().sum();
  return std::sqrt(sq);
}

void ParamStore::adam_step(const AdamConfig& cfg) {
  for (int i = 0; i < size(); ++i) {
    if (!has_grad_[i]) throw ContractError("adam_step: missing gradient for " + names_[i]);
  }
  ++step_count_;
  const double t = static_cast<double>(step_count_);
  const double bc1 = 1.0 - std::pow(cfg.beta1, t);
  const double bc2 = 1.0 - std::pow(cfg.beta2, t);
  for (int i = 0; i < size(); ++i) {
    auto g = grads_[i].arr();
    auto m = m_[i].arr();
    auto v = v_[i].arr();
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.square();
    values_[i].arr() -= cfg.lr * (m / bc1) / ((v / bc2).sqrt() + cfg.eps);
  }
}

void ParamStore::copy_values_from(const ParamStore& other) {
  if (other.size() != size()) throw ContractError("parameter layouts differ");
  for (int i = 0; i < size(); ++i) {
    if (other.names_[i] != names_[i] || !other.values_[i].same_shape(values_[i])) {
      throw ContractError("parameter layouts differ at " + names_[i]);
    }
    values_[i] = other.values_[i];
  }
}

void ParamStore::save(const std::filesystem::path& manifest, const std::filesystem::path& blob,
                      const std::string& tag) const {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(num_scalars()) * 3);
  std::ostringstream text;
  text << "format tgvcrn-params 1\n";
  text << "tag " << (tag.empty() ? "-" : tag) << "\n";
  text << "step_count " << step_count_ << "\n";
  text << "count " << size() << "\n";
  std::size_t offset = 0;
  for (int i = 0; i < size(); ++i) {
    text << "param " << names_[i] << " " << values_[i].rows() << " " << values_[i].cols() << " "
         << offset << "\n";
    offset += values_[i].size();
  }
  text << "layout values,adam_m,adam_v scalars_each " << offset << "\n";
  for (const auto* group : {&values_, &m_, &v_}) {
    for (const auto& t : *group) flat.insert(flat.end(), t.values().begin(), t.values().end());
  }
  io::write_text(manifest, text.str());
  io::write_f64(blob, flat);
}

std::string ParamStore::load(const std::filesystem::path& manifest,
                             const std::filesystem::path& blob) {
  std::istringstream in(io::read_text(manifest));
  std::string word, tag;
  std::int64_t steps = 0;
  int count = 0;
  in >> word >> word >> word;  // format line
  in >> word >> tag;
  in >> word >> steps;
  in >> word >> count;
  if (!in || count != size()) {
    throw ContractError("checkpoint " + manifest.string() + " does not match the model layout");
  }
  for (int i = 0; i < count; ++i) {
    std::string name;
    int r = 0, c = 0;
    std::size_t off = 0;
    in >> word >> name >> r >> c >> off;
    if (!in || word != "param" || name != names_[i] || r != values_[i].rows() ||
        c != values_[i].cols()) {
      throw ContractError("checkpoint parameter mismatch at entry " + std::to_string(i) +
                          " (" + name + ")");
    }
  }
  const std::size_t n = static_cast<std::size_t>(num_scalars());
  const auto flat = io::read_f64(blob, 3 * n);
  std::size_t pos = 0;
  for (auto* group : {&values_, &m_, &v_}) {
    for (auto& t : *group) {
      std::copy(flat.begin() + pos, flat.begin() + pos + t.size(), t.values().begin());
      pos += t.size();
    }
  }
  step_count_ = steps;
  return tag == "-" ? "" : tag;
}

bool ParamStore::operator==(const ParamStore& o) const {
  return names_ == o.names_ && values_ == o.values_ && m_ == o.m_ && v_ == o.v_ &&
         step_count_ == o.step_count_;
}

}  // namespace tgvcrn::ad

#include "tgvcrn/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::train {
namespace {

using Episodes = std::vector<const boid::TrajectorySample*>;

model::Batch make_batch(const Episodes& eps, std::size_t begin, std::size_t end) {
  return model::Batch::from_episodes(
      std::span<const boid::TrajectorySample* const>(eps.data() + begin, end - begin));
}

void add_scaled(LossComponents& acc, const LossComponents& v, double s) {
  acc.total += s * v.total;
  acc.y += s * v.y;
  acc.x += s * v.x;
  acc.a += s * v.a;
  acc.gvrnn += s * v.gvrnn;
}

std::string row(const LossComponents& c) {
  std::ostringstream o;
  o << io::format_double(c.total) << ',' << io::format_double(c.y) << ','
    << io::format_double(c.x) << ',' << io::format_double(c.a) << ','
    << io::format_double(c.gvrnn);
  return o.str();
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs < 0) throw ConfigError("train.epochs must be >= 0");
  if (batch_size < 1 || chunk < 1) throw ConfigError("train.batch_size and train.chunk must be positive");
  if (!(lr > 0.0)) throw ConfigError("train.lr must be positive");
  if (!(clip_norm > 0.0)) throw ConfigError("train.clip_norm must be positive");
  weights.validate();
}

TrainConfig train_from_config(const KeyValueConfig& c) {
  TrainConfig t;
  t.epochs = static_cast<int>(c.get_int("train.epochs", t.epochs));
  t.batch_size = static_cast<int>(c.get_int("train.batch_size", t.batch_size));
  t.chunk = static_cast<int>(c.get_int("train.chunk", t.chunk));
  t.lr = c.get_double("train.lr", t.lr);
  t.clip_norm = c.get_double("train.clip_norm", t.clip_norm);
  t.weights.alpha = c.get_double("train.alpha", t.weights.alpha);
  t.weights.gamma = c.get_double("train.gamma", t.weights.gamma);
  t.weights.lambda = c.get_double("train.lambda", t.weights.lambda);
  t.validate();
  return t;
}

void train_to_config(const TrainConfig& t, KeyValueConfig& c) {
  c.set("train.epochs", std::to_string(t.epochs));
  c.set("train.batch_size", std::to_string(t.batch_size));
  c.set("train.chunk", std::to_string(t.chunk));
  c.set("train.lr", io::format_double(t.lr));
  c.set("train.clip_norm", io::format_double(t.clip_norm));
  c.set("train.alpha", io::format_double(t.weights.alpha));
  c.set("train.gamma", io::format_double(t.weights.gamma));
  c.set("train.lambda", io::format_double(t.weights.lambda));
}

LossComponents dataset_loss(const model::Model& m, const std::vector<boid::TrajectorySample>& eps,
                            const LossWeights& w, int chunk, std::uint64_t seed) {
  if (eps.empty()) throw ContractError("loss over an empty episode set");
  Episodes ptrs;
  for (const auto& e : eps) ptrs.push_back(&e);
  LossComponents acc;
  std::size_t c = 0;
  for (std::size_t begin = 0; begin < ptrs.size(); begin += chunk, ++c) {
    const std::size_t end = std::min(ptrs.size(), begin + chunk);
    const model::Batch batch = make_batch(ptrs, begin, end);
    model::Tape tape(const_cast<ad::ParamStore*>(&m.params()));
    Rng rng(derive_seed(seed, "loss", c));
    const auto r = m.rollout(tape, batch, {model::Mode::Train, false}, rng);
    add_scaled(acc, loss_total(tape, m, r, batch, w).values(),
               static_cast<double>(end - begin) / ptrs.size());
  }
  return acc;
}

TrainResult fit(model::Model& m, const std::vector<boid::TrajectorySample>& train,
                const std::vector<boid::TrajectorySample>& val, const TrainConfig& cfg,
                std::ostream* progress) {
  cfg.validate();
  if (train.empty() || val.empty()) throw ContractError("training needs train and val episodes");
  ad::ParamStore& store = m.params();
  const std::uint64_t val_seed = derive_seed(cfg.seed, "val", 0);
  const ad::AdamConfig adam{cfg.lr};

  TrainResult result;
  result.initial_val = dataset_loss(m, val, cfg.weights, cfg.chunk, val_seed);
  result.best_val = result.initial_val.total;
  ad::ParamStore best = store;
  if (progress) *progress << "epoch 0 val " << result.best_val << "\n";

  Episodes order;
  for (const auto& e : train) order.push_back(&e);
  const std::size_t n = order.size();
  const std::size_t n_batches = (n + cfg.batch_size - 1) / cfg.batch_size;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng shuffle(derive_seed(cfg.seed, "shuffle", epoch));
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[shuffle.uniform_index(i + 1)]);
    }
    EpochLog log;
    log.epoch = epoch;
    for (std::size_t b = 0; b < n_batches; ++b) {
      const std::size_t b0 = b * cfg.batch_size;
      const std::size_t b1 = std::min(n, b0 + cfg.batch_size);
      const double batch_n = static_cast<double>(b1 - b0);
      store.zero_grads();
      LossComponents batch_loss;
      std::size_t c = 0;
      for (std::size_t c0 = b0; c0 < b1; c0 += cfg.chunk, ++c) {
        const std::size_t c1 = std::min(b1, c0 + cfg.chunk);
        const model::Batch batch = make_batch(order, c0, c1);
        const std::uint64_t idx = ((static_cast<std::uint64_t>(epoch) * n_batches + b) << 16) + c;
        Rng rng(derive_seed(cfg.seed, "train", idx));
        try {
          model::Tape tape(&store);
          const auto r = m.rollout(tape, batch, {model::Mode::Train, false}, rng);
          const LossTerms L = loss_total(tape, m, r, batch, cfg.weights);
          const double share = (c1 - c0) / batch_n;
          tape.backward(L.total * share);
          add_scaled(batch_loss, L.values(), share);
        } catch (const NumericError& e) {
          throw NumericError("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b) + ": " + e.what());
        }
      }
      store.mark_all_grads();
      const double norm = store.grad_norm();
      if (!std::isfinite(norm)) {
        throw NumericError("non-finite gradient norm at epoch " + std::to_string(epoch));
      }
      log.max_grad_norm = std::max(log.max_grad_norm, norm);
      if (norm > cfg.clip_norm) {
        store.scale_grads(cfg.clip_norm / norm);
        ++log.clipped;
        if (progress) *progress << "  clipped gradient norm " << norm << " in batch " << b << "\n";
      }
      store.adam_step(adam);
      add_scaled(log.train, batch_loss, batch_n / n);
    }
    log.val = dataset_loss(m, val, cfg.weights, cfg.chunk, val_seed);
    if (!std::isfinite(log.val.total)) throw NumericError("validation loss is not finite");
    if (log.val.total < result.best_val) {
      result.best_val = log.val.total;
      result.best_epoch = epoch;
      best = store;
    }
    if (progress) {
      *progress << "epoch " << epoch << " train " << log.train.total << " val " << log.val.total
                << "\n";
    }
    result.log.push_back(log);
  }
  store = std::move(best);
  return result;
}

void write_loss_csv(const std::filesystem::path& path, const TrainResult& r) {
  std::ostringstream o;
  o << "epoch,train_total,train_y,train_x,train_a,train_gvrnn,val_total,val_y,val_x,val_a,"
       "val_gvrnn,clipped,max_grad_norm\n";
  for (const auto& e : r.log) {
    o << e.epoch << ',' << row(e.train) << ',' << row(e.val) << ',' << e.clipped << ','
      << io::format_double(e.max_grad_norm) << '\n';
  }
  io::write_text(path, o.str());
}

}  // namespace tgvcrn::train

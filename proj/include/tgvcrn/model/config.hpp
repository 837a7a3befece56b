#pragma once

#include <string>
#include <vector>

#include "tgvcrn/common/kvconfig.hpp"

namespace tgvcrn::model {

enum class Variant { TGV_CRN, GV_CRN, TG_CRN, TV_CRN, RNN_BASELINE };

std::string variant_name(Variant v);
Variant parse_variant(const std::string& s);
const std::vector<Variant>& all_variants();

struct ModelConfig {
  Variant variant = Variant::TGV_CRN;
  int hidden = 32;       // per-agent recurrent state H
  int latent = 8;        // per-agent latent Z
  int mlp_hidden = 64;   // hidden width of every MLP
  int edge_hidden = 64;  // f_e hidden width
  int message = 64;      // f_e output width
  int rnn_hidden = 64;   // RNN baseline state
  bool use_grl = true;
  double grl_scale = 1.0;
  // Latent draws averaged per counterfactual prediction; 0 uses prior means.
  int ite_samples = 0;

  bool graph() const { return variant == Variant::TGV_CRN || variant == Variant::GV_CRN ||
                              variant == Variant::TG_CRN; }
  bool theory() const { return variant == Variant::TGV_CRN || variant == Variant::TG_CRN ||
                               variant == Variant::TV_CRN; }
  bool stochastic() const { return variant != Variant::TG_CRN && variant != Variant::RNN_BASELINE; }
  bool operator==(const ModelConfig&) const = default;
};

ModelConfig model_from_config(const KeyValueConfig& cfg);
void model_to_config(const ModelConfig& m, KeyValueConfig& cfg);

}  // namespace tgvcrn::model

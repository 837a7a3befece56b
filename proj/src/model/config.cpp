#include "tgvcrn/model/config.hpp"

#include "tgvcrn/common/binio.hpp"
#include "tgvcrn/common/errors.hpp"

namespace tgvcrn::model {

std::string variant_name(Variant v) {
  switch (v) {
    case Variant::TGV_CRN: return "TGV_CRN";
    case Variant::GV_CRN: return "GV_CRN";
    case Variant::TG_CRN: return "TG_CRN";
    case Variant::TV_CRN: return "TV_CRN";
    case Variant::RNN_BASELINE: return "RNN_BASELINE";
  }
  return "?";
}

const std::vector<Variant>& all_variants() {
  static const std::vector<Variant> v{Variant::TGV_CRN, Variant::GV_CRN, Variant::TG_CRN,
                                      Variant::TV_CRN, Variant::RNN_BASELINE};
  return v;
}

Variant parse_variant(const std::string& s) {
  for (Variant v : all_variants()) {
    if (variant_name(v) == s) return v;
  }
  throw ConfigError("unknown model variant: " + s);
}

ModelConfig model_from_config(const KeyValueConfig& c) {
  ModelConfig m;
  m.variant = parse_variant(c.get_string("model.variant", variant_name(m.variant)));
  m.hidden = static_cast<int>(c.get_int("model.hidden", m.hidden));
  m.latent = static_cast<int>(c.get_int("model.latent", m.latent));
  m.mlp_hidden = static_cast<int>(c.get_int("model.mlp_hidden", m.mlp_hidden));
  m.edge_hidden = static_cast<int>(c.get_int("model.edge_hidden", m.edge_hidden));
  m.message = static_cast<int>(c.get_int("model.message", m.message));
  m.rnn_hidden = static_cast<int>(c.get_int("model.rnn_hidden", m.rnn_hidden));
  m.use_grl = c.get_int("model.use_grl", m.use_grl ? 1 : 0) != 0;
  m.grl_scale = c.get_double("model.grl_scale", m.grl_scale);
  m.ite_samples = static_cast<int>(c.get_int("model.ite_samples", m.ite_samples));
  for (int v : {m.hidden, m.latent, m.mlp_hidden, m.edge_hidden, m.message, m.rnn_hidden}) {
    if (v < 1) throw ConfigError("model sizes must be positive");
  }
  if (!(m.grl_scale > 0.0)) throw ConfigError("model.grl_scale must be positive");
  if (m.ite_samples < 0) throw ConfigError("model.ite_samples must be >= 0");
  return m;
}

void model_to_config(const ModelConfig& m, KeyValueConfig& c) {
  c.set("model.variant", variant_name(m.variant));
  c.set("model.hidden", std::to_string(m.hidden));
  c.set("model.latent", std::to_string(m.latent));
  c.set("model.mlp_hidden", std::to_string(m.mlp_hidden));
  c.set("model.edge_hidden", std::to_string(m.edge_hidden));
  c.set("model.message", std::to_string(m.message));
  c.set("model.rnn_hidden", std::to_string(m.rnn_hidden));
  c.set("model.use_grl", m.use_grl ? "1" : "0");
  c.set("model.grl_scale", io::format_double(m.grl_scale));
  c.set("model.ite_samples", std::to_string(m.ite_samples));
}

}  // namespace tgvcrn::model

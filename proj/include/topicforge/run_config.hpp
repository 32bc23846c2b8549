#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>

#include "topicforge/corpus.hpp"
#include "topicforge/dataset.hpp"
#include "topicforge/json_io.hpp"

namespace topicforge {

enum class ModelKind { lda, nmf, hlda, dtm, pltm };

inline std::string to_string(ModelKind k) {
  switch (k) {
    case ModelKind::lda: return "lda";
    case ModelKind::nmf: return "nmf";
    case ModelKind::hlda: return "hlda";
    case ModelKind::dtm: return "dtm";
    case ModelKind::pltm: return "pltm";
  }
  return "?";
}

inline ModelKind parse_model_kind(const std::string& s) {
  for (auto k : {ModelKind::lda, ModelKind::nmf, ModelKind::hlda, ModelKind::dtm, ModelKind::pltm})
    if (to_string(k) == s) return k;
  throw InvalidArgument("unknown model kind '" + s + "'");
}

/// Every knob of a training run. Serialized next to the artifact as
/// `run-config.json`; parsing rejects unknown keys.
struct RunConfig {
  ModelKind model_kind = ModelKind::lda;
  // Topic count K; for hlda the depth limit L.
  std::size_t num_topics = 10;
  std::map<std::string, double> hyperparameters;
  // Gibbs sweeps (per slice for dtm) or NMF iterations.
  std::size_t iterations = 0;
  std::size_t infer_sweeps = 100;
  std::uint64_t seed = 0;
  std::string dataset_path;
  std::string output_path;
  std::optional<PreprocessConfig> preprocess;

  static std::set<std::string> allowed_hyperparameters(ModelKind kind) {
    switch (kind) {
      case ModelKind::lda:
      case ModelKind::pltm: return {"alpha", "beta"};
      case ModelKind::nmf: return {"eps"};
      case ModelKind::hlda: return {"gamma", "alpha_level", "beta"};
      case ModelKind::dtm: return {"alpha", "beta", "kappa"};
    }
    return {};
  }

  static std::size_t default_iterations(ModelKind kind) {
    switch (kind) {
      case ModelKind::lda:
      case ModelKind::pltm: return 500;
      case ModelKind::nmf: return 200;
      case ModelKind::hlda:
      case ModelKind::dtm: return 300;
    }
    return 0;
  }

  /// Rejects unknown hyperparameters and fills the defaults for the rest.
  void resolve() {
    const auto allowed = allowed_hyperparameters(model_kind);
    for (const auto& [name, value] : hyperparameters)
      if (!allowed.contains(name))
        throw InvalidArgument("hyperparameter '" + name + "' does not apply to model " + to_string(model_kind));
    if (model_kind == ModelKind::hlda) {
      if (num_topics < 2) throw InvalidArgument("hlda depth must be >= 2");
    } else if (model_kind == ModelKind::nmf) {
      if (num_topics < 1) throw InvalidArgument("K must be >= 1");
    } else if (num_topics < 2) {
      throw InvalidArgument("K must be >= 2");
    }
    auto set_default = [&](const char* name, double v) { hyperparameters.try_emplace(name, v); };
    switch (model_kind) {
      case ModelKind::lda:
      case ModelKind::pltm:
        set_default("alpha", 50.0 / static_cast<double>(num_topics));
        set_default("beta", 0.01);
        break;
      case ModelKind::dtm:
        set_default("alpha", 50.0 / static_cast<double>(num_topics));
        set_default("beta", 0.01);
        set_default("kappa", 100.0);
        break;
      case ModelKind::hlda:
        set_default("gamma", 1.0);
        set_default("alpha_level", 1.0);
        set_default("beta", 0.01);
        break;
      case ModelKind::nmf:
        set_default("eps", 1e-12);
        break;
    }
    for (const auto& [name, value] : hyperparameters) {
      const bool may_be_zero = name == "kappa";
      if (!(value > 0.0) && !(may_be_zero && value == 0.0))
        throw InvalidArgument("hyperparameter '" + name + "' must be positive");
    }
    if (iterations == 0) iterations = default_iterations(model_kind);
    if (infer_sweeps == 0) throw InvalidArgument("infer_sweeps must be >= 1");
  }

  double hyper(const std::string& name) const {
    auto it = hyperparameters.find(name);
    if (it == hyperparameters.end()) throw InvalidArgument("hyperparameter '" + name + "' not set");
    return it->second;
  }

  json to_json() const {
    json j{{"model_kind", to_string(model_kind)},
           {"num_topics", num_topics},
           {"hyperparameters", hyperparameters},
           {"iterations", iterations},
           {"infer_sweeps", infer_sweeps},
           {"seed", seed},
           {"dataset_path", dataset_path},
           {"output_path", output_path}};
    if (preprocess) j["preprocess"] = preprocess_to_json(*preprocess);
    return j;
  }

  static RunConfig from_json(const json& j) {
    if (!j.is_object()) throw FormatError("run config must be a JSON object");
    RunConfig c;
    try {
      for (auto it = j.begin(); it != j.end(); ++it) {
        const auto& k = it.key();
        const auto& v = it.value();
        if (k == "model_kind") c.model_kind = parse_model_kind(v.get<std::string>());
        else if (k == "num_topics") c.num_topics = v.get<std::size_t>();
        else if (k == "hyperparameters") c.hyperparameters = v.get<std::map<std::string, double>>();
        else if (k == "iterations") c.iterations = v.get<std::size_t>();
        else if (k == "infer_sweeps") c.infer_sweeps = v.get<std::size_t>();
        else if (k == "seed") c.seed = v.get<std::uint64_t>();
        else if (k == "dataset_path") c.dataset_path = v.get<std::string>();
        else if (k == "output_path") c.output_path = v.get<std::string>();
        else if (k == "preprocess") c.preprocess = preprocess_from_json(v);
        else throw FormatError("run config: unknown key '" + k + "'");
      }
    } catch (const json::exception& e) {
      throw FormatError(std::string("run config: ") + e.what());
    }
    return c;
  }

  bool operator==(const RunConfig&) const = default;
};

}  // namespace topicforge

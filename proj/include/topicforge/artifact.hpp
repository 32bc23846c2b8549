#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "topicforge/hash.hpp"
#include "topicforge/json_io.hpp"
#include "topicforge/run_config.hpp"

namespace topicforge {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

enum class Structure { flat, tree, slices, languages };

inline std::string to_string(Structure s) {
  switch (s) {
    case Structure::flat: return "flat";
    case Structure::tree: return "tree";
    case Structure::slices: return "slices";
    case Structure::languages: return "languages";
  }
  return "?";
}

inline Structure parse_structure(const std::string& s) {
  for (auto v : {Structure::flat, Structure::tree, Structure::slices, Structure::languages})
    if (to_string(v) == s) return v;
  throw FormatError("unknown structure '" + s + "'");
}

struct TreeNodeInfo {
  int id = 0;
  std::optional<int> parent;
  int depth = 0;
  bool operator==(const TreeNodeInfo&) const = default;
};

/// Trained model state shared by every model family.
///
/// `phi` holds one topic-word matrix per language (a single entry for
/// monolingual models; rows follow `tree` order for hierarchical models).
/// Dynamic models keep `phi_slices` instead. `theta_train` has one row per
/// training document, or per document pair for cross-lingual models.
struct TopicModelArtifact {
  ModelKind kind = ModelKind::lda;
  Structure structure = Structure::flat;
  std::size_t num_topics = 0;
  double alpha = 0.0;
  double beta = 0.0;
  std::uint64_t seed = 0;
  RunConfig config;

  std::vector<std::string> languages{"en"};
  std::vector<std::string> vocab_hashes;
  std::vector<Matrix> phi;
  Matrix theta_train;

  std::vector<TreeNodeInfo> tree;
  std::size_t depth_limit = 0;

  std::vector<Matrix> phi_slices;
  double kappa = 0.0;

  std::vector<int> pair_ids;

  std::size_t num_slices() const { return phi_slices.size(); }

  std::size_t language_index(const std::string& lang) const {
    for (std::size_t i = 0; i < languages.size(); ++i)
      if (languages[i] == lang) return i;
    throw InvalidArgument("unknown language '" + lang + "'");
  }

  /// Topic-word matrix used for browsing and inference. Dynamic models
  /// default to the most recent slice.
  const Matrix& topic_word(std::size_t language = 0, std::optional<std::size_t> slice = std::nullopt) const {
    if (structure == Structure::slices) {
      const std::size_t t = slice.value_or(phi_slices.size() - 1);
      if (t >= phi_slices.size()) throw InvalidArgument("slice " + std::to_string(t) + " out of range");
      return phi_slices[t];
    }
    if (language >= phi.size()) throw InvalidArgument("language index out of range");
    return phi[language];
  }

  std::size_t vocab_size(std::size_t language = 0) const { return topic_word(language).cols(); }

  bool operator==(const TopicModelArtifact& o) const {
    auto same = [](const std::vector<Matrix>& a, const std::vector<Matrix>& b) {
      if (a.size() != b.size()) return false;
      for (std::size_t i = 0; i < a.size(); ++i)
        if (a[i].rows() != b[i].rows() || a[i].cols() != b[i].cols() || a[i] != b[i]) return false;
      return true;
    };
    return kind == o.kind && structure == o.structure && num_topics == o.num_topics && alpha == o.alpha &&
           beta == o.beta && seed == o.seed && config == o.config && languages == o.languages &&
           vocab_hashes == o.vocab_hashes && same(phi, o.phi) && theta_train.rows() == o.theta_train.rows() &&
           theta_train.cols() == o.theta_train.cols() && theta_train == o.theta_train && tree == o.tree &&
           depth_limit == o.depth_limit && same(phi_slices, o.phi_slices) && kappa == o.kappa &&
           pair_ids == o.pair_ids;
  }
};

namespace detail {

inline json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

inline Matrix matrix_from_json(const json& j, const std::string& what) {
  if (!j.is_array()) throw FormatError(what + ": expected an array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows == 0 ? Eigen::Index{0} : static_cast<Eigen::Index>(j[0].size());
  Matrix m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != cols)
      throw FormatError(what + ": ragged row " + std::to_string(r));
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
  }
  return m;
}

}  // namespace detail

inline json artifact_to_json(const TopicModelArtifact& a) {
  json j;
  j["format"] = 1;
  j["kind"] = to_string(a.kind);
  j["structure"] = to_string(a.structure);
  j["K"] = a.num_topics;
  j["alpha"] = a.alpha;
  j["beta"] = a.beta;
  j["seed"] = a.seed;
  j["seed_derivation"] = {{"train", "derive_seed(seed, stream)"}, {"theta_test", "seed + doc index"}};
  j["config"] = a.config.to_json();
  switch (a.structure) {
    case Structure::flat:
    case Structure::slices:
    case Structure::tree: {
      j["language"] = a.languages.at(0);
      j["vocab_file"] = vocab_file_name(a.languages.at(0));
      j["vocab_hash"] = a.vocab_hashes.at(0);
      j["theta_train"] = detail::matrix_to_json(a.theta_train);
      if (a.structure == Structure::flat) {
        j["phi"] = detail::matrix_to_json(a.phi.at(0));
      } else if (a.structure == Structure::tree) {
        json nodes = json::array();
        json phi = json::object();
        for (std::size_t i = 0; i < a.tree.size(); ++i) {
          const auto& n = a.tree[i];
          nodes.push_back({{"id", n.id}, {"parent", n.parent ? json(*n.parent) : json(nullptr)}, {"depth", n.depth}});
          json row = json::array();
          for (Eigen::Index c = 0; c < a.phi.at(0).cols(); ++c) row.push_back(a.phi[0](static_cast<Eigen::Index>(i), c));
          phi[std::to_string(n.id)] = std::move(row);
        }
        j["tree"] = {{"nodes", std::move(nodes)}, {"depth_limit", a.depth_limit}};
        j["phi"] = std::move(phi);
      } else {
        j["num_slices"] = a.phi_slices.size();
        j["kappa"] = a.kappa;
        json slices = json::array();
        for (const auto& m : a.phi_slices) slices.push_back(detail::matrix_to_json(m));
        j["phi_slices"] = std::move(slices);
      }
      break;
    }
    case Structure::languages: {
      j["languages"] = a.languages;
      json phi = json::object();
      json files = json::object();
      json hashes = json::object();
      for (std::size_t l = 0; l < a.languages.size(); ++l) {
        phi[a.languages[l]] = detail::matrix_to_json(a.phi.at(l));
        files[a.languages[l]] = vocab_file_name(a.languages[l]);
        hashes[a.languages[l]] = a.vocab_hashes.at(l);
      }
      j["phi"] = std::move(phi);
      j["vocab_files"] = std::move(files);
      j["vocab_hash"] = std::move(hashes);
      json theta = json::object();
      for (std::size_t p = 0; p < a.pair_ids.size(); ++p) {
        json row = json::array();
        for (Eigen::Index c = 0; c < a.theta_train.cols(); ++c) row.push_back(a.theta_train(static_cast<Eigen::Index>(p), c));
        theta[std::to_string(a.pair_ids[p])] = std::move(row);
      }
      j["theta_train"] = std::move(theta);
      break;
    }
  }
  return j;
}

inline TopicModelArtifact artifact_from_json(const json& j) {
  TopicModelArtifact a;
  try {
    if (j.at("format").get<int>() != 1) throw FormatError("model.json: unsupported format version");
    a.kind = parse_model_kind(j.at("kind").get<std::string>());
    a.structure = parse_structure(j.at("structure").get<std::string>());
    a.num_topics = j.at("K").get<std::size_t>();
    a.alpha = j.at("alpha").get<double>();
    a.beta = j.at("beta").get<double>();
    a.seed = j.at("seed").get<std::uint64_t>();
    a.config = RunConfig::from_json(j.at("config"));
    if (a.structure == Structure::languages) {
      a.languages = j.at("languages").get<std::vector<std::string>>();
      for (const auto& lang : a.languages) {
        a.phi.push_back(detail::matrix_from_json(j.at("phi").at(lang), "phi." + lang));
        a.vocab_hashes.push_back(j.at("vocab_hash").at(lang).get<std::string>());
      }
      // keys of theta_train are pair ids; order rows by numeric id
      std::vector<std::pair<int, const json*>> rows;
      for (auto it = j.at("theta_train").begin(); it != j.at("theta_train").end(); ++it)
        rows.emplace_back(std::stoi(it.key()), &it.value());
      std::sort(rows.begin(), rows.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
      a.theta_train.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(a.num_topics));
      for (std::size_t p = 0; p < rows.size(); ++p) {
        a.pair_ids.push_back(rows[p].first);
        const json& row = *rows[p].second;
        if (row.size() != a.num_topics) throw FormatError("theta_train: row width differs from K");
        for (std::size_t k = 0; k < a.num_topics; ++k)
          a.theta_train(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(k)) = row[k].get<double>();
      }
    } else {
      a.languages = {j.at("language").get<std::string>()};
      a.vocab_hashes = {j.at("vocab_hash").get<std::string>()};
      a.theta_train = detail::matrix_from_json(j.at("theta_train"), "theta_train");
      if (a.structure == Structure::flat) {
        a.phi.push_back(detail::matrix_from_json(j.at("phi"), "phi"));
      } else if (a.structure == Structure::tree) {
        const auto& t = j.at("tree");
        a.depth_limit = t.at("depth_limit").get<std::size_t>();
        json rows = json::array();
        for (const auto& n : t.at("nodes")) {
          TreeNodeInfo info;
          info.id = n.at("id").get<int>();
          if (!n.at("parent").is_null()) info.parent = n.at("parent").get<int>();
          info.depth = n.at("depth").get<int>();
          a.tree.push_back(info);
          rows.push_back(j.at("phi").at(std::to_string(info.id)));
        }
        a.phi.push_back(detail::matrix_from_json(rows, "phi"));
      } else {
        a.kappa = j.at("kappa").get<double>();
        for (const auto& s : j.at("phi_slices")) a.phi_slices.push_back(detail::matrix_from_json(s, "phi_slices"));
        if (j.at("num_slices").get<std::size_t>() != a.phi_slices.size())
          throw FormatError("model.json: num_slices differs from phi_slices length");
      }
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("model.json: ") + e.what());
  }
  return a;
}

inline std::string artifact_hash_of(const std::string& model_json_bytes) { return hex64(fnv1a(model_json_bytes)); }

/// Writes `model.json` and returns its hash.
inline std::string save_artifact(const TopicModelArtifact& a, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  const std::string bytes = dump_json(artifact_to_json(a));
  write_file((dir / "model.json").string(), bytes);
  return artifact_hash_of(bytes);
}

inline TopicModelArtifact load_artifact(const std::filesystem::path& dir) {
  return artifact_from_json(read_json_file((dir / "model.json").string()));
}

}  // namespace topicforge

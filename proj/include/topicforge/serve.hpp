#pragma once

#include <algorithm>
#include <filesystem>
#include <optional>
#include <string>

#include "topicforge/hash.hpp"
#include "topicforge/json_io.hpp"
#include "topicforge/pipeline.hpp"
#include "topicforge/random.hpp"
#include "topicforge/topics.hpp"

// must follow the Eigen includes
#include "httplib.h"

namespace topicforge {

struct ApiResponse {
  int status = 200;
  json body;
};

/// Read-only request handlers over one loaded artifact. Every body carries
/// `artifact_hash`. Handlers are const and keep no per-request state, so one
/// instance can serve concurrent requests.
class TopicService {
 public:
  explicit TopicService(LoadedModel model) : model_(std::move(model)) {}

  const LoadedModel& model() const { return model_; }

  ApiResponse meta() const {
    const auto& a = model_.artifact;
    json j{{"kind", to_string(a.kind)},
           {"K", a.num_topics},
           {"structure", to_string(a.structure)},
           {"vocab_size", a.vocab_size(0)},
           {"languages", a.languages}};
    if (a.structure == Structure::slices) j["num_slices"] = a.num_slices();
    return ok(std::move(j));
  }

  /// `t` top words per topic with their phi values, highest first. Dynamic
  /// artifacts take `slice` (default last), cross-lingual ones `lang`.
  ApiResponse topics(const std::optional<std::string>& t, const std::optional<std::string>& slice = std::nullopt,
                     const std::optional<std::string>& lang = std::nullopt) const {
    const auto& a = model_.artifact;
    std::size_t li = 0;
    if (lang) {
      if (a.structure != Structure::languages && *lang != a.languages[0])
        return error(400, "artifact has no language '" + *lang + "'");
      try {
        li = a.language_index(*lang);
      } catch (const InvalidArgument& e) {
        return error(400, e.what());
      }
    }
    std::optional<std::size_t> s;
    if (slice) {
      if (a.structure != Structure::slices) return error(400, "artifact has no time slices");
      const auto v = parse_count(*slice);
      if (!v || *v >= a.num_slices()) return error(400, "slice must be an integer in [0, " + std::to_string(a.num_slices()) + ")");
      s = *v;
    }
    const Matrix& phi = a.topic_word(li, s);
    const auto V = static_cast<std::size_t>(phi.cols());
    std::size_t T = std::min<std::size_t>(10, V);
    if (t) {
      const auto v = parse_count(*t);
      if (!v || *v < 1 || *v > V) return error(400, "t must be an integer in [1, " + std::to_string(V) + "]");
      T = *v;
    }
    const Vocabulary& vocab = model_.vocabularies.at(li);
    json list = json::array();
    for (Eigen::Index k = 0; k < phi.rows(); ++k) {
      json words = json::array();
      for (const auto& w : top_weighted(phi.row(k), vocab, T)) words.push_back({{"w", vocab.token(w.id)}, {"p", w.p}});
      list.push_back({{"topic", topic_id(static_cast<std::size_t>(k))}, {"words", std::move(words)}});
    }
    return ok({{"topics", std::move(list)}});
  }

  /// Body `{"text": ..., "lang"?: ..., "slice"?: ...}`. The sampler seed is
  /// derived from the artifact seed and the text, so equal requests get
  /// equal answers.
  ApiResponse infer(const std::string& body) const {
    json req;
    try {
      req = json::parse(body);
    } catch (const json::parse_error&) {
      return error(400, "request body must be JSON");
    }
    if (!req.is_object() || !req.contains("text") || !req["text"].is_string())
      return error(400, "request needs a string field 'text'");
    const std::string text = req["text"].get<std::string>();
    if (text.find_first_not_of(" \t\r\n") == std::string::npos) return error(400, "text is empty");
    const auto& a = model_.artifact;
    std::string lang = a.languages[0];
    if (req.contains("lang")) {
      if (!req["lang"].is_string()) return error(400, "'lang' must be a string");
      lang = req["lang"].get<std::string>();
      if (std::find(a.languages.begin(), a.languages.end(), lang) == a.languages.end())
        return error(400, "artifact has no language '" + lang + "'");
    }
    std::optional<std::size_t> slice;
    if (req.contains("slice")) {
      if (a.structure != Structure::slices || !req["slice"].is_number_unsigned() ||
          req["slice"].get<std::size_t>() >= a.num_slices())
        return error(400, "invalid 'slice'");
      slice = req["slice"].get<std::size_t>();
    }
    const auto enc = encode_text(model_, text, lang);
    if (enc.ids.empty())
      return error(422, "no in-vocabulary tokens (" + std::to_string(enc.dropped) + " token(s) dropped)");
    const std::uint64_t seed = request_seed(text);
    std::vector<double> theta;
    try {
      theta = infer_theta(a, enc.ids, seed, lang, slice);
    } catch (const Error& e) {
      return error(500, e.what());
    }
    std::size_t best = 0;
    for (std::size_t k = 1; k < theta.size(); ++k)
      if (theta[k] > theta[best]) best = k;
    return ok({{"theta", theta}, {"top_topic", topic_id(best)}, {"dropped_tokens", enc.dropped}});
  }

  ApiResponse structure() const {
    const auto& a = model_.artifact;
    switch (a.structure) {
      case Structure::flat: return error(404, "flat artifact has no structure");
      case Structure::tree: {
        json edges = json::array();
        for (const auto& n : a.tree)
          if (n.parent) edges.push_back({*n.parent, n.id});
        json nodes = json::array();
        for (const auto& n : a.tree)
          nodes.push_back({{"id", n.id}, {"parent", n.parent ? json(*n.parent) : json(nullptr)}, {"depth", n.depth}});
        return ok({{"edges", std::move(edges)}, {"nodes", std::move(nodes)}});
      }
      case Structure::slices: return ok({{"num_slices", a.num_slices()}});
      case Structure::languages: return ok({{"languages", a.languages}});
    }
    return error(500, "unknown structure");
  }

  std::uint64_t request_seed(const std::string& text) const {
    return derive_seed(model_.artifact.seed, fnv1a(text));
  }

 private:
  // Tree topics are addressed by node id, all others by row index.
  int topic_id(std::size_t row) const {
    const auto& a = model_.artifact;
    return a.structure == Structure::tree ? a.tree.at(row).id : static_cast<int>(row);
  }

  static std::optional<std::size_t> parse_count(const std::string& s) {
    if (s.empty() || s.size() > 9 || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
      return std::nullopt;
    return static_cast<std::size_t>(std::stoul(s));
  }

  ApiResponse ok(json body) const {
    body["artifact_hash"] = model_.artifact_hash;
    return {200, std::move(body)};
  }

  ApiResponse error(int status, const std::string& msg) const {
    return {status, {{"error", msg}, {"artifact_hash", model_.artifact_hash}}};
  }

  LoadedModel model_;
};

namespace detail {

inline void send(httplib::Response& res, const ApiResponse& r) {
  res.status = r.status;
  res.set_content(dump_json(r.body, -1), "application/json");
}

inline std::optional<std::string> query(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

}  // namespace detail

/// Registers the API routes and, when `ui_dir` is given, serves its files under `/`.
inline void mount_routes(httplib::Server& server, const TopicService& service,
                         const std::optional<std::filesystem::path>& ui_dir = std::nullopt) {
  server.Get("/api/meta", [&service](const httplib::Request&, httplib::Response& res) {
    detail::send(res, service.meta());
  });
  server.Get("/api/topics", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::send(res, service.topics(detail::query(req, "t"), detail::query(req, "slice"), detail::query(req, "lang")));
  });
  server.Post("/api/infer", [&service](const httplib::Request& req, httplib::Response& res) {
    detail::send(res, service.infer(req.body));
  });
  server.Get("/api/structure", [&service](const httplib::Request&, httplib::Response& res) {
    detail::send(res, service.structure());
  });
  if (ui_dir) {
    if (!std::filesystem::is_directory(*ui_dir)) throw InvalidArgument("ui dir " + ui_dir->string() + " is not a directory");
    server.set_mount_point("/", ui_dir->string());
  }
}

}  // namespace topicforge

// Discover topics from a handful of raw documents in one call.
#include <iostream>
#include <string>
#include <vector>

#include "topicforge/topicforge.hpp"

int main() {
  const std::vector<std::string> docs = {
      "A document about space, satellite, launch, orbit.",
      "The satellite reached orbit after the launch from the space centre.",
      "Rocket launch schedules depend on orbit and satellite payloads.",
      "Astronauts in orbit repair the space station and its satellite dish.",
      "The football match ended after extra time and penalties.",
      "Fans watched the football team win the match on penalties.",
      "The coach praised the team after the league match.",
      "A late goal decided the football league match for the team.",
  };

  topicforge::RunConfig config;
  config.model_kind = topicforge::ModelKind::lda;
  config.num_topics = 2;
  config.iterations = 200;
  config.seed = 42;
  config.hyperparameters["alpha"] = 0.1;
  topicforge::PreprocessConfig pre;
  pre.min_doc_freq = 2;
  pre.max_doc_freq_ratio = 1.0;
  config.preprocess = pre;

  const auto result = topicforge::fit_transform(docs, config, 5);
  for (std::size_t k = 0; k < result.top_words.size(); ++k) {
    std::cout << "topic " << k << ":";
    for (const auto& w : result.top_words[k]) std::cout << ' ' << w;
    std::cout << '\n';
  }
  for (Eigen::Index d = 0; d < result.theta.rows(); ++d) {
    std::cout << "doc " << d << ":";
    for (Eigen::Index k = 0; k < result.theta.cols(); ++k) std::cout << ' ' << result.theta(d, k);
    std::cout << '\n';
  }
  return 0;
}

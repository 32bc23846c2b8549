#pragma once

#include <algorithm>
#include <cmath>
#include <set>
#include <string>
#include <vector>

#include "topicforge/artifact.hpp"
#include "topicforge/error.hpp"

namespace topicforge {

struct ClassificationResult {
  double accuracy = 0.0;
  double macro_f1 = 0.0;
  std::vector<std::string> warnings;
};

/// Multinomial logistic regression trained by full-batch gradient descent
/// from zero weights. Class ids are the distinct training labels in
/// ascending order.
class SoftmaxClassifier {
 public:
  struct Options {
    double learning_rate = 0.1;
    std::size_t iterations = 500;
    double l2 = 1e-4;
  };

  SoftmaxClassifier() = default;

  void fit(const Matrix& X, const std::vector<int>& y) { fit(X, y, Options{}); }

  void fit(const Matrix& X, const std::vector<int>& y, Options opt) {
    if (static_cast<std::size_t>(X.rows()) != y.size()) throw InvalidArgument("classifier: rows and labels differ");
    const std::set<int> distinct(y.begin(), y.end());
    classes_.assign(distinct.begin(), distinct.end());
    if (classes_.size() < 2) throw InvalidArgument("classification needs >= 2 classes in the training labels");
    const Eigen::Index N = X.rows();
    const Eigen::Index F = X.cols();
    const auto C = static_cast<Eigen::Index>(classes_.size());
    Matrix Y = Matrix::Zero(N, C);
    for (Eigen::Index i = 0; i < N; ++i) Y(i, class_index(y[static_cast<std::size_t>(i)])) = 1.0;
    W_ = Matrix::Zero(F, C);
    b_ = Eigen::RowVectorXd::Zero(C);
    const double inv_n = 1.0 / static_cast<double>(N);
    for (std::size_t it = 0; it < opt.iterations; ++it) {
      const Matrix G = probabilities(X) - Y;
      const Matrix gW = X.transpose() * G * inv_n + opt.l2 * W_;
      const Eigen::RowVectorXd gb = G.colwise().sum() * inv_n;
      W_ -= opt.learning_rate * gW;
      b_ -= opt.learning_rate * gb;
    }
  }

  Matrix probabilities(const Matrix& X) const {
    Matrix S = X * W_;
    S.rowwise() += b_;
    for (Eigen::Index r = 0; r < S.rows(); ++r) {
      const double m = S.row(r).maxCoeff();
      S.row(r) = (S.row(r).array() - m).exp().matrix();
      S.row(r) /= S.row(r).sum();
    }
    return S;
  }

  /// Predicted labels; ties go to the lowest class id.
  std::vector<int> predict(const Matrix& X) const {
    const Matrix P = probabilities(X);
    std::vector<int> out(static_cast<std::size_t>(X.rows()));
    for (Eigen::Index r = 0; r < P.rows(); ++r) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < P.cols(); ++c)
        if (P(r, c) > P(r, best)) best = c;
      out[static_cast<std::size_t>(r)] = classes_[static_cast<std::size_t>(best)];
    }
    return out;
  }

  const std::vector<int>& classes() const { return classes_; }

 private:
  Eigen::Index class_index(int label) const {
    return std::lower_bound(classes_.begin(), classes_.end(), label) - classes_.begin();
  }

  std::vector<int> classes_;
  Matrix W_;
  Eigen::RowVectorXd b_;
};

/// Accuracy and macro-F1 over the training classes of test predictions.
inline ClassificationResult classification_scores(const std::vector<int>& predicted, const std::vector<int>& truth,
                                                  const std::vector<int>& train_classes) {
  if (predicted.size() != truth.size()) throw InvalidArgument("classification: prediction and label counts differ");
  if (truth.empty()) throw InvalidArgument("classification: no test documents");
  ClassificationResult r;
  std::size_t correct = 0;
  for (std::size_t i = 0; i < truth.size(); ++i) correct += predicted[i] == truth[i];
  r.accuracy = static_cast<double>(correct) / static_cast<double>(truth.size());

  const std::set<int> known(train_classes.begin(), train_classes.end());
  std::set<int> unseen;
  for (int t : truth)
    if (!known.count(t)) unseen.insert(t);
  for (int c : unseen)
    r.warnings.push_back("test class " + std::to_string(c) + " is absent from training labels; excluded from macro_f1");

  double f1_sum = 0.0;
  for (int c : train_classes) {
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
      const bool p = predicted[i] == c;
      const bool t = truth[i] == c;
      tp += p && t;
      fp += p && !t;
      fn += !p && t;
    }
    const double denom = static_cast<double>(2 * tp + fp + fn);
    f1_sum += denom > 0.0 ? 2.0 * static_cast<double>(tp) / denom : 0.0;
  }
  r.macro_f1 = f1_sum / static_cast<double>(train_classes.size());
  return r;
}

inline ClassificationResult classification_eval(const Matrix& theta_train, const std::vector<int>& labels_train,
                                                const Matrix& theta_test, const std::vector<int>& labels_test,
                                                SoftmaxClassifier::Options opt = {}) {
  if (theta_train.cols() != theta_test.cols()) throw InvalidArgument("classification: feature dimensions differ");
  SoftmaxClassifier clf;
  clf.fit(theta_train, labels_train, opt);
  return classification_scores(clf.predict(theta_test), labels_test, clf.classes());
}

}  // namespace topicforge

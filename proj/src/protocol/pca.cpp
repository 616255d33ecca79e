#include <cmath>
#include <stdexcept>

#include <Eigen/Dense>

#include "padkit/protocol.hpp"

namespace padkit::protocol {

PcaResult pca_separability(const std::vector<std::vector<double>>& features, const std::vector<Label>& labels) {
  const std::size_t n = features.size();
  if (labels.size() != n) throw std::invalid_argument("pca: one label per sample");
  std::size_t nb = 0;
  for (Label l : labels) nb += l == Label::Bonafide;
  if (nb < 2 || n - nb < 2) throw std::invalid_argument("pca: need two samples per class");
  const std::size_t d = features[0].size();
  if (d == 0) throw std::invalid_argument("pca: empty feature vectors");

  Eigen::MatrixXd x(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    if (features[i].size() != d) throw std::invalid_argument("pca: ragged feature rows");
    for (std::size_t j = 0; j < d; ++j) x(i, j) = features[i][j];
  }
  x.rowwise() -= x.colwise().mean();

  // Scores on the leading components. With more features than samples the
  // n x n Gram matrix has the same nonzero spectrum and is far smaller.
  Eigen::MatrixXd scores(n, 2);
  Eigen::Vector2d lambda;
  const double denom = static_cast<double>(n - 1);
  if (d <= n) {
    const Eigen::MatrixXd cov = (x.transpose() * x) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
    const auto& vals = es.eigenvalues();
    for (int k = 0; k < 2; ++k) {
      const Eigen::Index col = static_cast<Eigen::Index>(d) - 1 - k;
      if (col < 0) {
        scores.col(k).setZero();
        lambda(k) = 0.0;
        continue;
      }
      Eigen::VectorXd v = es.eigenvectors().col(col);
      Eigen::Index arg;
      v.cwiseAbs().maxCoeff(&arg);
      if (v(arg) < 0) v = -v;
      scores.col(k) = x * v;
      lambda(k) = vals(col);
    }
  } else {
    const Eigen::MatrixXd gram = (x * x.transpose()) / denom;
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(gram);
    const auto& vals = es.eigenvalues();
    for (int k = 0; k < 2; ++k) {
      const Eigen::Index col = static_cast<Eigen::Index>(n) - 1 - k;
      Eigen::VectorXd u = es.eigenvectors().col(col);
      const double l = std::max(vals(col), 0.0);
      // loading direction is x^T u, fix its sign by the largest loading
      Eigen::VectorXd load = x.transpose() * u;
      Eigen::Index arg;
      load.cwiseAbs().maxCoeff(&arg);
      if (load(arg) < 0) u = -u;
      scores.col(k) = u * std::sqrt(l * denom);
      lambda(k) = l;
    }
  }
  const double floor = 1e-12 * std::max(lambda(0), 0.0);
  for (int k = 0; k < 2; ++k) {
    if (!(lambda(k) > floor)) {
      lambda(k) = 0.0;
      scores.col(k).setZero();
    }
  }

  PcaResult r;
  r.projection.resize(n);
  for (std::size_t i = 0; i < n; ++i) r.projection[i] = {scores(i, 0), scores(i, 1)};
  r.component_variance = {lambda(0), lambda(1)};

  Eigen::Vector2d mb = Eigen::Vector2d::Zero(), ma = Eigen::Vector2d::Zero();
  for (std::size_t i = 0; i < n; ++i) (labels[i] == Label::Bonafide ? mb : ma) += scores.row(i).transpose();
  const double na = static_cast<double>(n - nb);
  mb /= static_cast<double>(nb);
  ma /= na;
  double sb = 0.0, sa = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const bool bona = labels[i] == Label::Bonafide;
    (bona ? sb : sa) += (scores.row(i).transpose() - (bona ? mb : ma)).squaredNorm();
  }
  sb /= static_cast<double>(nb - 1);
  sa /= na - 1;
  const double pooled = std::sqrt((sa + sb) / 2.0);
  const double gap = (mb - ma).norm();
  if (pooled > 0.0) {
    r.separability = gap / pooled;
  } else {
    r.separability = gap > 0.0 ? INFINITY : 0.0;
  }
  return r;
}

}  // namespace padkit::protocol

#include "figcap/kmeans.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>

namespace figcap {

namespace {

KMeansResult lloyd(const Eigen::MatrixXd& points, Eigen::MatrixXd centers, int max_iters) {
  const Eigen::Index n = points.rows();
  const Eigen::Index k = centers.rows();
  KMeansResult r;
  r.labels.assign(static_cast<std::size_t>(n), -1);
  Eigen::VectorXd dist(n);
  for (int iter = 0; iter < max_iters; ++iter) {
    bool changed = false;
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      const double d = (centers.rowwise() - points.row(i)).rowwise().squaredNorm().minCoeff(&best);
      dist(i) = d;
      if (r.labels[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
        r.labels[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, points.cols());
    Eigen::VectorXi counts = Eigen::VectorXi::Zero(k);
    for (Eigen::Index i = 0; i < n; ++i) {
      sums.row(r.labels[static_cast<std::size_t>(i)]) += points.row(i);
      ++counts(r.labels[static_cast<std::size_t>(i)]);
    }
    for (Eigen::Index c = 0; c < k; ++c) {
      if (counts(c) > 0) {
        centers.row(c) = sums.row(c) / counts(c);
      } else {
        Eigen::Index far = 0;
        dist.maxCoeff(&far);
        centers.row(c) = points.row(far);
        dist(far) = 0;
        changed = true;
      }
    }
    if (!changed) break;
  }
  r.inertia = 0;
  for (Eigen::Index i = 0; i < n; ++i)
    r.inertia += (points.row(i) - centers.row(r.labels[static_cast<std::size_t>(i)])).squaredNorm();
  r.centers = std::move(centers);
  return r;
}

}  // namespace

KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts, std::uint64_t seed,
                    int max_iters) {
  const auto n = static_cast<int>(points.rows());
  if (k <= 0 || k > n) throw std::invalid_argument("kmeans: k must be in [1, rows]");
  std::mt19937_64 rng(seed);
  KMeansResult best;
  best.inertia = std::numeric_limits<double>::infinity();
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int r = 0; r < std::max(1, restarts); ++r) {
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    Eigen::MatrixXd centers(k, points.cols());
    for (int c = 0; c < k; ++c) centers.row(c) = points.row(idx[static_cast<std::size_t>(c)]);
    KMeansResult cand = lloyd(points, std::move(centers), max_iters);
    if (cand.inertia < best.inertia) best = std::move(cand);
  }
  return best;
}

}  // namespace figcap

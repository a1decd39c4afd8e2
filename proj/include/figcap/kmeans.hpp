#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <vector>

namespace figcap {

struct KMeansResult {
  std::vector<int> labels;   ///< cluster index per row
  Eigen::MatrixXd centers;   ///< k x dim
  double inertia = 0;        ///< sum of squared distances to assigned centers
};

/// Lloyd's algorithm over the rows of `points`, best of `restarts` random
/// initialisations drawn from a generator seeded with `seed`. Empty clusters
/// are re-seeded with the point farthest from its center. Deterministic for
/// fixed inputs.
KMeansResult kmeans(const Eigen::MatrixXd& points, int k, int restarts = 10,
                    std::uint64_t seed = 0x5eed, int max_iters = 100);

}  // namespace figcap

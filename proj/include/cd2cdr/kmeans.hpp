#pragma once

#include <cstdint>
#include <vector>

#include "cd2cdr/mat.hpp"

namespace cd2cdr {

struct KMeansResult {
  Mat centroids;                 // J x d
  std::vector<int> assignments;  // per point
  double objective = 0.0;        // sum of squared distances to assigned centroid
  // Objective after every assignment step, in order. Non-increasing.
  std::vector<double> objective_history;
  int iterations = 0;
  bool converged = false;
};

inline constexpr int kDefaultKMeansIters = 100;

/// Lloyd's algorithm with k-means++ seeding. Stops when assignments stop changing or
/// after max_iters assignment steps. An empty cluster is re-seeded at the point that is
/// farthest from its own centroid (lowest index on ties).
KMeansResult kmeans(const Mat& points, int clusters, int max_iters, std::uint64_t seed);

double kmeans_objective(const Mat& points, const Mat& centroids, const std::vector<int>& assign);

}  // namespace cd2cdr

#include "cd2cdr/kmeans.hpp"

#include <limits>
#include <stdexcept>
#include <string>

#include "cd2cdr/random.hpp"

namespace cd2cdr {
namespace {

double sq_dist(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

Mat seed_plus_plus(const Mat& points, int clusters, Rng& rng) {
  const std::size_t n = points.rows();
  Mat centroids(static_cast<std::size_t>(clusters), points.cols());
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::size_t first = pick(rng);
  std::copy(points.row(first).begin(), points.row(first).end(), centroids.row(0).begin());

  std::vector<double> nearest(n, std::numeric_limits<double>::infinity());
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int c = 1; c < clusters; ++c) {
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      nearest[i] = std::min(nearest[i], sq_dist(points.row(i), centroids.row(c - 1)));
      total += nearest[i];
    }
    std::size_t chosen = n - 1;
    if (total > 0.0) {
      double target = unit(rng) * total;
      for (std::size_t i = 0; i < n; ++i) {
        target -= nearest[i];
        if (target < 0.0) {
          chosen = i;
          break;
        }
      }
    } else {
      chosen = pick(rng);  // all points coincide with existing centroids
    }
    std::copy(points.row(chosen).begin(), points.row(chosen).end(), centroids.row(c).begin());
  }
  return centroids;
}

// Returns true if any assignment changed.
bool assign(const Mat& points, const Mat& centroids, std::vector<int>& assignments,
            std::vector<double>& dist) {
  bool changed = false;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    int best = 0;
    double best_d = std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < centroids.rows(); ++c) {
      const double d = sq_dist(points.row(i), centroids.row(c));
      if (d < best_d) {
        best_d = d;
        best = static_cast<int>(c);
      }
    }
    if (assignments[i] != best) changed = true;
    assignments[i] = best;
    dist[i] = best_d;
  }
  return changed;
}

}  // namespace

double kmeans_objective(const Mat& points, const Mat& centroids, const std::vector<int>& assign) {
  double obj = 0.0;
  for (std::size_t i = 0; i < points.rows(); ++i) {
    obj += sq_dist(points.row(i), centroids.row(static_cast<std::size_t>(assign[i])));
  }
  return obj;
}

KMeansResult kmeans(const Mat& points, int clusters, int max_iters, std::uint64_t seed) {
  if (clusters < 1) throw std::invalid_argument("kmeans: need at least one cluster");
  if (points.rows() < static_cast<std::size_t>(clusters)) {
    throw std::invalid_argument("kmeans: " + std::to_string(points.rows()) +
                                " points cannot form " + std::to_string(clusters) + " clusters");
  }
  if (max_iters < 1) throw std::invalid_argument("kmeans: max_iters must be positive");
  require_finite(points, "kmeans points");

  Rng rng(seed);
  KMeansResult result;
  result.centroids = seed_plus_plus(points, clusters, rng);
  const std::size_t n = points.rows();
  const std::size_t d = points.cols();
  result.assignments.assign(n, -1);
  std::vector<double> dist(n, 0.0);

  for (int iter = 0; iter < max_iters; ++iter) {
    const bool changed = assign(points, result.centroids, result.assignments, dist);
    double obj = 0.0;
    for (double v : dist) obj += v;
    result.objective_history.push_back(obj);
    result.objective = obj;
    result.iterations = iter + 1;
    if (!changed) {
      result.converged = true;
      break;
    }

    Mat sums(static_cast<std::size_t>(clusters), d);
    std::vector<std::size_t> counts(static_cast<std::size_t>(clusters), 0);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<std::size_t>(result.assignments[i]);
      ++counts[c];
      auto src = points.row(i);
      auto dst = sums.row(c);
      for (std::size_t k = 0; k < d; ++k) dst[k] += src[k];
    }
    for (std::size_t c = 0; c < counts.size(); ++c) {
      if (counts[c] == 0) {
        std::size_t far = 0;
        for (std::size_t i = 1; i < n; ++i) {
          if (dist[i] > dist[far]) far = i;
        }
        std::copy(points.row(far).begin(), points.row(far).end(), result.centroids.row(c).begin());
        dist[far] = 0.0;  // the same point is not reused for a second empty cluster
        continue;
      }
      auto dst = result.centroids.row(c);
      auto src = sums.row(c);
      for (std::size_t k = 0; k < d; ++k) dst[k] = src[k] / static_cast<double>(counts[c]);
    }
  }
  if (!result.converged) {
    // Hit max_iters after a centroid update: re-assign so assignments match centroids.
    result.converged = !assign(points, result.centroids, result.assignments, dist);
    double obj = 0.0;
    for (double v : dist) obj += v;
    result.objective_history.push_back(obj);
    result.objective = obj;
  }
  return result;
}

}  // namespace cd2cdr

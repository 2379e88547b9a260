#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "cd2cdr/split.hpp"

namespace cd2cdr {

/// 1-based rank of candidate `test` among `scores`: one plus the number of candidates
/// scoring strictly higher plus the number of equal scores whose item index is lower.
/// `items` gives each candidate's item index; pass an empty span to use positions.
int rank_test_item(std::span<const double> scores, std::size_t test, std::span<const int> items = {});

int hr_at_k(int rank, int k);
double ndcg_at_k(int rank, int k);

struct RankedResult {
  int user = 0;
  Domain domain = Domain::kA;
  int rank = 0;
  int candidates = 0;
};

struct DomainMetrics {
  double hr = 0.0;
  double ndcg = 0.0;
  int users = 0;
  int shortfall_users = 0;  // evaluated over fewer than eval_negatives + 1 candidates
  int excluded_users = 0;   // single-interaction or cold-start test items
};

struct MetricsReport {
  int k = 10;
  std::uint64_t seed = 0;
  std::string variant = "full";
  DomainMetrics a;
  DomainMetrics b;
  // Extra scalar diagnostics (final cycle loss, independence diagnostic, ...).
  std::map<std::string, double> diagnostics;

  const DomainMetrics& domain(Domain d) const { return d == Domain::kA ? a : b; }
  DomainMetrics& domain(Domain d) { return d == Domain::kA ? a : b; }
  std::string to_json() const;
  std::string to_table() const;
  // One row per (seed, domain, metric) after a header.
  std::string to_csv() const;
};

// Writes scores for `items` of `user` in `domain` into `out`.
using Scorer = std::function<void(Domain domain, int user, std::span<const int> items, std::span<double> out)>;

/// Leave-one-out ranking of each held-out item against its negatives. Candidates are
/// scored in ascending item order.
MetricsReport evaluate(const Scorer& scorer, const LeaveOneOutSplit& split, int k, std::uint64_t seed,
                       std::vector<RankedResult>* ranked = nullptr);

// Mean and sample standard deviation of one metric over repeated seeds.
struct MeanStd {
  double mean = 0.0;
  double stddev = 0.0;  // 0 for a single run
  int runs = 0;
};

struct SeedSummary {
  int k = 10;
  std::string variant;
  std::vector<std::uint64_t> seeds;
  MeanStd hr_a, ndcg_a, hr_b, ndcg_b;

  std::string to_table() const;
};

// Throws std::invalid_argument on an empty list or reports that disagree on K or variant.
SeedSummary summarize_seeds(const std::vector<MetricsReport>& reports);

}  // namespace cd2cdr

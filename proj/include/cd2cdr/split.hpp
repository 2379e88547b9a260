#pragma once

#include <cstdint>
#include <vector>

#include "cd2cdr/dataset.hpp"

namespace cd2cdr {

inline constexpr int kDefaultEvalNegatives = 999;
inline constexpr int kDefaultTrainNegatives = 7;

// Leave-one-out split of one domain.
struct DomainSplit {
  std::size_t num_items = 0;
  std::vector<std::vector<int>> train_items;      // per user, interaction order
  std::vector<int> test_item;                     // per user; -1 when not evaluated
  std::vector<std::vector<int>> eval_negatives;   // per user; empty when not evaluated
  std::vector<int> single_interaction_users;      // excluded: nothing left to train on
  std::vector<int> cold_start_users;              // excluded: test item unseen in training
  std::vector<int> shortfall_users;               // fewer negatives than requested

  std::size_t num_users() const { return train_items.size(); }
  std::size_t num_train_interactions() const;
  std::size_t num_test_users() const;
};

struct LeaveOneOutSplit {
  DomainSplit a;
  DomainSplit b;
  int eval_negatives = kDefaultEvalNegatives;

  const DomainSplit& domain(Domain d) const { return d == Domain::kA ? a : b; }
};

/// Holds out the latest interaction of every user with >= 2 interactions and draws
/// `eval_negatives` distinct non-interacted items per held-out user.
LeaveOneOutSplit leave_one_out_split(const DualDomainDataset& ds, int eval_negatives,
                                     std::uint64_t seed);
DomainSplit split_domain(const DomainDataset& ds, int eval_negatives, std::uint64_t seed);

// Flattened training examples of one domain: each positive followed by k negatives.
struct TrainingSamples {
  std::vector<int> users;
  std::vector<int> items;
  std::vector<double> labels;
  std::size_t positives = 0;
  std::size_t k = 0;
  std::size_t replacement_fallbacks = 0;  // positives whose pool was smaller than k
};

/// For every training positive draws k negatives uniformly from the user's non-training
/// items (distinct within one draw when the pool allows). Rejects k < 1.
TrainingSamples sample_train_negatives(const DomainSplit& split, int k, std::uint64_t seed);

}  // namespace cd2cdr

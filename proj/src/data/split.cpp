#include "cd2cdr/split.hpp"

#include <algorithm>
#include <stdexcept>
#include <unordered_set>

#include <spdlog/spdlog.h>

#include "cd2cdr/random.hpp"

namespace cd2cdr {

std::size_t DomainSplit::num_train_interactions() const {
  std::size_t n = 0;
  for (const auto& v : train_items) n += v.size();
  return n;
}

std::size_t DomainSplit::num_test_users() const {
  return static_cast<std::size_t>(std::count_if(test_item.begin(), test_item.end(), [](int t) { return t >= 0; }));
}

namespace {

// Distinct uniform draw of up to `want` items outside `taken` from [0, n).
std::vector<int> draw_distinct(std::size_t n, const std::unordered_set<int>& taken, std::size_t want,
                               Rng& rng) {
  const std::size_t pool = n - taken.size();
  std::vector<int> out;
  if (pool <= want || pool < 4 * want) {
    std::vector<int> complement;
    complement.reserve(pool);
    for (std::size_t i = 0; i < n; ++i) {
      if (!taken.count(static_cast<int>(i))) complement.push_back(static_cast<int>(i));
    }
    const std::size_t take = std::min(want, complement.size());
    for (std::size_t i = 0; i < take; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, complement.size() - 1);
      std::swap(complement[i], complement[pick(rng)]);
    }
    complement.resize(take);
    return complement;
  }
  std::unordered_set<int> chosen;
  std::uniform_int_distribution<int> pick(0, static_cast<int>(n) - 1);
  while (out.size() < want) {
    const int c = pick(rng);
    if (taken.count(c) || !chosen.insert(c).second) continue;
    out.push_back(c);
  }
  return out;
}

}  // namespace

DomainSplit split_domain(const DomainDataset& ds, int eval_negatives, std::uint64_t seed) {
  if (eval_negatives < 1) throw std::invalid_argument("eval_negatives must be >= 1");
  Rng rng(seed);
  DomainSplit split;
  split.num_items = ds.num_items();
  auto by_user = ds.items_by_user();
  const std::size_t m = by_user.size();
  split.train_items.resize(m);
  split.test_item.assign(m, -1);
  split.eval_negatives.resize(m);

  std::vector<int> train_count(ds.num_items(), 0);
  for (std::size_t u = 0; u < m; ++u) {
    auto& items = by_user[u];
    if (items.size() < 2) {
      split.train_items[u] = items;
      if (!items.empty()) split.single_interaction_users.push_back(static_cast<int>(u));
    } else {
      split.test_item[u] = items.back();
      split.train_items[u].assign(items.begin(), items.end() - 1);
    }
    for (int i : split.train_items[u]) ++train_count[static_cast<std::size_t>(i)];
  }

  for (std::size_t u = 0; u < m; ++u) {
    const int test = split.test_item[u];
    if (test < 0) continue;
    if (train_count[static_cast<std::size_t>(test)] == 0) {
      split.cold_start_users.push_back(static_cast<int>(u));
      split.test_item[u] = -1;
      continue;
    }
    std::unordered_set<int> taken(by_user[u].begin(), by_user[u].end());
    split.eval_negatives[u] =
        draw_distinct(ds.num_items(), taken, static_cast<std::size_t>(eval_negatives), rng);
    if (split.eval_negatives[u].size() < static_cast<std::size_t>(eval_negatives)) {
      split.shortfall_users.push_back(static_cast<int>(u));
    }
  }
  if (!split.single_interaction_users.empty()) {
    spdlog::info("split: {} users with a single interaction are not evaluated",
                 split.single_interaction_users.size());
  }
  if (!split.cold_start_users.empty()) {
    spdlog::info("split: {} users whose test item is unseen in training are not evaluated",
                 split.cold_start_users.size());
  }
  if (!split.shortfall_users.empty()) {
    spdlog::info("split: {} users have fewer than {} candidate negatives",
                 split.shortfall_users.size(), eval_negatives);
  }
  return split;
}

LeaveOneOutSplit leave_one_out_split(const DualDomainDataset& ds, int eval_negatives, std::uint64_t seed) {
  LeaveOneOutSplit split;
  split.eval_negatives = eval_negatives;
  split.a = split_domain(ds.a, eval_negatives, derive_seed(seed, "split.A"));
  split.b = split_domain(ds.b, eval_negatives, derive_seed(seed, "split.B"));
  return split;
}

TrainingSamples sample_train_negatives(const DomainSplit& split, int k, std::uint64_t seed) {
  if (k < 1) throw std::invalid_argument("sample_train_negatives: k must be >= 1");
  Rng rng(seed);
  TrainingSamples out;
  out.k = static_cast<std::size_t>(k);
  const std::size_t per = out.k + 1;
  out.users.reserve(split.num_train_interactions() * per);
  out.items.reserve(split.num_train_interactions() * per);
  out.labels.reserve(split.num_train_interactions() * per);
  std::uniform_int_distribution<int> pick(0, static_cast<int>(split.num_items) - 1);

  for (std::size_t u = 0; u < split.num_users(); ++u) {
    const auto& pos = split.train_items[u];
    if (pos.empty()) continue;
    std::unordered_set<int> taken(pos.begin(), pos.end());
    const std::size_t pool = split.num_items - taken.size();
    for (int p : pos) {
      out.users.push_back(static_cast<int>(u));
      out.items.push_back(p);
      out.labels.push_back(1.0);
      ++out.positives;
      std::vector<int> drawn;
      if (pool >= out.k) {
        drawn = draw_distinct(split.num_items, taken, out.k, rng);
      } else {
        ++out.replacement_fallbacks;
        std::vector<int> complement;
        for (std::size_t i = 0; i < split.num_items; ++i) {
          if (!taken.count(static_cast<int>(i))) complement.push_back(static_cast<int>(i));
        }
        if (complement.empty()) complement.push_back(pick(rng));  // user saw every item
        std::uniform_int_distribution<std::size_t> which(0, complement.size() - 1);
        for (std::size_t j = 0; j < out.k; ++j) drawn.push_back(complement[which(rng)]);
      }
      for (int n : drawn) {
        out.users.push_back(static_cast<int>(u));
        out.items.push_back(n);
        out.labels.push_back(0.0);
      }
    }
  }
  if (out.replacement_fallbacks > 0) {
    spdlog::warn("negative sampling: {} positives drew negatives with replacement (pool < {})",
                 out.replacement_fallbacks, k);
  }
  return out;
}

}  // namespace cd2cdr

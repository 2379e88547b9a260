#include "cd2cdr/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>
#include <json.hpp>

#include "cd2cdr/errors.hpp"

namespace cd2cdr {

int rank_test_item(std::span<const double> scores, std::size_t test, std::span<const int> items) {
  if (test >= scores.size()) throw std::out_of_range("rank_test_item: test index out of range");
  if (!items.empty() && items.size() != scores.size()) throw ShapeError("rank_test_item: items/scores length");
  for (double s : scores) {
    if (!std::isfinite(s)) throw NonFiniteError("rank_test_item: non-finite score");
  }
  auto id = [&](std::size_t i) { return items.empty() ? static_cast<long>(i) : static_cast<long>(items[i]); };
  const double ts = scores[test];
  int rank = 1;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i == test) continue;
    if (scores[i] > ts || (scores[i] == ts && id(i) < id(test))) ++rank;
  }
  return rank;
}

int hr_at_k(int rank, int k) {
  if (rank < 1 || k < 1) throw std::invalid_argument("hr_at_k: rank and k must be >= 1");
  return rank <= k ? 1 : 0;
}

double ndcg_at_k(int rank, int k) {
  if (rank < 1 || k < 1) throw std::invalid_argument("ndcg_at_k: rank and k must be >= 1");
  return rank <= k ? 1.0 / std::log2(static_cast<double>(rank) + 1.0) : 0.0;
}

MetricsReport evaluate(const Scorer& scorer, const LeaveOneOutSplit& split, int k, std::uint64_t seed,
                       std::vector<RankedResult>* ranked) {
  if (k < 1) throw std::invalid_argument("evaluate: k must be >= 1");
  MetricsReport report;
  report.k = k;
  report.seed = seed;
  for (Domain dom : kDomains) {
    const DomainSplit& s = split.domain(dom);
    DomainMetrics& m = report.domain(dom);
    m.excluded_users = static_cast<int>(s.single_interaction_users.size() + s.cold_start_users.size());
    double hr = 0.0, ndcg = 0.0;
    std::vector<int> items;
    std::vector<double> scores;
    for (std::size_t u = 0; u < s.num_users(); ++u) {
      const int test = s.test_item[u];
      if (test < 0) continue;
      items.assign(s.eval_negatives[u].begin(), s.eval_negatives[u].end());
      items.push_back(test);
      std::sort(items.begin(), items.end());
      const auto pos = static_cast<std::size_t>(std::lower_bound(items.begin(), items.end(), test) - items.begin());
      scores.assign(items.size(), 0.0);
      scorer(dom, static_cast<int>(u), items, scores);
      const int rank = rank_test_item(scores, pos, items);
      hr += hr_at_k(rank, k);
      ndcg += ndcg_at_k(rank, k);
      ++m.users;
      if (static_cast<int>(items.size()) < split.eval_negatives + 1) ++m.shortfall_users;
      if (ranked) ranked->push_back({static_cast<int>(u), dom, rank, static_cast<int>(items.size())});
    }
    if (m.users > 0) {
      m.hr = hr / m.users;
      m.ndcg = ndcg / m.users;
    }
  }
  return report;
}

std::string MetricsReport::to_json() const {
  nlohmann::ordered_json j;
  j["k"] = k;
  j["seed"] = seed;
  j["variant"] = variant;
  for (Domain d : kDomains) {
    const auto& m = domain(d);
    j["domains"][std::string(domain_name(d))] = {{"hr", m.hr},
                                                 {"ndcg", m.ndcg},
                                                 {"users", m.users},
                                                 {"shortfall_users", m.shortfall_users},
                                                 {"excluded_users", m.excluded_users}};
  }
  j["diagnostics"] = nlohmann::ordered_json::object();
  for (const auto& [name, value] : diagnostics) j["diagnostics"][name] = value;
  return j.dump(2) + "\n";
}

std::string MetricsReport::to_table() const {
  std::ostringstream os;
  os << fmt::format("variant {}  seed {}  K={}\n", variant, seed, k);
  os << fmt::format("{:<8}{:>10}{:>10}{:>8}{:>11}\n", "domain", "HR@" + std::to_string(k),
                    "NDCG@" + std::to_string(k), "users", "shortfall");
  for (Domain d : kDomains) {
    const auto& m = domain(d);
    os << fmt::format("{:<8}{:>10.4f}{:>10.4f}{:>8}{:>11}\n", domain_name(d), m.hr, m.ndcg, m.users,
                      m.shortfall_users);
  }
  for (const auto& [name, value] : diagnostics) os << fmt::format("{}: {:.6g}\n", name, value);
  return os.str();
}

std::string MetricsReport::to_csv() const {
  std::ostringstream os;
  os << "seed,variant,domain,metric,value\n";
  for (Domain d : kDomains) {
    const auto& m = domain(d);
    os << fmt::format("{},{},{},HR@{},{:.6f}\n", seed, variant, domain_name(d), k, m.hr);
    os << fmt::format("{},{},{},NDCG@{},{:.6f}\n", seed, variant, domain_name(d), k, m.ndcg);
  }
  return os.str();
}

namespace {

MeanStd mean_std(const std::vector<double>& v) {
  MeanStd r;
  r.runs = static_cast<int>(v.size());
  for (double x : v) r.mean += x / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - r.mean) * (x - r.mean);
    r.stddev = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return r;
}

}  // namespace

SeedSummary summarize_seeds(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("summarize_seeds: no reports");
  SeedSummary s;
  s.k = reports.front().k;
  s.variant = reports.front().variant;
  std::vector<double> hr_a, ndcg_a, hr_b, ndcg_b;
  for (const auto& r : reports) {
    if (r.k != s.k || r.variant != s.variant) {
      throw std::invalid_argument("summarize_seeds: reports disagree on K or variant");
    }
    s.seeds.push_back(r.seed);
    hr_a.push_back(r.a.hr);
    ndcg_a.push_back(r.a.ndcg);
    hr_b.push_back(r.b.hr);
    ndcg_b.push_back(r.b.ndcg);
  }
  s.hr_a = mean_std(hr_a);
  s.ndcg_a = mean_std(ndcg_a);
  s.hr_b = mean_std(hr_b);
  s.ndcg_b = mean_std(ndcg_b);
  return s;
}

std::string SeedSummary::to_table() const {
  std::ostringstream os;
  os << fmt::format("variant {}  K={}  runs {}\n", variant, k, seeds.size());
  os << fmt::format("{:<8}{:>20}{:>20}\n", "domain", fmt::format("HR@{}", k), fmt::format("NDCG@{}", k));
  auto cell = [](const MeanStd& m) { return fmt::format("{:.4f} +- {:.4f}", m.mean, m.stddev); };
  os << fmt::format("{:<8}{:>20}{:>20}\n", "A", cell(hr_a), cell(ndcg_a));
  os << fmt::format("{:<8}{:>20}{:>20}\n", "B", cell(hr_b), cell(ndcg_b));
  return os.str();
}

}  // namespace cd2cdr

#include "cd2cdr/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cd2cdr/errors.hpp"
#include "cd2cdr/mlp.hpp"

namespace cd2cdr {

bool PlantedConfounder::exposed(Domain d, int user, int item) const {
  if (!touches(d) || !user_exposed[static_cast<std::size_t>(user)]) return false;
  const auto& items = d == Domain::kA ? item_exposed_a : item_exposed_b;
  return items[static_cast<std::size_t>(item)] != 0;
}

Mat SyntheticGroundTruth::confounded_preferences(Domain d) const {
  Mat out = true_preference(d);
  for (const auto& c : confounders) {
    if (!c.touches(d)) continue;
    for (std::size_t u = 0; u < out.rows(); ++u) {
      if (!c.user_exposed[u]) continue;
      auto row = out.row(u);
      for (std::size_t k = 0; k < row.size(); ++k) row[k] += c.weight * c.vector[k];
    }
  }
  return out;
}

std::vector<const PlantedConfounder*> SyntheticGroundTruth::of_kind(ConfounderKind k) const {
  std::vector<const PlantedConfounder*> out;
  for (const auto& c : confounders) {
    if (c.kind == k) out.push_back(&c);
  }
  return out;
}

Mat orthonormal_rows(std::size_t count, std::size_t dim, Rng& rng) {
  if (count > dim) throw std::invalid_argument("orthonormal_rows: more vectors than dimensions");
  Mat v = gaussian_mat(count, dim, 1.0, rng);
  for (std::size_t i = 0; i < count; ++i) {
    auto row = v.row(i);
    for (std::size_t j = 0; j < i; ++j) {
      const double proj = dot(row, v.row(j));
      for (std::size_t k = 0; k < dim; ++k) row[k] -= proj * v(j, k);
    }
    const double norm = std::sqrt(dot(row, row));
    for (double& x : row) x /= norm;
  }
  return v;
}

namespace {

void clamp_row_norms(Mat& m, double lo, double hi) {
  for (std::size_t r = 0; r < m.rows(); ++r) {
    auto row = m.row(r);
    const double n = std::sqrt(dot(row, row));
    if (n <= 0.0) continue;
    const double target = std::clamp(n, lo, hi);
    for (double& x : row) x *= target / n;
  }
}

std::vector<std::uint8_t> top_aligned_items(const Mat& items, std::span<const double> direction, double rate) {
  const std::size_t n = items.rows();
  std::vector<std::pair<double, std::size_t>> score(n);
  for (std::size_t i = 0; i < n; ++i) score[i] = {dot(items.row(i), direction), i};
  std::sort(score.begin(), score.end(), [](const auto& x, const auto& y) {
    return x.first != y.first ? x.first > y.first : x.second < y.second;
  });
  const auto take = static_cast<std::size_t>(std::llround(rate * static_cast<double>(n)));
  std::vector<std::uint8_t> mask(n, 0);
  for (std::size_t i = 0; i < std::min(take, n); ++i) mask[score[i].second] = 1;
  return mask;
}

double mean_probability(const std::vector<double>& logits, double bias) {
  double s = 0.0;
  for (double l : logits) s += sigmoid(l + bias);
  return s / static_cast<double>(logits.size());
}

double calibrate_bias(const std::vector<double>& logits, double density, Domain d) {
  if (!(density > 0.0 && density < 1.0)) {
    throw DataError("synthetic: target density for domain " + std::string(domain_name(d)) +
                    " must lie strictly between 0 and 1");
  }
  double lo = -60.0, hi = 60.0;
  if (mean_probability(logits, lo) > density || mean_probability(logits, hi) < density) {
    throw DataError("synthetic: target density unreachable with a finite bias");
  }
  for (int it = 0; it < 50; ++it) {
    const double mid = 0.5 * (lo + hi);
    (mean_probability(logits, mid) < density ? lo : hi) = mid;
  }
  const double b = 0.5 * (lo + hi);
  if (!std::isfinite(b)) throw DataError("synthetic: calibrated bias is not finite");
  return b;
}

}  // namespace

double synthetic_logit(const SyntheticConfig& cfg, const SyntheticGroundTruth& gt, Domain d, int user, int item) {
  double l = cfg.preference_scale * dot(gt.true_preference(d).row(static_cast<std::size_t>(user)),
                                        gt.item_factors(d).row(static_cast<std::size_t>(item)));
  for (const auto& c : gt.confounders) {
    if (c.exposed(d, user, item)) l += c.weight;
  }
  return l;
}

SyntheticData generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed) {
  if (cfg.users < 2 || cfg.items_a < 2 || cfg.items_b < 2 || cfg.latent_dim < 1) {
    throw std::invalid_argument("synthetic: sizes must be positive");
  }
  if (cfg.sdc_a < 0 || cfg.sdc_b < 0 || cfg.cdc < 0 || cfg.sdc_a + cfg.sdc_b + cfg.cdc > cfg.latent_dim) {
    throw std::invalid_argument("synthetic: confounder count must not exceed latent_dim");
  }
  if (!std::isfinite(cfg.beta_sd) || !std::isfinite(cfg.beta_cd)) {
    throw std::invalid_argument("synthetic: effect weights must be finite");
  }
  Rng rng(seed);
  const auto m = static_cast<std::size_t>(cfg.users);
  const auto d = static_cast<std::size_t>(cfg.latent_dim);
  const double comp_sd = 1.0 / std::sqrt(static_cast<double>(d));

  SyntheticGroundTruth gt;
  gt.shared_preference = gaussian_mat(m, d, comp_sd, rng);
  gt.specific_a = gaussian_mat(m, d, comp_sd, rng);
  gt.specific_b = gaussian_mat(m, d, comp_sd, rng);
  const double ws = std::sqrt(cfg.shared_fraction), wp = std::sqrt(1.0 - cfg.shared_fraction);
  gt.true_preference_a = gt.shared_preference * ws + gt.specific_a * wp;
  gt.true_preference_b = gt.shared_preference * ws + gt.specific_b * wp;
  clamp_row_norms(gt.true_preference_a, 0.5, 2.0);
  clamp_row_norms(gt.true_preference_b, 0.5, 2.0);
  gt.item_factors_a = gaussian_mat(static_cast<std::size_t>(cfg.items_a), d, comp_sd, rng);
  gt.item_factors_b = gaussian_mat(static_cast<std::size_t>(cfg.items_b), d, comp_sd, rng);
  clamp_row_norms(gt.item_factors_a, 0.5, 2.0);
  clamp_row_norms(gt.item_factors_b, 0.5, 2.0);

  const int total = cfg.sdc_a + cfg.sdc_b + cfg.cdc;
  const Mat vectors = orthonormal_rows(static_cast<std::size_t>(total), d, rng);
  std::bernoulli_distribution user_flag(cfg.user_exposure_rate);
  for (int k = 0; k < total; ++k) {
    PlantedConfounder c;
    if (k < cfg.cdc) {
      c.kind = ConfounderKind::kCrossDomain;
      c.weight = cfg.beta_cd;
    } else {
      c.kind = ConfounderKind::kSingleDomain;
      c.domain = k < cfg.cdc + cfg.sdc_a ? Domain::kA : Domain::kB;
      c.weight = cfg.beta_sd;
    }
    c.vector = Mat::row_vector(vectors.row(static_cast<std::size_t>(k)));
    c.user_exposed.resize(m);
    for (auto& f : c.user_exposed) f = user_flag(rng) ? 1 : 0;
    c.item_exposed_a = c.touches(Domain::kA) ? top_aligned_items(gt.item_factors_a, c.vector.row(0), cfg.item_exposure_rate)
                                             : std::vector<std::uint8_t>(static_cast<std::size_t>(cfg.items_a), 0);
    c.item_exposed_b = c.touches(Domain::kB) ? top_aligned_items(gt.item_factors_b, c.vector.row(0), cfg.item_exposure_rate)
                                             : std::vector<std::uint8_t>(static_cast<std::size_t>(cfg.items_b), 0);
    gt.confounders.push_back(std::move(c));
  }
  gt.confounder_free = total == 0 || (cfg.beta_sd == 0.0 && cfg.beta_cd == 0.0);

  SyntheticData out;
  for (std::size_t u = 0; u < m; ++u) out.dataset.users.push_back("u" + std::to_string(u));

  for (Domain dom : kDomains) {
    const std::size_t n = dom == Domain::kA ? static_cast<std::size_t>(cfg.items_a) : static_cast<std::size_t>(cfg.items_b);
    std::vector<double> logits(m * n);
    for (std::size_t u = 0; u < m; ++u)
      for (std::size_t i = 0; i < n; ++i)
        logits[u * n + i] = synthetic_logit(cfg, gt, dom, static_cast<int>(u), static_cast<int>(i));
    const double density = dom == Domain::kA ? cfg.density_a : cfg.density_b;
    const double bias = calibrate_bias(logits, density, dom);
    (dom == Domain::kA ? gt.bias_a : gt.bias_b) = bias;

    DomainDataset& ds = out.dataset.domain(dom);
    ds.user_ids = out.dataset.users;
    const std::string prefix = dom == Domain::kA ? "a" : "b";
    for (std::size_t i = 0; i < n; ++i) ds.item_ids.push_back(prefix + std::to_string(i));

    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::size_t total_interactions = 0;
    for (std::size_t u = 0; u < m; ++u) {
      std::vector<int> chosen;
      for (std::size_t i = 0; i < n; ++i) {
        if (unit(rng) < sigmoid(logits[u * n + i] + bias)) chosen.push_back(static_cast<int>(i));
      }
      if (chosen.size() < static_cast<std::size_t>(cfg.min_user_interactions)) {
        // Top up with the most probable remaining items.
        std::vector<int> order(n);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int x, int y) { return logits[u * n + static_cast<std::size_t>(x)] > logits[u * n + static_cast<std::size_t>(y)]; });
        for (int i : order) {
          if (chosen.size() >= static_cast<std::size_t>(cfg.min_user_interactions)) break;
          if (std::find(chosen.begin(), chosen.end(), i) == chosen.end()) chosen.push_back(i);
        }
      }
      std::shuffle(chosen.begin(), chosen.end(), rng);
      for (std::size_t t = 0; t < chosen.size(); ++t) {
        ds.interactions.push_back({static_cast<int>(u), chosen[t], static_cast<std::int64_t>(t)});
      }
      total_interactions += chosen.size();
    }
    const double realized = static_cast<double>(total_interactions) / static_cast<double>(m * n);
    (dom == Domain::kA ? gt.realized_density_a : gt.realized_density_b) = realized;
  }
  out.dataset.validate();
  out.truth = std::move(gt);
  return out;
}

SpecificPairs generate_specific_pairs(const SpecificPairConfig& cfg, std::uint64_t seed) {
  if (cfg.users < 2 || cfg.dim < 1 || 2 * cfg.sdc_per_domain > cfg.dim) {
    throw std::invalid_argument("generate_specific_pairs: bad sizes");
  }
  Rng rng(seed);
  const auto m = static_cast<std::size_t>(cfg.users);
  const auto d = static_cast<std::size_t>(cfg.dim);
  SpecificPairs out;

  // Anisotropic, off-centre source distribution.
  std::uniform_real_distribution<double> scale(0.5, 1.5);
  Mat sd(1, d), mean(1, d);
  for (std::size_t k = 0; k < d; ++k) {
    sd[k] = scale(rng) / std::sqrt(static_cast<double>(d));
    mean[k] = 0.5 * (scale(rng) - 1.0) / std::sqrt(static_cast<double>(d));
  }
  std::normal_distribution<double> normal(0.0, 1.0);
  out.z_a = Mat(m, d);
  for (std::size_t u = 0; u < m; ++u)
    for (std::size_t k = 0; k < d; ++k) out.z_a(u, k) = mean[k] + sd[k] * normal(rng);

  const Mat q = orthonormal_rows(d, d, rng);
  std::uniform_real_distribution<double> eig(cfg.min_eigenvalue, cfg.max_eigenvalue);
  Mat lambda(1, d);
  for (auto& v : lambda.values()) v = eig(rng);
  out.transform = Mat(d, d);
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t j = 0; j < d; ++j)
      for (std::size_t k = 0; k < d; ++k) out.transform(i, j) += q(k, i) * lambda[k] * q(k, j);
  out.z_b = matmul(out.z_a, out.transform);

  const Mat vecs = orthonormal_rows(static_cast<std::size_t>(2 * cfg.sdc_per_domain), d, rng);
  out.sdc_vectors_a = Mat(static_cast<std::size_t>(cfg.sdc_per_domain), d);
  out.sdc_vectors_b = Mat(static_cast<std::size_t>(cfg.sdc_per_domain), d);
  std::bernoulli_distribution flag(cfg.user_exposure_rate);
  for (int k = 0; k < 2 * cfg.sdc_per_domain; ++k) {
    const bool is_a = k < cfg.sdc_per_domain;
    Mat& dst_vecs = is_a ? out.sdc_vectors_a : out.sdc_vectors_b;
    const auto row = static_cast<std::size_t>(is_a ? k : k - cfg.sdc_per_domain);
    std::copy(vecs.row(static_cast<std::size_t>(k)).begin(), vecs.row(static_cast<std::size_t>(k)).end(),
              dst_vecs.row(row).begin());
    Mat& target = is_a ? out.z_a : out.z_b;
    for (std::size_t u = 0; u < m; ++u) {
      if (!flag(rng)) continue;
      for (std::size_t c = 0; c < d; ++c) target(u, c) += cfg.beta_sd * dst_vecs(row, c);
    }
  }
  return out;
}

}  // namespace cd2cdr

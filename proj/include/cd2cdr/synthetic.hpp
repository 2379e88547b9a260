#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "cd2cdr/dataset.hpp"
#include "cd2cdr/random.hpp"

namespace cd2cdr {

// Generative model of a confounded dual-domain interaction log. Users carry a shared
// and two domain-specific latent preferences; planted confounders are unit vectors in
// the same latent space that attach to a subset of items (those best aligned with the
// vector) and to a subset of users. CDC user exposure is common to both domains, SDC
// exposure is local to one domain.
struct SyntheticConfig {
  int users = 1000;
  int items_a = 2000;
  int items_b = 2000;
  int latent_dim = 16;
  int sdc_a = 2;
  int sdc_b = 2;
  int cdc = 1;
  double beta_sd = 1.0;
  double beta_cd = 1.0;
  double density_a = 0.01;
  double density_b = 0.006;
  double user_exposure_rate = 0.3;
  double item_exposure_rate = 0.2;
  double preference_scale = 8.0;  // multiplies <true preference, item factor> in the logit
  double shared_fraction = 0.5;   // variance share of the cross-domain preference component
  int min_user_interactions = 2;
};

enum class ConfounderKind { kSingleDomain, kCrossDomain };

struct PlantedConfounder {
  ConfounderKind kind = ConfounderKind::kSingleDomain;
  Domain domain = Domain::kA;  // meaningful for single-domain confounders only
  Mat vector;                  // 1 x d, unit norm
  double weight = 0.0;         // beta_sd or beta_cd
  std::vector<std::uint8_t> user_exposed;
  std::vector<std::uint8_t> item_exposed_a;
  std::vector<std::uint8_t> item_exposed_b;

  bool touches(Domain d) const { return kind == ConfounderKind::kCrossDomain || domain == d; }
  // Exposure mask entry for (user, item) in domain d.
  bool exposed(Domain d, int user, int item) const;
};

struct SyntheticGroundTruth {
  std::vector<PlantedConfounder> confounders;
  Mat shared_preference;   // m x d
  Mat specific_a;          // m x d
  Mat specific_b;          // m x d
  Mat true_preference_a;   // fused, m x d, row norms in [0.5, 2]
  Mat true_preference_b;
  Mat item_factors_a;      // n_a x d
  Mat item_factors_b;      // n_b x d
  double bias_a = 0.0;
  double bias_b = 0.0;
  double realized_density_a = 0.0;
  double realized_density_b = 0.0;
  bool confounder_free = false;

  const Mat& true_preference(Domain d) const { return d == Domain::kA ? true_preference_a : true_preference_b; }
  const Mat& item_factors(Domain d) const { return d == Domain::kA ? item_factors_a : item_factors_b; }
  // True preference shifted by every confounder the user is exposed to in domain d.
  Mat confounded_preferences(Domain d) const;
  std::vector<const PlantedConfounder*> of_kind(ConfounderKind k) const;
};

struct SyntheticData {
  DualDomainDataset dataset;
  SyntheticGroundTruth truth;
};

// Pre-bias logit of (user, item) in domain d.
double synthetic_logit(const SyntheticConfig& cfg, const SyntheticGroundTruth& gt, Domain d, int user,
                       int item);

/// Throws std::invalid_argument on bad sizes and DataError when a target density cannot
/// be reached by any finite bias.
SyntheticData generate_synthetic(const SyntheticConfig& cfg, std::uint64_t seed);

// Mutually orthonormal rows (count <= dim).
Mat orthonormal_rows(std::size_t count, std::size_t dim, Rng& rng);

// Paired domain-specific preferences related by a symmetric positive-definite map:
// Z_b = Z_a M (+ planted single-domain offsets when beta > 0).
struct SpecificPairConfig {
  int users = 500;
  int dim = 8;
  int sdc_per_domain = 2;
  double beta_sd = 0.0;
  double user_exposure_rate = 0.3;
  double min_eigenvalue = 0.6;
  double max_eigenvalue = 1.6;
};

struct SpecificPairs {
  Mat z_a;
  Mat z_b;
  Mat transform;          // d x d, symmetric positive definite
  Mat sdc_vectors_a;      // rows are unit vectors
  Mat sdc_vectors_b;
};

SpecificPairs generate_specific_pairs(const SpecificPairConfig& cfg, std::uint64_t seed);

}  // namespace cd2cdr

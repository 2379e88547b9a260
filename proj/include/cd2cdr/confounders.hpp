#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "cd2cdr/adversarial.hpp"
#include "cd2cdr/dataset.hpp"
#include "cd2cdr/kmeans.hpp"

namespace cd2cdr {

// Ablation variants of the full model.
//   cross  - no single-domain confounders (C^X = C_cd)
//   single - no cross-domain confounders (C^X = C_sd^X)
//   coarse - mean candidate vector concatenated, no selection or backdoor mixture
//   cycle  - adversarial pair trained without the cycle term
enum class Variant { kFull, kCross, kSingle, kCoarse, kCycle };

std::string_view to_string(Variant v);
Variant variant_from_string(std::string_view s);

bool uses_single_domain(Variant v);
bool uses_cross_domain(Variant v);

struct HsrMaps {
  Mat a_to_b;  // d x d
  Mat b_to_a;
};

/// Half-sibling regression: W^{A->B} = (E^A^T E^A + alpha I)^-1 E^A^T E^B and the
/// mirror image. alpha must be > 0.
HsrMaps hsr_fit(const Mat& pref_a, const Mat& pref_b, double alpha);

struct CdcCandidates {
  Mat a_to_b;  // E^A W^{A->B}: the part of E^B predictable from E^A
  Mat b_to_a;
};

CdcCandidates cdc_candidates(const Mat& pref_a, const Mat& pref_b, const HsrMaps& maps);

struct CandidateConfounders {
  Mat sdc_a;  // empty when single-domain extraction is skipped
  Mat sdc_b;
  Mat cdc_a_to_b;  // empty when cross-domain extraction is skipped
  Mat cdc_b_to_a;
  HsrMaps maps;
};

struct SubspaceSizes {
  int sd_a = 10;
  int sd_b = 10;
  int cd = 10;
};

struct ConfounderSubspace {
  Mat sd_a;  // J_sd^A x d (0 rows when unused)
  Mat sd_b;
  Mat cd;
  Mat union_a;  // sd_a stacked over cd
  Mat union_b;
  // Unweighted mean of every candidate row feeding the domain; used by the coarse variant.
  Mat coarse_a;  // 1 x d
  Mat coarse_b;

  const Mat& centroids(Domain d) const { return d == Domain::kA ? union_a : union_b; }
  const Mat& coarse(Domain d) const { return d == Domain::kA ? coarse_a : coarse_b; }
};

/// K-means on each candidate set (the two cross-domain directions are clustered jointly
/// as one 2m-row stack) and assembly of the per-domain unions.
ConfounderSubspace build_subspaces(const CandidateConfounders& c, const SubspaceSizes& sizes, std::uint64_t seed);

// Empirical check of the independence assumption behind half-sibling regression: the
// mean absolute correlation between columns of `pref` and columns of `candidates`.
double mean_abs_cross_correlation(const Mat& pref, const Mat& candidates);

}  // namespace cd2cdr

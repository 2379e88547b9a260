#include "cd2cdr/confounders.hpp"

#include <cmath>
#include <stdexcept>

#include "cd2cdr/errors.hpp"
#include "cd2cdr/random.hpp"
#include "cd2cdr/ridge.hpp"

namespace cd2cdr {

std::string_view to_string(Variant v) {
  switch (v) {
    case Variant::kFull: return "full";
    case Variant::kCross: return "cross";
    case Variant::kSingle: return "single";
    case Variant::kCoarse: return "coarse";
    case Variant::kCycle: return "cycle";
  }
  return "full";
}

Variant variant_from_string(std::string_view s) {
  for (Variant v : {Variant::kFull, Variant::kCross, Variant::kSingle, Variant::kCoarse, Variant::kCycle}) {
    if (to_string(v) == s) return v;
  }
  throw std::invalid_argument("unknown variant '" + std::string(s) + "' (full|cross|single|coarse|cycle)");
}

bool uses_single_domain(Variant v) { return v != Variant::kCross; }
bool uses_cross_domain(Variant v) { return v != Variant::kSingle; }

HsrMaps hsr_fit(const Mat& pref_a, const Mat& pref_b, double alpha) {
  if (!(alpha > 0.0)) throw std::invalid_argument("hsr_fit: alpha must be > 0");
  require_same_shape(pref_a, pref_b, "hsr_fit");
  return {ridge_solve(pref_a, pref_b, alpha), ridge_solve(pref_b, pref_a, alpha)};
}

CdcCandidates cdc_candidates(const Mat& pref_a, const Mat& pref_b, const HsrMaps& maps) {
  require_same_shape(pref_a, pref_b, "cdc_candidates");
  return {matmul(pref_a, maps.a_to_b), matmul(pref_b, maps.b_to_a)};
}

namespace {

Mat cluster(const Mat& rows, int j, std::uint64_t seed, const char* what) {
  if (rows.empty() || j == 0) return Mat(0, rows.cols());
  if (j < 0) throw std::invalid_argument(std::string("build_subspaces: negative J for ") + what);
  return kmeans(rows, j, kDefaultKMeansIters, seed).centroids;
}

Mat mean_of(std::initializer_list<const Mat*> blocks, std::size_t d) {
  Mat acc(1, d);
  std::size_t n = 0;
  for (const Mat* b : blocks) {
    if (b->empty()) continue;
    acc += column_sum(*b);
    n += b->rows();
  }
  if (n > 0) acc *= 1.0 / static_cast<double>(n);
  return acc;
}

}  // namespace

ConfounderSubspace build_subspaces(const CandidateConfounders& c, const SubspaceSizes& sizes, std::uint64_t seed) {
  std::size_t d = 0;
  for (const Mat* m : {&c.sdc_a, &c.sdc_b, &c.cdc_a_to_b, &c.cdc_b_to_a}) d = std::max(d, m->cols());
  if (d == 0) throw std::invalid_argument("build_subspaces: no candidate confounders");
  ConfounderSubspace s;
  s.sd_a = cluster(c.sdc_a, sizes.sd_a, derive_seed(seed, "kmeans.sd.A"), "C_sd^A");
  s.sd_b = cluster(c.sdc_b, sizes.sd_b, derive_seed(seed, "kmeans.sd.B"), "C_sd^B");
  if (!c.cdc_a_to_b.empty() || !c.cdc_b_to_a.empty()) {
    const Mat stacked = vstack({&c.cdc_a_to_b, &c.cdc_b_to_a});
    s.cd = cluster(stacked, sizes.cd, derive_seed(seed, "kmeans.cd"), "C_cd");
  } else {
    s.cd = Mat(0, d);
  }
  if (s.sd_a.empty()) s.sd_a = Mat(0, d);
  if (s.sd_b.empty()) s.sd_b = Mat(0, d);
  s.union_a = vstack({&s.sd_a, &s.cd});
  s.union_b = vstack({&s.sd_b, &s.cd});
  s.coarse_a = mean_of({&c.sdc_a, &c.cdc_a_to_b, &c.cdc_b_to_a}, d);
  s.coarse_b = mean_of({&c.sdc_b, &c.cdc_a_to_b, &c.cdc_b_to_a}, d);
  return s;
}

double mean_abs_cross_correlation(const Mat& pref, const Mat& candidates) {
  if (pref.rows() != candidates.rows()) throw ShapeError("mean_abs_cross_correlation: row mismatch");
  if (pref.rows() < 2 || pref.cols() == 0 || candidates.cols() == 0) return 0.0;
  auto standardize = [](const Mat& x) {
    Mat z = x;
    const Mat mu = column_mean(x);
    for (std::size_t c = 0; c < x.cols(); ++c) {
      double ss = 0.0;
      for (std::size_t r = 0; r < x.rows(); ++r) {
        z(r, c) -= mu[c];
        ss += z(r, c) * z(r, c);
      }
      const double sd = std::sqrt(ss);
      for (std::size_t r = 0; r < x.rows(); ++r) z(r, c) = sd > 0.0 ? z(r, c) / sd : 0.0;
    }
    return z;
  };
  const Mat corr = matmul_tn(standardize(pref), standardize(candidates));
  double s = 0.0;
  for (double v : corr.values()) s += std::abs(v);
  return s / static_cast<double>(corr.size());
}

}  // namespace cd2cdr

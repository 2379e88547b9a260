#pragma once

#include "cd2cdr/mat.hpp"

namespace cd2cdr {

/// Solves (X^T X + alpha I) W = X^T Y for W (d x d') by Cholesky factorisation of the
/// normal matrix. Throws SingularDesignError when the normal matrix is not positive
/// definite (only possible for alpha = 0) and ShapeError when X and Y disagree on rows.
Mat ridge_solve(const Mat& x, const Mat& y, double alpha);

/// ||(X^T X + alpha I) W - X^T Y||_F / max(1, ||X^T Y||_F)
double ridge_residual(const Mat& x, const Mat& y, double alpha, const Mat& w);

// Lower-triangular L with A = L L^T. Throws SingularDesignError on a non-positive pivot.
Mat cholesky(const Mat& spd);
// Solves L L^T X = B given the Cholesky factor.
Mat cholesky_solve(const Mat& lower, const Mat& rhs);

}  // namespace cd2cdr

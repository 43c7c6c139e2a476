#pragma once
// L1-regularized linear probe fitted by cyclic coordinate descent. Stage one
// of feature refinement: coefficients measure predictive relevance.

#include <vector>

#include "rankroute/matrix.hpp"

namespace rr {

struct LassoFit {
    std::vector<double> coefficients;
    double intercept = 0.0;                    // unpenalized, = mean(y) on centered X
    std::vector<double> objective_per_sweep;   // must be non-increasing
    int sweeps = 0;
    bool converged = false;

    std::vector<std::size_t> support(double eps = 1e-12) const;
};

// Minimizes (1/2N) ||y - b0 - X beta||^2 + alpha * ||beta||_1. X is expected
// standardized (zero mean columns); the update uses actual column norms, so
// non-unit scales still converge to the exact solution. alpha must be > 0:
// unpenalized fits are a different tool and are rejected loudly.
LassoFit fit_l1_probe(const DataMatrix& x, const std::vector<double>& y, double alpha,
                      int max_sweeps = 10000, double tol = 1e-8);

// Largest alpha with a non-trivial solution: max_j |x_j . (y - mean y)| / N.
double lasso_alpha_max(const DataMatrix& x, const std::vector<double>& y);

// 5-fold cross-validation over a log-spaced grid from alpha_max down three
// decades. Ties prefer the larger (sparser) alpha. Folds stride by row index
// so the choice is deterministic.
double select_alpha_cv(const DataMatrix& x, const std::vector<double>& y, int n_alphas = 10,
                       int n_folds = 5);

}  // namespace rr

#include "rankroute/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace rr {

namespace {

double soft_threshold(double z, double alpha) {
    if (z > alpha) return z - alpha;
    if (z < -alpha) return z + alpha;
    return 0.0;
}

double mean_of(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double objective(const std::vector<double>& residual, const std::vector<double>& beta, double alpha) {
    double rss = 0.0;
    for (const double r : residual) rss += r * r;
    double l1 = 0.0;
    for (const double b : beta) l1 += std::abs(b);
    return rss / (2.0 * static_cast<double>(residual.size())) + alpha * l1;
}

}  // namespace

std::vector<std::size_t> LassoFit::support(double eps) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < coefficients.size(); ++j)
        if (std::abs(coefficients[j]) > eps) out.push_back(j);
    return out;
}

LassoFit fit_l1_probe(const DataMatrix& x, const std::vector<double>& y, double alpha, int max_sweeps,
                      double tol) {
    if (alpha <= 0.0)
        throw std::invalid_argument("fit_l1_probe: alpha must be > 0 (use plain least squares instead)");
    if (x.rows != y.size()) throw std::invalid_argument("fit_l1_probe: X/y size mismatch");
    if (x.rows < 2) throw std::invalid_argument("fit_l1_probe: need at least 2 rows");

    const std::size_t n = x.rows;
    const std::size_t f = x.cols;
    const double inv_n = 1.0 / static_cast<double>(n);

    LassoFit fit;
    fit.intercept = mean_of(y);
    fit.coefficients.assign(f, 0.0);

    // column squared norms / N; constant (all-zero after centering) columns
    // are frozen at zero
    std::vector<double> col_scale(f, 0.0);
    for (std::size_t j = 0; j < f; ++j) {
        double s = 0.0;
        for (std::size_t r = 0; r < n; ++r) s += x.at(r, j) * x.at(r, j);
        col_scale[j] = s * inv_n;
    }

    std::vector<double> residual(n);
    for (std::size_t r = 0; r < n; ++r) residual[r] = y[r] - fit.intercept;

    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double max_change = 0.0;
        for (std::size_t j = 0; j < f; ++j) {
            if (col_scale[j] < 1e-12) continue;
            const double old = fit.coefficients[j];
            double corr = 0.0;  // x_j . (residual + x_j * old) / N
            for (std::size_t r = 0; r < n; ++r) corr += x.at(r, j) * residual[r];
            corr = corr * inv_n + col_scale[j] * old;

            const double updated = soft_threshold(corr, alpha) / col_scale[j];
            if (updated != old) {
                const double delta = updated - old;
                for (std::size_t r = 0; r < n; ++r) residual[r] -= delta * x.at(r, j);
                fit.coefficients[j] = updated;
            }
            max_change = std::max(max_change, std::abs(updated - old));
        }
        fit.objective_per_sweep.push_back(objective(residual, fit.coefficients, alpha));
        fit.sweeps = sweep + 1;
        if (max_change < tol) {
            fit.converged = true;
            break;
        }
    }
    return fit;
}

double lasso_alpha_max(const DataMatrix& x, const std::vector<double>& y) {
    if (x.rows != y.size() || x.rows == 0) throw std::invalid_argument("lasso_alpha_max: bad shapes");
    const double y_mean = mean_of(y);
    double best = 0.0;
    for (std::size_t j = 0; j < x.cols; ++j) {
        double corr = 0.0;
        for (std::size_t r = 0; r < x.rows; ++r) corr += x.at(r, j) * (y[r] - y_mean);
        best = std::max(best, std::abs(corr) / static_cast<double>(x.rows));
    }
    return best;
}

double select_alpha_cv(const DataMatrix& x, const std::vector<double>& y, int n_alphas, int n_folds) {
    if (n_alphas < 1 || n_folds < 2) throw std::invalid_argument("select_alpha_cv: bad grid");
    const double a_max = lasso_alpha_max(x, y);
    if (a_max <= 0.0) return 1e-8;  // no signal anywhere; any alpha kills all features

    std::vector<double> alphas;
    for (int i = 0; i < n_alphas; ++i) {
        const double t = n_alphas == 1 ? 0.0 : static_cast<double>(i) / (n_alphas - 1);
        alphas.push_back(a_max * std::pow(10.0, -3.0 * t));
    }

    const std::size_t n = x.rows;
    double best_alpha = alphas.front();
    double best_mse = std::numeric_limits<double>::infinity();
    for (const double alpha : alphas) {
        double total_se = 0.0;
        std::size_t total_count = 0;
        for (int fold = 0; fold < n_folds; ++fold) {
            std::vector<std::size_t> train_idx, val_idx;
            for (std::size_t r = 0; r < n; ++r)
                (static_cast<int>(r % static_cast<std::size_t>(n_folds)) == fold ? val_idx : train_idx)
                    .push_back(r);
            if (train_idx.size() < 2 || val_idx.empty()) continue;

            const DataMatrix x_train = x.select_rows(train_idx);
            std::vector<double> y_train;
            for (const std::size_t r : train_idx) y_train.push_back(y[r]);
            const LassoFit fit = fit_l1_probe(x_train, y_train, alpha);

            for (const std::size_t r : val_idx) {
                double pred = fit.intercept;
                for (std::size_t j = 0; j < x.cols; ++j) pred += fit.coefficients[j] * x.at(r, j);
                const double err = y[r] - pred;
                total_se += err * err;
                ++total_count;
            }
        }
        if (total_count == 0) continue;
        const double mse = total_se / static_cast<double>(total_count);
        // strictly better wins; equal quality keeps the earlier (larger) alpha
        if (mse < best_mse - 1e-15) {
            best_mse = mse;
            best_alpha = alpha;
        }
    }
    return best_alpha;
}

}  // namespace rr

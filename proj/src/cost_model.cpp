#include "rankroute/cost_model.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rr {

CostModel CostModel::fit(const std::vector<CostObservation>& observations) {
    const std::size_t n = observations.size();
    if (n < 2) throw std::invalid_argument("CostModel::fit: need at least 2 observations");

    auto minmax_of = [&](auto getter) {
        double lo = getter(observations.front()), hi = lo;
        for (const auto& o : observations) {
            lo = std::min(lo, getter(o));
            hi = std::max(hi, getter(o));
        }
        return std::pair{lo, hi};
    };
    const auto [p_lo, p_hi] = minmax_of([](const CostObservation& o) { return o.prompt_tokens; });
    const auto [c_lo, c_hi] = minmax_of([](const CostObservation& o) { return o.n_candidates; });
    const bool use_prompt = p_hi > p_lo;
    const bool use_cands = c_hi > c_lo;

    CostModel model;
    model.fitted_ = true;

    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) y[static_cast<Eigen::Index>(i)] = observations[i].delta_tokens;

    const int cols = 1 + (use_prompt ? 1 : 0) + (use_cands ? 1 : 0);
    bool solved = false;
    if (cols > 1) {
        Eigen::MatrixXd design(static_cast<Eigen::Index>(n), cols);
        for (std::size_t i = 0; i < n; ++i) {
            const auto r = static_cast<Eigen::Index>(i);
            int col = 0;
            design(r, col++) = 1.0;
            if (use_prompt) design(r, col++) = observations[i].prompt_tokens;
            if (use_cands) design(r, col++) = observations[i].n_candidates;
        }
        Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(design);
        if (qr.rank() == cols) {
            const Eigen::VectorXd beta = qr.solve(y);
            int col = 0;
            model.intercept_ = beta[col++];
            if (use_prompt) model.coef_prompt_ = beta[col++];
            if (use_cands) model.coef_cands_ = beta[col++];
            solved = true;
        }
    }
    if (!solved) {
        model.intercept_only_ = true;
        model.intercept_ = y.mean();
        model.coef_prompt_ = 0.0;
        model.coef_cands_ = 0.0;
    }

    double sse = 0.0;
    for (const auto& o : observations) {
        const double r = o.delta_tokens - model.predict(o.prompt_tokens, o.n_candidates);
        sse += r * r;
    }
    model.residual_scale_ = std::sqrt(sse / static_cast<double>(n));
    return model;
}

double CostModel::predict(double prompt_tokens, double n_candidates) const {
    return intercept_ + coef_prompt_ * prompt_tokens + coef_cands_ * n_candidates;
}

double CostModel::estimate_extra_tokens(double prompt_tokens, double n_candidates) const {
    if (!fitted_) throw std::logic_error("CostModel: estimate requested before fitting");
    return std::max(1.0, predict(prompt_tokens, n_candidates));
}

CostModel CostModel::from_coefficients(double intercept, double coef_prompt, double coef_cands,
                                       double residual_scale, bool intercept_only) {
    CostModel m;
    m.fitted_ = true;
    m.intercept_only_ = intercept_only;
    m.intercept_ = intercept;
    m.coef_prompt_ = coef_prompt;
    m.coef_cands_ = coef_cands;
    m.residual_scale_ = residual_scale;
    return m;
}

}  // namespace rr

#pragma once
// Linear model predicting the extra tokens Think spends over Non-Think.
// The true delta is only known after generation; routing needs it before,
// so decision-time features carry this estimate instead.

#include <vector>

namespace rr {

struct CostObservation {
    double prompt_tokens = 0.0;
    double n_candidates = 0.0;
    double delta_tokens = 0.0;  // observed T_think - T_non
};

class CostModel {
public:
    // Least-squares fit of delta_tokens on (1, prompt_tokens, n_candidates).
    // Constant regressors are excluded; a rank-deficient remainder falls back
    // to intercept-only (mean delta).
    static CostModel fit(const std::vector<CostObservation>& observations);

    // Raw linear prediction (unclamped).
    double predict(double prompt_tokens, double n_candidates) const;

    // Predicted extra tokens, clamped to >= 1 so the routing denominator
    // stays positive. Throws if the model was never fitted.
    double estimate_extra_tokens(double prompt_tokens, double n_candidates) const;

    bool fitted() const { return fitted_; }
    bool intercept_only() const { return intercept_only_; }
    double intercept() const { return intercept_; }
    double coef_prompt_tokens() const { return coef_prompt_; }
    double coef_n_candidates() const { return coef_cands_; }
    double residual_scale() const { return residual_scale_; }

    // for serialization
    static CostModel from_coefficients(double intercept, double coef_prompt, double coef_cands,
                                       double residual_scale, bool intercept_only);

private:
    bool fitted_ = false;
    bool intercept_only_ = false;
    double intercept_ = 0.0;
    double coef_prompt_ = 0.0;
    double coef_cands_ = 0.0;
    double residual_scale_ = 0.0;
};

}  // namespace rr

#ifndef HIER_HCAL_LOSS_H_
#define HIER_HCAL_LOSS_H_

#include <optional>
#include <vector>

namespace hier {

// Length-normalized sequence log-likelihoods for an accepted (w) and a
// rejected (l) response, optionally with the reference model's counterparts.
struct PreferenceScores {
  double s_w = 0.0;
  double s_l = 0.0;
  std::optional<double> s_w_ref;
  std::optional<double> s_l_ref;
};

struct LossParams {
  double tau = 0.1;
  double gamma = 1.0;
  double beta = 0.1;
};

struct LossBreakdown {
  double l_pref = 0.0;
  double l_sl = 0.0;
  double l_kl = 0.0;
  double total = 0.0;
  double grad_s_w = 0.0;
  double grad_s_l = 0.0;
};

void validate(const LossParams& params);

// Mean of per-token log-probabilities. Throws kInvalidArgument when empty.
double length_normalized(const std::vector<double>& token_logprobs);

// log(1 + e^x) without overflow.
double softplus(double x);

double preference_loss(const PreferenceScores& scores, double tau);
double semantic_loss(const PreferenceScores& scores);

// Divergence of the policy's two-candidate distribution from the
// reference's. Zero when either reference score is absent; throws
// kDegenerateReference if a reference score is not finite.
double kl_term(const PreferenceScores& scores);

LossBreakdown hcal(const PreferenceScores& scores, const LossParams& params);

// Central differences on `total` in both scores. Relative error is
// |analytic - numeric| / max(1, |analytic|, |numeric|), so gradients near
// zero are compared on an absolute scale.
double grad_check(const PreferenceScores& scores, const LossParams& params,
                  double epsilon);

}  // namespace hier

#endif  // HIER_HCAL_LOSS_H_

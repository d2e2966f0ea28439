#include "hier/hcal_loss.h"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "hier/errors.h"

namespace hier {
namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// log σ(x)
double log_sigmoid(double x) { return -softplus(-x); }

void check_scores(const PreferenceScores& s) {
  if (!std::isfinite(s.s_w) || !std::isfinite(s.s_l)) {
    throw Error(ErrorCode::kInvalidArgument, "scores must be finite");
  }
}

bool has_reference(const PreferenceScores& s) {
  return s.s_w_ref.has_value() && s.s_l_ref.has_value();
}

double reference_gap(const PreferenceScores& s) {
  const double gap = *s.s_w_ref - *s.s_l_ref;
  if (!std::isfinite(*s.s_w_ref) || !std::isfinite(*s.s_l_ref) || !std::isfinite(gap)) {
    throw Error(ErrorCode::kDegenerateReference,
                "reference distribution puts all mass on one candidate");
  }
  return gap;
}

// d(KL)/d(s_w - s_l); zero without a reference.
double kl_slope(const PreferenceScores& s) {
  if (!has_reference(s)) return 0.0;
  const double d = s.s_w - s.s_l;
  const double p = sigmoid(d);
  return p * (1.0 - p) * (d - reference_gap(s));
}

}  // namespace

void validate(const LossParams& p) {
  if (!(p.tau > 0) || !std::isfinite(p.tau)) {
    throw Error(ErrorCode::kInvalidArgument, "tau must be positive and finite");
  }
  if (!(p.gamma >= 0) || !std::isfinite(p.gamma)) {
    throw Error(ErrorCode::kInvalidArgument, "gamma must be non-negative");
  }
  if (!(p.beta >= 0) || !std::isfinite(p.beta)) {
    throw Error(ErrorCode::kInvalidArgument, "beta must be non-negative");
  }
}

double length_normalized(const std::vector<double>& token_logprobs) {
  if (token_logprobs.empty()) {
    throw Error(ErrorCode::kInvalidArgument, "no token log-probabilities");
  }
  return std::accumulate(token_logprobs.begin(), token_logprobs.end(), 0.0) /
         static_cast<double>(token_logprobs.size());
}

double softplus(double x) {
  if (x > 0) return x + std::log1p(std::exp(-x));
  return std::log1p(std::exp(x));
}

double preference_loss(const PreferenceScores& scores, double tau) {
  check_scores(scores);
  if (!(tau > 0)) throw Error(ErrorCode::kInvalidArgument, "tau must be positive");
  return softplus(-(scores.s_w - scores.s_l) / tau);
}

double semantic_loss(const PreferenceScores& scores) {
  check_scores(scores);
  return softplus(-(scores.s_w - scores.s_l));
}

double kl_term(const PreferenceScores& scores) {
  check_scores(scores);
  if (!has_reference(scores)) return 0.0;
  const double d = scores.s_w - scores.s_l;
  const double r = reference_gap(scores);
  const double p = sigmoid(d);
  const double kl = p * (log_sigmoid(d) - log_sigmoid(r)) +
                    (1.0 - p) * (log_sigmoid(-d) - log_sigmoid(-r));
  return std::max(0.0, kl);
}

LossBreakdown hcal(const PreferenceScores& scores, const LossParams& params) {
  validate(params);
  LossBreakdown b;
  b.l_pref = preference_loss(scores, params.tau);
  b.l_sl = semantic_loss(scores);
  b.l_kl = kl_term(scores);
  b.total = b.l_pref + params.gamma * b.l_sl + params.beta * b.l_kl;

  const double d = scores.s_w - scores.s_l;
  const double slope = -sigmoid(-d / params.tau) / params.tau -
                       params.gamma * sigmoid(-d) + params.beta * kl_slope(scores);
  b.grad_s_w = slope;
  b.grad_s_l = -slope;
  return b;
}

double grad_check(const PreferenceScores& scores, const LossParams& params,
                  double epsilon) {
  if (!(epsilon > 0) || epsilon > 1e-3) {
    throw Error(ErrorCode::kInvalidArgument, "epsilon must lie in (0, 1e-3]");
  }
  const LossBreakdown at = hcal(scores, params);
  auto total_at = [&](double dw, double dl) {
    PreferenceScores s = scores;
    s.s_w += dw;
    s.s_l += dl;
    return hcal(s, params).total;
  };
  const double num_w = (total_at(epsilon, 0) - total_at(-epsilon, 0)) / (2 * epsilon);
  const double num_l = (total_at(0, epsilon) - total_at(0, -epsilon)) / (2 * epsilon);
  auto rel = [](double a, double n) {
    return std::abs(a - n) / std::max({1.0, std::abs(a), std::abs(n)});
  };
  return std::max(rel(at.grad_s_w, num_w), rel(at.grad_s_l, num_l));
}

}  // namespace hier

#pragma once

#include <Eigen/Dense>
#include <functional>

#include "sicd/censored_sample.hpp"
#include "sicd/step_function.hpp"

namespace sicd {

// Product-limit jumps W_in of the Kaplan-Meier estimator of F_Y, reported in
// the sample's original observation order. Censored observations carry zero
// mass. With no censoring at all the weights are exactly 1/n.
struct KMWeights {
  Eigen::VectorXd w;
  double total_event_mass() const;  // sum of w over uncensored observations
};

KMWeights km_jump_weights(const CensoredSample& sample);

// Kaplan-Meier estimator of the censoring distribution G(t) = P(C <= t)
// (product-limit with event flag 1 - delta), as a right-continuous CDF.
StepFunction censoring_survival(const CensoredSample& sample);

// Empirical CDF of the follow-up times, H(t) = n^-1 sum 1{Z_i <= t}.
StepFunction empirical_cdf_H(const CensoredSample& sample);

// Kaplan-Meier estimator of F_Y as a step function (sum of delta_i W_in).
StepFunction km_distribution(const CensoredSample& sample, const KMWeights& w);

// Kaplan-Meier-weighted integral: sum_i delta_i W_in phi(X_i, Z_i).
// Throws NumericalError naming the observation if phi is non-finite at an
// uncensored point with positive weight.
double stute_integral(
    const CensoredSample& sample, const KMWeights& weights,
    const std::function<double(const Eigen::RowVectorXd&, double)>& integrand);

Eigen::VectorXd stute_integral_vec(
    const CensoredSample& sample, const KMWeights& weights,
    const std::function<Eigen::VectorXd(const Eigen::RowVectorXd&, double)>&
        integrand);

// Largest uncensored follow-up time strictly below the overall maximum, so
// that 1 - H(tau0) > 0. Throws NumericalError if no such time exists.
double default_tau0(const CensoredSample& sample);

// Product-limit weight of the largest uncensored follow-up (ties take the
// larger weight); 0 when nothing is uncensored.
double largest_uncensored_weight(const CensoredSample& sample,
                                 const KMWeights& weights);

// Weight-allocation effect of truncating the sample at tau: the retained
// count #{Z_i <= tau}, the largest uncensored product-limit weight on the
// full sample, and the same weight recomputed on the retained sub-sample
// (0 when the sub-sample holds no uncensored observation).
struct TruncationWeights {
  Eigen::Index retained = 0;
  double full = 0.0;
  double truncated = 0.0;
};

TruncationWeights truncation_weights(const CensoredSample& sample, double tau);

// Influence rows psi_hat for the Kaplan-Meier integral of f1 * 1{A_tau}:
//
//   psi_i = delta_i f1(X_i, Z_i) 1{Z_i in A_tau} / (1 - G(Z_i-))
//         + (1 - delta_i) gamma(Z_i) / (1 - H(Z_i-))
//         - sum_{t <= Z_i, t censoring jump of G} gamma(t) dG(t)
//               / [(1 - G(t-)) (1 - H(t-))]
//
// with gamma(y) = sum_j delta_j W_jn f1(X_j, Z_j) 1{y <= Z_j <= tau0,
// Z_j in A_tau}. Returns an n x p matrix (p = dimension of f1's value).
// H denominators use left limits throughout.
Eigen::MatrixXd influence_psi(
    const CensoredSample& sample, const KMWeights& weights,
    const StepFunction& Ghat, const StepFunction& Hhat,
    const std::function<Eigen::VectorXd(const Eigen::RowVectorXd&, double)>& f1,
    const TauWindow& window, double tau0);

// Convenience overload computing weights, Ghat and Hhat internally.
Eigen::MatrixXd influence_psi(
    const CensoredSample& sample,
    const std::function<Eigen::VectorXd(const Eigen::RowVectorXd&, double)>& f1,
    const TauWindow& window, double tau0);

}  // namespace sicd

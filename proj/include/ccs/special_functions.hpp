#pragma once

#include <array>

namespace ccs {

// N(mean, variance) cumulative distribution function.
double normal_cdf(double z, double mean = 0.0, double variance = 1.0);

// Standard normal density.
double normal_pdf(double z);

// Inverse of normal_cdf in its first argument. Throws DomainError for
// p outside (0,1) or variance <= 0.
double normal_quantile(double p, double mean = 0.0, double variance = 1.0);

// P(Z1 <= a, Z2 <= b) for centered bivariate normal Z with covariance matrix
// {{s11, s12}, {s12, s22}}. Throws NotPositiveDefinite when the matrix is not
// symmetric positive definite. Absolute accuracy ~1e-15 (Drezner-Wesolowsky
// quadrature with the Genz high-correlation reduction).
struct Cov2 {
    double s11 = 1.0;
    double s12 = 0.0;
    double s21 = 0.0;
    double s22 = 1.0;
};
double bvn_cdf(double a, double b, const Cov2& sigma);

// Standardized version: unit variances, correlation rho in (-1, 1).
double bvn_cdf_std(double a, double b, double rho);

double expit(double x);
double logit(double p);

}  // namespace ccs

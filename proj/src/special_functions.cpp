#include "ccs/special_functions.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "ccs/errors.hpp"

namespace ccs {

namespace {

constexpr double kTwoPi = 6.283185307179586476925286766559;

// Standard normal CDF via the complementary error function.
double phi_std(double z) { return 0.5 * std::erfc(-z * 0.70710678118654752440); }

// Wichura's AS 241 (PPND16) rational approximations for the standard normal
// quantile, accurate to ~1e-16 over (0,1).
double quantile_std(double p) {
    const double q = p - 0.5;
    double r;
    if (std::fabs(q) <= 0.425) {
        r = 0.180625 - q * q;
        return q *
               (((((((2.5090809287301226727e+3 * r + 3.3430575583588128105e+4) * r +
                     6.7265770927008700853e+4) * r + 4.5921953931549871457e+4) * r +
                   1.3731693765509461125e+4) * r + 1.9715909503065514427e+3) * r +
                 1.3314166789178437745e+2) * r + 3.3871328727963666080e+0) /
               (((((((5.2264952788528545610e+3 * r + 2.8729085735721942674e+4) * r +
                     3.9307895800092710610e+4) * r + 2.1213794301586595867e+4) * r +
                   5.3941960214247511077e+3) * r + 6.8718700749205790830e+2) * r +
                 4.2313330701600911252e+1) * r + 1.0);
    }
    r = q < 0.0 ? p : 1.0 - p;
    r = std::sqrt(-std::log(r));
    double value;
    if (r <= 5.0) {
        r -= 1.6;
        value = (((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r +
                      2.41780725177450611770e-1) * r + 1.27045825245236838258e+0) * r +
                    3.64784832476320460504e+0) * r + 5.76949722146069140550e+0) * r +
                  4.63033784615654529590e+0) * r + 1.42343711074968357734e+0) /
                (((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r +
                      1.51986665636164571966e-2) * r + 1.48103976427480074590e-1) * r +
                    6.89767334985100004550e-1) * r + 1.67638483018380384940e+0) * r +
                  2.05319162663775882187e+0) * r + 1.0);
    } else {
        r -= 5.0;
        value = (((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r +
                      1.24266094738807843860e-3) * r + 2.65321895265761230930e-2) * r +
                    2.96560571828504891230e-1) * r + 1.78482653991729133580e+0) * r +
                  5.46378491116411436990e+0) * r + 6.65790464350110377720e+0) /
                (((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r +
                      1.84631831751005468180e-5) * r + 7.86869131145613259100e-4) * r +
                    1.48753612908506148525e-2) * r + 1.36929880922735805310e-1) * r +
                  5.99832206555887937690e-1) * r + 1.0);
    }
    return q < 0.0 ? -value : value;
}

// 20-point Gauss-Legendre nodes/weights on [-1,1] (half listed; symmetric).
constexpr std::array<double, 10> kGlW = {
    0.1761400713915212e-1, 0.4060142980038694e-1, 0.6267204833410906e-1,
    0.8327674157670475e-1, 0.1019301198172404e+0, 0.1181945319615184e+0,
    0.1316886384491766e+0, 0.1420961093183821e+0, 0.1491729864726037e+0,
    0.1527533871307259e+0};
constexpr std::array<double, 10> kGlX = {
    -0.9931285991850949e+0, -0.9639719272779138e+0, -0.9122344282513259e+0,
    -0.8391169718222188e+0, -0.7463319064601508e+0, -0.6360536807265150e+0,
    -0.5108670019508271e+0, -0.3737060887154196e+0, -0.2277858511416451e+0,
    -0.7652652113349733e-1};

// Genz's double-precision BVND: P(X > h, Y > k) for standard bivariate normal
// with correlation rho (Drezner & Wesolowsky 1990 with modifications for
// correlations close to +-1).
double bvn_upper(double h, double k, double rho) {
    double bvn = 0.0;
    double hk = h * k;
    if (std::fabs(rho) < 0.925) {
        if (std::fabs(rho) > 0.0) {
            const double hs = 0.5 * (h * h + k * k);
            const double asr = std::asin(rho);
            for (int i = 0; i < 10; ++i) {
                for (int is = -1; is <= 1; is += 2) {
                    const double sn = std::sin(asr * (is * kGlX[i] + 1.0) * 0.5);
                    bvn += kGlW[i] * std::exp((sn * hk - hs) / (1.0 - sn * sn));
                }
            }
            bvn *= asr / (2.0 * kTwoPi);
        }
        bvn += phi_std(-h) * phi_std(-k);
        return bvn;
    }
    if (rho < 0.0) {
        k = -k;
        hk = -hk;
    }
    if (std::fabs(rho) < 1.0) {
        const double as = (1.0 - rho) * (1.0 + rho);
        double a = std::sqrt(as);
        const double bs = (h - k) * (h - k);
        const double c = (4.0 - hk) / 8.0;
        const double d = (12.0 - hk) / 16.0;
        double asr = -0.5 * (bs / as + hk);
        if (asr > -100.0) {
            bvn = a * std::exp(asr) *
                  (1.0 - c * (bs - as) * (1.0 - d * bs / 5.0) / 3.0 + c * d * as * as / 5.0);
        }
        if (-hk < 100.0) {
            const double b = std::sqrt(bs);
            const double sp = std::sqrt(kTwoPi) * phi_std(-b / a);
            bvn -= std::exp(-0.5 * hk) * sp * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        a *= 0.5;
        for (int i = 0; i < 10; ++i) {
            for (int is = -1; is <= 1; is += 2) {
                const double x = a * (is * kGlX[i] + 1.0);
                const double xs = x * x;
                const double rs = std::sqrt(1.0 - xs);
                asr = -0.5 * (bs / xs + hk);
                if (asr > -100.0) {
                    const double sp = 1.0 + c * xs * (1.0 + d * xs);
                    const double ep = std::exp(-hk * (1.0 - rs) / (2.0 * (1.0 + rs))) / rs;
                    bvn += a * kGlW[i] * std::exp(asr) * (ep - sp);
                }
            }
        }
        bvn = -bvn / kTwoPi;
    }
    if (rho > 0.0) {
        bvn += phi_std(-std::max(h, k));
    } else {
        bvn = -bvn;
        if (h < k) bvn += phi_std(k) - phi_std(h);
    }
    return bvn;
}

}  // namespace

double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(kTwoPi); }

double normal_cdf(double z, double mean, double variance) {
    if (!(variance > 0.0)) {
        throw DomainError("normal_cdf requires variance > 0, got " + std::to_string(variance));
    }
    return phi_std((z - mean) / std::sqrt(variance));
}

double normal_quantile(double p, double mean, double variance) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("normal_quantile requires p in (0,1), got " + std::to_string(p));
    }
    if (!(variance > 0.0)) {
        throw DomainError("normal_quantile requires variance > 0, got " +
                          std::to_string(variance));
    }
    return mean + std::sqrt(variance) * quantile_std(p);
}

double bvn_cdf_std(double a, double b, double rho) {
    if (!(std::fabs(rho) < 1.0)) {
        throw NotPositiveDefinite("|correlation| = " + std::to_string(std::fabs(rho)));
    }
    // P(Z1 <= a, Z2 <= b) = P(-Z1 > -a, -Z2 > -b) by symmetry of the pair.
    return bvn_upper(-a, -b, rho);
}

double bvn_cdf(double a, double b, const Cov2& sigma) {
    const double tol = 1e-12 * (std::fabs(sigma.s12) + std::fabs(sigma.s21) + 1.0);
    if (std::fabs(sigma.s12 - sigma.s21) > tol) {
        throw NotPositiveDefinite("matrix is not symmetric");
    }
    if (!(sigma.s11 > 0.0) || !(sigma.s22 > 0.0)) {
        throw NotPositiveDefinite("nonpositive diagonal");
    }
    const double det = sigma.s11 * sigma.s22 - sigma.s12 * sigma.s12;
    if (!(det > 0.0)) {
        throw NotPositiveDefinite("determinant " + std::to_string(det));
    }
    const double s1 = std::sqrt(sigma.s11);
    const double s2 = std::sqrt(sigma.s22);
    return bvn_cdf_std(a / s1, b / s2, sigma.s12 / (s1 * s2));
}

double expit(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double logit(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        throw DomainError("logit requires p in (0,1), got " + std::to_string(p));
    }
    return std::log(p / (1.0 - p));
}

}  // namespace ccs

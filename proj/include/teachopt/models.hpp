#pragma once

#include <cmath>
#include <span>
#include <vector>

#include "teachopt/effort.hpp"
#include "teachopt/errors.hpp"
#include "teachopt/expfam.hpp"
#include "teachopt/numerics.hpp"

namespace teachopt {

// ---------------------------------------------------------------------------
// Univariate Gaussian with known variance; the mean is taught.
// Natural parameter theta = mu / sigma2, T(x) = x, A(theta) = theta^2 sigma2 / 2.
// ---------------------------------------------------------------------------

struct GaussianMeanPriorStd {
  double mu0 = 0.0;
  double sigma0_2 = 1.0;  // prior variance of the mean
};

struct GaussianMeanModel {
  double sigma2 = 1.0;

  int stats_dim() const { return 1; }
  double log_partition(const NaturalParam& t) const {
    return 0.5 * t.theta[0] * t.theta[0] * sigma2;
  }
  bool hyper_in_domain(const ConjugateHyper& h) const { return h.lambda2 > 0.0; }
  double conj_log_norm(const ConjugateHyper& h) const {
    const double l1 = h.lambda1[0], l2 = h.lambda2;
    return l1 * l1 / (2.0 * sigma2 * l2) - 0.5 * std::log(sigma2 * l2);
  }
  ConjugateHyper conj_log_norm_grad(const ConjugateHyper& h) const {
    const double l1 = h.lambda1[0], l2 = h.lambda2;
    return {{l1 / (sigma2 * l2)}, -l1 * l1 / (2.0 * sigma2 * l2 * l2) - 0.5 / l2};
  }

  NaturalParam natural_of(double mu) const { return {{mu / sigma2}}; }

  // lambda1 = mu0 sigma2 / sigma0^2, lambda2 = sigma2 / sigma0^2
  ConjugateHyper hyper_of(const GaussianMeanPriorStd& p) const {
    if (p.sigma0_2 <= 0.0) throw DomainError("gaussian prior: sigma0_2 must be positive");
    return {{p.mu0 * sigma2 / p.sigma0_2}, sigma2 / p.sigma0_2};
  }
  GaussianMeanPriorStd std_prior_of(const ConjugateHyper& h) const {
    return {h.lambda1[0] / h.lambda2, sigma2 / h.lambda2};
  }

  // Additive constant linking the natural-form objective to the negative log
  // posterior density of the mean: -log h0 with the change of measure to mu.
  double density_constant(const NaturalParam&) const {
    return 0.5 * std::log(2.0 * 3.14159265358979323846) + std::log(sigma2);
  }
};

// Aggregate-statistics objective for the Gaussian mean, standard parameters:
//   -theta* s + (sigma2 theta*^2 / 2) n + (l1+s)^2 / (2 sigma2 (l2+n))
//   - log(sigma2 (l2+n)) / 2 + effort(n, s).
inline double gaussian_step1_objective(const GaussianMeanModel& model,
                                       const GaussianMeanPriorStd& prior, double mu_star,
                                       const EffortSpec& effort, double n, double s) {
  const ConjugateHyper h = model.hyper_of(prior);
  if (h.lambda2 + n <= 0.0) throw DomainError("gaussian objective: lambda2 + n must be positive");
  const double theta = mu_star / model.sigma2;
  const double l1s = h.lambda1[0] + s;
  const Vec sv{s};
  const double e = effort_value(effort, n, sv);
  return -theta * s + 0.5 * model.sigma2 * theta * theta * n +
         l1s * l1s / (2.0 * model.sigma2 * (h.lambda2 + n)) -
         0.5 * std::log(model.sigma2 * (h.lambda2 + n)) + e;
}

// ---------------------------------------------------------------------------
// Multinomial with Dirichlet prior. All K counts are carried (overcomplete,
// theta_k = log pi_k, A = 0), so lambda1 = beta - 1 and lambda2 is inert.
// ---------------------------------------------------------------------------

struct MultinomialModel {
  int K = 2;

  int stats_dim() const { return K; }
  double log_partition(const NaturalParam&) const { return 0.0; }
  bool hyper_in_domain(const ConjugateHyper& h) const {
    for (double l : h.lambda1)
      if (l <= -1.0) return false;
    return true;
  }
  double conj_log_norm(const ConjugateHyper& h) const {
    double sum = 0.0, acc = 0.0;
    for (double l : h.lambda1) {
      acc += log_gamma(l + 1.0);
      sum += l + 1.0;
    }
    return acc - log_gamma(sum);
  }
  ConjugateHyper conj_log_norm_grad(const ConjugateHyper& h) const {
    double sum = 0.0;
    for (double l : h.lambda1) sum += l + 1.0;
    const double psi_total = digamma(sum);
    ConjugateHyper g;
    g.lambda1.resize(h.lambda1.size());
    for (std::size_t k = 0; k < h.lambda1.size(); ++k)
      g.lambda1[k] = digamma(h.lambda1[k] + 1.0) - psi_total;
    g.lambda2 = 0.0;
    return g;
  }

  ConjugateHyper hyper_of_beta(const Vec& beta) const {
    ConjugateHyper h;
    h.lambda1.resize(beta.size());
    for (std::size_t k = 0; k < beta.size(); ++k) {
      if (beta[k] <= 0.0) throw DomainError("dirichlet prior: beta must be positive");
      h.lambda1[k] = beta[k] - 1.0;
    }
    h.lambda2 = 0.0;
    return h;
  }
  NaturalParam natural_of(const Vec& pi) const {
    NaturalParam t;
    t.theta.resize(pi.size());
    for (std::size_t k = 0; k < pi.size(); ++k) {
      if (pi[k] <= 0.0) throw DomainError("multinomial target: pi must be strictly positive");
      t.theta[k] = std::log(pi[k]);
    }
    return t;
  }

  double density_constant(const NaturalParam&) const { return 0.0; }
};

// Negative log Dirichlet posterior density at pi*, plus effort:
//   -log Gamma(sum(beta+s)) + sum log Gamma(beta_k+s_k)
//   - sum (beta_k+s_k-1) log pi*_k + effort(s).
// For integer s this is the teaching impedance itself (no dropped constant).
inline double multinomial_step1_objective(const MultinomialModel& model, const Vec& beta,
                                          const Vec& pi_star, const EffortSpec& effort,
                                          const Vec& s) {
  if (static_cast<int>(s.size()) != model.K) throw DomainError("multinomial objective: bad K");
  double n = 0.0, total = 0.0, value = 0.0;
  for (int k = 0; k < model.K; ++k) {
    if (s[k] < 0.0) throw DomainError("multinomial objective: s must be nonnegative");
    const double a = beta[k] + s[k];
    total += a;
    value += log_gamma(a) - (a - 1.0) * std::log(pi_star[k]);
    n += s[k];
  }
  return value - log_gamma(total) + effort_value(effort, n, s);
}

inline Vec multinomial_step1_gradient(const MultinomialModel& model, const Vec& beta,
                                      const Vec& pi_star, const EffortSpec& effort,
                                      const Vec& s) {
  double n = 0.0, total = 0.0;
  for (int k = 0; k < model.K; ++k) {
    total += beta[k] + s[k];
    n += s[k];
  }
  const double psi_total = digamma(total);
  const EffortGradient ge = effort_gradient(effort, n, s);
  Vec g(model.K);
  for (int k = 0; k < model.K; ++k)
    g[k] = digamma(beta[k] + s[k]) - psi_total - std::log(pi_star[k]) + ge.ds[k] + ge.dn;
  return g;
}

// ---------------------------------------------------------------------------
// Exponential and Poisson: scalar T(x) = x, Gamma conjugate prior.
// ---------------------------------------------------------------------------

enum class ExampleDomain { Real, PositiveReal, NonNegativeInteger, Category, RealVector };

// Exponential with rate r: natural theta = -r, A(theta) = -log(-theta).
// Gamma(a, b) prior on the rate maps to lambda1 = b, lambda2 = a - 1.
struct ExponentialModel {
  int stats_dim() const { return 1; }
  double log_partition(const NaturalParam& t) const {
    if (t.theta[0] >= 0.0) throw DomainError("exponential: natural parameter must be negative");
    return -std::log(-t.theta[0]);
  }
  bool hyper_in_domain(const ConjugateHyper& h) const {
    return h.lambda1[0] > 0.0 && h.lambda2 > -1.0;
  }
  double conj_log_norm(const ConjugateHyper& h) const {
    return log_gamma(h.lambda2 + 1.0) - (h.lambda2 + 1.0) * std::log(h.lambda1[0]);
  }
  ConjugateHyper conj_log_norm_grad(const ConjugateHyper& h) const {
    return {{-(h.lambda2 + 1.0) / h.lambda1[0]},
            digamma(h.lambda2 + 1.0) - std::log(h.lambda1[0])};
  }
  NaturalParam natural_of_rate(double r) const {
    if (r <= 0.0) throw DomainError("exponential target: rate must be positive");
    return {{-r}};
  }
  ConjugateHyper hyper_of_gamma(double a, double b) const {
    if (a <= 0.0 || b <= 0.0) throw DomainError("gamma prior: a, b must be positive");
    return {{b}, a - 1.0};
  }
  double density_constant(const NaturalParam&) const { return 0.0; }
  ExampleDomain example_domain() const { return ExampleDomain::PositiveReal; }
};

// Poisson with mean r: natural theta = log r, A(theta) = exp(theta).
// Gamma(a, b) prior maps to lambda1 = a, lambda2 = b.
struct PoissonModel {
  int stats_dim() const { return 1; }
  double log_partition(const NaturalParam& t) const { return std::exp(t.theta[0]); }
  bool hyper_in_domain(const ConjugateHyper& h) const {
    return h.lambda1[0] > 0.0 && h.lambda2 > 0.0;
  }
  double conj_log_norm(const ConjugateHyper& h) const {
    return log_gamma(h.lambda1[0]) - h.lambda1[0] * std::log(h.lambda2);
  }
  ConjugateHyper conj_log_norm_grad(const ConjugateHyper& h) const {
    return {{digamma(h.lambda1[0]) - std::log(h.lambda2)}, -h.lambda1[0] / h.lambda2};
  }
  NaturalParam natural_of_mean(double r) const {
    if (r <= 0.0) throw DomainError("poisson target: mean must be positive");
    return {{std::log(r)}};
  }
  ConjugateHyper hyper_of_gamma(double a, double b) const {
    if (a <= 0.0 || b <= 0.0) throw DomainError("gamma prior: a, b must be positive");
    return {{a}, b};
  }
  // change of measure from theta = log r back to the rate r
  double density_constant(const NaturalParam& target) const { return target.theta[0]; }
  ExampleDomain example_domain() const { return ExampleDomain::NonNegativeInteger; }
};

// ---------------------------------------------------------------------------
// Multivariate Gaussian with Normal-Inverse-Wishart prior; both the mean and
// the covariance are taught. Stats carry s = sum x_i and S = sum x_i x_i^T.
// ---------------------------------------------------------------------------

struct NIWModel {
  int D = 1;
  Vec mu0;
  double kappa0 = 1.0;
  double nu0 = 1.0;  // must exceed D - 1
  SymMatrix lambda0;
};

struct NIWStats {
  double n = 0.0;
  Vec s;
  SymMatrix S;
};

struct NIWTarget {
  Vec mu_star;
  SymMatrix sigma_star;
};

struct NIWPosterior {
  Vec mu_n;
  double kappa_n = 0.0;
  double nu_n = 0.0;
  SymMatrix lambda_n;
};

// Posterior hyperparameters. The rank-one cross term is applied symmetrically
// (mu0 s^T + s mu0^T), keeping lambda_n in SymMatrix.
inline NIWPosterior niw_posterior(const NIWModel& m, const NIWStats& st) {
  const double kn = m.kappa0 + st.n;
  if (kn <= 0.0) throw DomainError("niw_posterior: kappa0 + n must be positive");
  NIWPosterior p;
  p.kappa_n = kn;
  p.nu_n = m.nu0 + st.n;
  p.mu_n.resize(m.D);
  for (int i = 0; i < m.D; ++i) p.mu_n[i] = (m.kappa0 * m.mu0[i] + st.s[i]) / kn;
  p.lambda_n = m.lambda0 + st.S + (m.kappa0 * st.n / kn) * outer(m.mu0) -
               (m.kappa0 / kn) * sym_outer(m.mu0, st.s) - (1.0 / kn) * outer(st.s);
  return p;
}

inline bool niw_stats_feasible(const NIWModel& m, const NIWStats& st, bool ridge_div2 = false) {
  if (st.n < 0.0) return false;
  if (st.n == 0.0) {
    for (double v : st.s)
      if (v != 0.0) return false;
    for (double v : st.S.data())
      if (v != 0.0) return false;
    return true;
  }
  EigenSym es = eigh(st.S);
  for (double w : es.values)
    if (w < -1e-9) return false;
  for (int i = 0; i < m.D; ++i) {
    const double lo = ridge_div2 ? st.s[i] * st.s[i] / 2.0 : st.s[i] * st.s[i] / st.n;
    if (st.S(i, i) < lo - 1e-9) return false;
  }
  return true;
}

namespace detail {

// Loss part of the aggregate-statistics objective for the NIW learner
// (negative log posterior density at (mu*, Sigma*) up to constants in the
// stats): (D log2 / 2) nu_n + sum_i log Gamma((nu_n+1-i)/2) - (nu_n/2) log|L|
// - (D/2) log kappa_n + (nu_n/2) log|Sigma*| + tr(Sigma*^-1 L)/2
// + (kappa_n/2) (mu*-mu_n)' Sigma*^-1 (mu*-mu_n),
// with log|L| supplied by the caller.
inline double niw_loss_given_logdet(const NIWModel& m, const NIWTarget& target,
                                    const NIWPosterior& p, double logdet_lambda_n) {
  const int D = m.D;
  double value = 0.5 * D * std::log(2.0) * p.nu_n;
  for (int i = 1; i <= D; ++i) value += log_gamma(0.5 * (p.nu_n + 1.0 - i));
  value -= 0.5 * p.nu_n * logdet_lambda_n;
  value -= 0.5 * D * std::log(p.kappa_n);
  value += 0.5 * p.nu_n * log_det_pd(target.sigma_star);
  const SymMatrix prec = inverse_pd(target.sigma_star);
  double tr = 0.0;
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j) tr += prec(i, j) * p.lambda_n(j, i);
  value += 0.5 * tr;
  Vec delta(D);
  for (int i = 0; i < D; ++i) delta[i] = target.mu_star[i] - p.mu_n[i];
  value += 0.5 * p.kappa_n * dot(delta, prec.mul(delta));
  return value;
}

}  // namespace detail

inline double niw_step1_loss(const NIWModel& m, const NIWTarget& target, const NIWStats& st) {
  const NIWPosterior p = niw_posterior(m, st);
  return detail::niw_loss_given_logdet(m, target, p, log_det_pd(p.lambda_n));
}

inline double niw_step1_objective(const NIWModel& m, const NIWTarget& target,
                                  const EffortSpec& effort, const NIWStats& st) {
  const double e = effort_value(effort, st.n, st.s);
  if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
  return niw_step1_loss(m, target, st) + e;
}

// Same loss but with log|Lambda_n| taken on the matrix assembled with the
// one-sided cross term - (2 kappa0 / kappa_n) mu0 s^T, without symmetrizing.
// The two agree exactly when s is parallel to mu0 (the skew part contributes
// det(sym + skew) = det(sym) * prod(1 + theta_j^2) >= det(sym)); reported
// impedance values use this form.
inline double niw_loss_onesided(const NIWModel& m, const NIWTarget& target, const NIWStats& st) {
  const NIWPosterior p = niw_posterior(m, st);
  const int D = m.D;
  const double kn = p.kappa_n;
  Vec raw(static_cast<std::size_t>(D) * D);
  for (int i = 0; i < D; ++i)
    for (int j = 0; j < D; ++j)
      raw[i * D + j] = m.lambda0(i, j) + st.S(i, j) +
                       (m.kappa0 * st.n / kn) * m.mu0[i] * m.mu0[j] -
                       (2.0 * m.kappa0 / kn) * m.mu0[i] * st.s[j] - st.s[i] * st.s[j] / kn;
  return detail::niw_loss_given_logdet(m, target, p, log_det_lu(std::move(raw), D));
}

struct NIWGradient {
  double dn = 0.0;
  Vec ds;
  SymMatrix dS;
};

inline NIWGradient niw_step1_gradient(const NIWModel& m, const NIWTarget& target,
                                      const EffortSpec& effort, const NIWStats& st) {
  const int D = m.D;
  const NIWPosterior p = niw_posterior(m, st);
  const SymMatrix prec = inverse_pd(target.sigma_star);
  const SymMatrix q = inverse_pd(p.lambda_n);

  // dLoss/dLambda_n = -(nu_n/2) Lambda_n^-1 + Sigma*^-1 / 2
  SymMatrix g_lambda(D);
  for (int i = 0; i < D; ++i)
    for (int j = i; j < D; ++j)
      g_lambda.set(i, j, -0.5 * p.nu_n * q(i, j) + 0.5 * prec(i, j));

  Vec delta(D);
  for (int i = 0; i < D; ++i) delta[i] = target.mu_star[i] - p.mu_n[i];
  const Vec prec_delta = prec.mul(delta);

  NIWGradient g;
  g.dS = g_lambda;

  // dLambda_n/ds_j contributes -2 G (kappa0 mu0 + s) / kappa_n; the mean term
  // contributes -Sigma*^-1 delta.
  Vec km(D);
  for (int i = 0; i < D; ++i) km[i] = m.kappa0 * m.mu0[i] + st.s[i];
  const Vec g_km = g_lambda.mul(km);
  g.ds.resize(D);
  const EffortGradient ge = effort_gradient(effort, st.n, st.s);
  for (int j = 0; j < D; ++j) g.ds[j] = -prec_delta[j] - 2.0 * g_km[j] / p.kappa_n + ge.ds[j];

  // dLambda_n/dn = mu_n mu_n^T; d mu_n/dn = -mu_n / kappa_n.
  double dn = 0.5 * D * std::log(2.0);
  for (int i = 1; i <= D; ++i) dn += 0.5 * digamma(0.5 * (p.nu_n + 1.0 - i));
  dn -= 0.5 * log_det_pd(p.lambda_n);
  dn += 0.5 * log_det_pd(target.sigma_star);
  dn -= 0.5 * D / p.kappa_n;
  dn += 0.5 * dot(delta, prec_delta);
  dn += dot(delta, prec.mul(p.mu_n));
  dn += dot(p.mu_n, g_lambda.mul(p.mu_n));
  g.dn = dn + ge.dn;
  return g;
}

}  // namespace teachopt

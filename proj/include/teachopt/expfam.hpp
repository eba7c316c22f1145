#pragma once

#include <concepts>
#include <limits>
#include <span>
#include <vector>

#include "teachopt/effort.hpp"
#include "teachopt/errors.hpp"
#include "teachopt/numerics.hpp"

namespace teachopt {

struct NaturalParam {
  Vec theta;
};

// Natural parameters (lambda1, lambda2) of a conjugate prior
//   p(theta) = h0(theta) exp(lambda1 . theta - lambda2 A(theta) - A0(lambda1, lambda2)).
struct ConjugateHyper {
  Vec lambda1;
  double lambda2 = 0.0;
};

// Relaxed teaching-set summary: real-valued cardinality n and aggregate
// sufficient statistics s = sum_i T(x_i).
struct AggregateStats {
  double n = 0.0;
  Vec s;
};

// What a conjugate exponential-family learner model must provide for the
// aggregate-statistics objective: its stats dimension D, the log partition
// A(theta), the conjugate log-normalizer A0 with gradient, and the domain
// where A0 is finite.
template <class M>
concept ConjugateFamily = requires(const M& m, const NaturalParam& t, const ConjugateHyper& h) {
  { m.stats_dim() } -> std::convertible_to<int>;
  { m.log_partition(t) } -> std::convertible_to<double>;
  { m.conj_log_norm(h) } -> std::convertible_to<double>;
  { m.conj_log_norm_grad(h) } -> std::convertible_to<ConjugateHyper>;
  { m.hyper_in_domain(h) } -> std::convertible_to<bool>;
};

template <ConjugateFamily M>
ConjugateHyper posterior_hyper(const M& model, const ConjugateHyper& prior,
                               const AggregateStats& stats) {
  if (static_cast<int>(prior.lambda1.size()) != model.stats_dim() ||
      prior.lambda1.size() != stats.s.size())
    throw DomainError("posterior_hyper: dimension mismatch");
  ConjugateHyper post;
  post.lambda1.resize(prior.lambda1.size());
  for (std::size_t k = 0; k < post.lambda1.size(); ++k)
    post.lambda1[k] = prior.lambda1[k] + stats.s[k];
  post.lambda2 = prior.lambda2 + stats.n;
  if (!model.hyper_in_domain(post))
    throw DomainError("posterior_hyper: update leaves the conjugate domain");
  return post;
}

// Objective over relaxed (n, s):
//   -theta* . (lambda1 + s) + A(theta*) (lambda2 + n) + A0(lambda1 + s, lambda2 + n)
//   + effort(n, s).
// Equals the negative log posterior density at theta* plus effort, up to the
// additive constant -log h0(theta*) reported by each model.
template <ConjugateFamily M>
double step1_objective(const M& model, const ConjugateHyper& prior, const NaturalParam& target,
                       const EffortSpec& effort, const AggregateStats& stats) {
  const double e = effort_value(effort, stats.n, stats.s);
  if (!std::isfinite(e)) return std::numeric_limits<double>::infinity();
  const ConjugateHyper post = posterior_hyper(model, prior, stats);
  return -dot(target.theta, post.lambda1) + model.log_partition(target) * post.lambda2 +
         model.conj_log_norm(post) + e;
}

// Gradient of step1_objective with respect to (s, n).
// Layout: entries 0..D-1 are d/ds_k, entry D is d/dn.
template <ConjugateFamily M>
Vec step1_gradient(const M& model, const ConjugateHyper& prior, const NaturalParam& target,
                   const EffortSpec& effort, const AggregateStats& stats) {
  const ConjugateHyper post = posterior_hyper(model, prior, stats);
  const ConjugateHyper g0 = model.conj_log_norm_grad(post);
  const EffortGradient ge = effort_gradient(effort, stats.n, stats.s);
  const int d = model.stats_dim();
  Vec g(d + 1);
  for (int k = 0; k < d; ++k) g[k] = -target.theta[k] + g0.lambda1[k] + ge.ds[k];
  g[d] = model.log_partition(target) + g0.lambda2 + ge.dn;
  return g;
}

}  // namespace teachopt

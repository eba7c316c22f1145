#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <vector>

#include "teachopt/effort.hpp"
#include "teachopt/errors.hpp"
#include "teachopt/expfam.hpp"
#include "teachopt/models.hpp"
#include "teachopt/numerics.hpp"
#include "teachopt/rng.hpp"

namespace teachopt {

class InfeasibleScenario : public std::runtime_error {
 public:
  explicit InfeasibleScenario(const std::string& what) : std::runtime_error(what) {}
};

struct SolverOptions {
  int max_iters = 10000;
  double grad_tol = 1e-8;
  double init_step = 1.0;
  double backtrack_factor = 0.5;
  double armijo_c = 1e-4;
  std::uint64_t seed = 0;
  int unpack_restarts = 5;
  int integer_neighborhood = 2;
  bool ridge_div2 = false;  // restore the literal S_ii >= s_i^2/2 constraint
};

struct PgdResult {
  Vec z;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
  Vec trace;  // objective after each accepted step, non-increasing
};

// Projected gradient descent with Armijo backtracking. `proj` mutates its
// argument onto the feasible set; `f` may return +inf outside the domain of
// the objective. Sufficient decrease is measured along the projected step,
// which keeps the trace monotone for convex feasible sets.
template <class F, class G, class P>
PgdResult projected_gradient(Vec z0, F&& f, G&& g, P&& proj, const SolverOptions& opt) {
  PgdResult res;
  proj(z0);
  res.z = std::move(z0);
  res.value = f(res.z);
  if (!std::isfinite(res.value))
    throw InfeasibleScenario("projected_gradient: infeasible starting point");
  res.trace.push_back(res.value);
  double step = opt.init_step;
  const std::size_t dim = res.z.size();

  for (res.iterations = 0; res.iterations < opt.max_iters; ++res.iterations) {
    const Vec grad = g(res.z);

    // unit-step gradient mapping as the stationarity measure
    Vec probe(dim);
    for (std::size_t i = 0; i < dim; ++i) probe[i] = res.z[i] - grad[i];
    proj(probe);
    double pg = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double d = res.z[i] - probe[i];
      pg += d * d;
    }
    if (std::sqrt(pg) <= opt.grad_tol) {
      res.converged = true;
      return res;
    }

    bool accepted = false;
    for (double t = step; t >= 1e-18; t *= opt.backtrack_factor) {
      Vec zt(dim);
      for (std::size_t i = 0; i < dim; ++i) zt[i] = res.z[i] - t * grad[i];
      proj(zt);
      double dec = 0.0;
      for (std::size_t i = 0; i < dim; ++i) dec += grad[i] * (zt[i] - res.z[i]);
      const double ft = f(zt);
      if (std::isfinite(ft) && ft <= res.value + opt.armijo_c * dec && ft <= res.value) {
        res.z = std::move(zt);
        res.value = ft;
        res.trace.push_back(ft);
        step = std::min(t / opt.backtrack_factor, 1e8);
        accepted = true;
        break;
      }
    }
    if (!accepted) return res;  // backtracking exhausted at numerical precision
  }
  return res;
}

// Smallest-objective nonnegative integer in [max(0, floor(n)-k), max(0, ceil(n)+k)];
// `objective_at_fixed_n` is expected to re-minimize the remaining statistics at
// that cardinality. Ties break toward the smaller n.
inline long long integerize_n(const std::function<double(long long)>& objective_at_fixed_n,
                              double n_relaxed, int k) {
  const long long lo = std::max<long long>(0, static_cast<long long>(std::floor(n_relaxed)) - k);
  const long long hi =
      std::max<long long>(0, static_cast<long long>(std::ceil(n_relaxed)) + k);
  long long best = lo;
  double best_val = objective_at_fixed_n(lo);
  for (long long n = lo + 1; n <= hi; ++n) {
    const double v = objective_at_fixed_n(n);
    if (v < best_val) {
      best = n;
      best_val = v;
    }
  }
  return best;
}

// Componentwise round-half-to-even; with a cardinality constraint the sum is
// restored by a largest-remainder adjustment.
inline Vec round_discrete(const Vec& s, std::optional<long long> n_constraint = {}) {
  Vec r(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) {
    if (s[k] < 0.0) throw DomainError("round_discrete: negative entry");
    r[k] = std::nearbyint(s[k]);
  }
  if (n_constraint) {
    long long sum = 0;
    for (double v : r) sum += static_cast<long long>(v);
    long long diff = *n_constraint - sum;
    std::vector<std::size_t> order(s.size());
    std::iota(order.begin(), order.end(), 0u);
    if (diff > 0) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return s[a] - r[a] > s[b] - r[b];
      });
      for (std::size_t i = 0; diff > 0; i = (i + 1) % order.size(), --diff) r[order[i]] += 1.0;
    } else if (diff < 0) {
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return s[a] - r[a] < s[b] - r[b];
      });
      for (std::size_t i = 0; diff < 0; i = (i + 1) % order.size()) {
        if (r[order[i]] > 0.0) {
          r[order[i]] -= 1.0;
          ++diff;
        }
      }
    }
  }
  return r;
}

// Euclidean projection onto { s >= 0, sum s = total }.
inline void project_simplex_sum(Vec& s, double total) {
  const std::size_t k = s.size();
  Vec u = s;
  std::sort(u.begin(), u.end(), std::greater<>());
  double css = 0.0, tau = 0.0;
  std::size_t rho = 0;
  for (std::size_t i = 0; i < k; ++i) {
    css += u[i];
    const double t = (css - total) / static_cast<double>(i + 1);
    if (u[i] - t > 0.0) {
      rho = i + 1;
      tau = t;
    }
  }
  (void)rho;
  for (double& v : s) v = std::max(v - tau, 0.0);
}

struct TeachingSet {
  std::vector<Vec> examples;  // one entry per example, in the model's domain
  long long n() const { return static_cast<long long>(examples.size()); }
};

struct UnpackResult {
  TeachingSet set;
  double residual = 0.0;
  bool ok = true;
};

struct Step1Solution {
  double n_relaxed = 0.0;
  Vec s;                      // relaxed aggregate statistics at the optimum
  std::optional<SymMatrix> S; // second-moment block (NIW only)
  Vec s_int;                  // repaired integer counts (count-valued models only)
  long long n_int = 0;
  double objective_at_opt = 0.0;
  int iterations = 0;
  bool converged = false;
};

// ---------------------------------------------------------------------------
// Gaussian mean
// ---------------------------------------------------------------------------

namespace detail {

inline auto gaussian_projector(const EffortSpec& effort) {
  const bool box = effort.kind == EffortKind::RangeBox;
  const double d = effort.d;
  return [box, d](Vec& z) {
    z[0] = std::max(z[0], 0.0);
    if (box) z[1] = std::clamp(z[1], -d * z[0], d * z[0]);
  };
}

}  // namespace detail

inline Step1Solution solve_step1(const GaussianMeanModel& model,
                                 const GaussianMeanPriorStd& prior, double mu_star,
                                 const EffortSpec& effort, const SolverOptions& opt) {
  auto f = [&](const Vec& z) {
    try {
      return gaussian_step1_objective(model, prior, mu_star, effort, z[0], z[1]);
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  const ConjugateHyper hyper = model.hyper_of(prior);
  const NaturalParam target = model.natural_of(mu_star);
  auto g = [&](const Vec& z) {
    const AggregateStats st{z[0], {z[1]}};
    const Vec gs = step1_gradient(model, hyper, target, effort, st);
    return Vec{gs[1], gs[0]};  // internal layout is (n, s)
  };
  auto proj = detail::gaussian_projector(effort);

  PgdResult r = projected_gradient(Vec{1.0, 0.0}, f, g, proj, opt);

  auto objective_at = [&](long long n) {
    auto pin = [&, n](Vec& z) {
      proj(z);
      z[0] = static_cast<double>(n);
      if (effort.kind == EffortKind::RangeBox)
        z[1] = std::clamp(z[1], -effort.d * z[0], effort.d * z[0]);
    };
    PgdResult rn = projected_gradient(Vec{static_cast<double>(n), r.z[1]}, f, g, pin, opt);
    return rn.value;
  };

  Step1Solution sol;
  sol.n_relaxed = r.z[0];
  sol.s = {r.z[1]};
  sol.n_int = integerize_n(objective_at, sol.n_relaxed, opt.integer_neighborhood);
  sol.objective_at_opt = r.value;
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  return sol;
}

// ---------------------------------------------------------------------------
// Multinomial: the cardinality is tied to the counts, so the relaxed solve is
// over s alone and integerization rounds the counts.
// ---------------------------------------------------------------------------

inline Step1Solution solve_step1(const MultinomialModel& model, const Vec& beta,
                                 const Vec& pi_star, const EffortSpec& effort,
                                 const SolverOptions& opt) {
  auto f = [&](const Vec& s) {
    try {
      return multinomial_step1_objective(model, beta, pi_star, effort, s);
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto g = [&](const Vec& s) { return multinomial_step1_gradient(model, beta, pi_star, effort, s); };
  auto proj = [](Vec& s) {
    for (double& v : s) v = std::max(v, 0.0);
  };
  PgdResult r = projected_gradient(Vec(model.K, 1.0), f, g, proj, opt);

  Step1Solution sol;
  sol.s = r.z;
  sol.n_relaxed = std::accumulate(r.z.begin(), r.z.end(), 0.0);
  sol.objective_at_opt = r.value;
  sol.iterations = r.iterations;
  sol.converged = r.converged;

  // round, then repair by +-1 coordinate moves on the exact integer objective
  Vec counts = round_discrete(sol.s);
  bool improved = true;
  for (int pass = 0; pass < 100 && improved; ++pass) {
    improved = false;
    double cur = f(counts);
    for (int k = 0; k < model.K; ++k) {
      for (double delta : {1.0, -1.0}) {
        if (counts[k] + delta < 0.0) continue;
        counts[k] += delta;
        const double v = f(counts);
        if (v < cur - 1e-12) {
          cur = v;
          improved = true;
        } else {
          counts[k] -= delta;
        }
      }
    }
  }
  sol.n_int = 0;
  for (double v : counts) sol.n_int += static_cast<long long>(v);
  sol.S.reset();
  sol.s_int = counts;
  return sol;
}

// ---------------------------------------------------------------------------
// Exponential / Poisson (scalar stats, Gamma conjugate)
// ---------------------------------------------------------------------------

template <class ScalarModel>
inline Step1Solution solve_step1_scalar(const ScalarModel& model, const ConjugateHyper& hyper,
                                        const NaturalParam& target, const EffortSpec& effort,
                                        const SolverOptions& opt) {
  auto f = [&](const Vec& z) {
    try {
      return step1_objective(model, hyper, target, effort, AggregateStats{z[0], {z[1]}});
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto g = [&](const Vec& z) {
    const Vec gs = step1_gradient(model, hyper, target, effort, AggregateStats{z[0], {z[1]}});
    return Vec{gs[1], gs[0]};
  };
  auto proj = [](Vec& z) {
    z[0] = std::max(z[0], 0.0);
    z[1] = std::max(z[1], 0.0);
  };
  PgdResult r = projected_gradient(Vec{1.0, 1.0}, f, g, proj, opt);

  auto objective_at = [&](long long n) {
    auto pin = [&, n](Vec& z) {
      z[0] = static_cast<double>(n);
      z[1] = std::max(z[1], 0.0);
    };
    PgdResult rn = projected_gradient(Vec{static_cast<double>(n), r.z[1]}, f, g, pin, opt);
    return rn.value;
  };

  Step1Solution sol;
  sol.n_relaxed = r.z[0];
  sol.s = {r.z[1]};
  sol.n_int = integerize_n(objective_at, sol.n_relaxed, opt.integer_neighborhood);
  sol.objective_at_opt = r.value;
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  return sol;
}

inline Step1Solution solve_step1(const ExponentialModel& model, double prior_a, double prior_b,
                                 double rate_star, const EffortSpec& effort,
                                 const SolverOptions& opt) {
  return solve_step1_scalar(model, model.hyper_of_gamma(prior_a, prior_b),
                            model.natural_of_rate(rate_star), effort, opt);
}

inline Step1Solution solve_step1(const PoissonModel& model, double prior_a, double prior_b,
                                 double mean_star, const EffortSpec& effort,
                                 const SolverOptions& opt) {
  return solve_step1_scalar(model, model.hyper_of_gamma(prior_a, prior_b),
                            model.natural_of_mean(mean_star), effort, opt);
}

// ---------------------------------------------------------------------------
// NIW: z = [n, s(D), packed upper triangle of S]. Projection clips S to the
// PSD cone by eigenvalue truncation, then lifts diagonals onto the ridge
// S_ii >= s_i^2 / n.
// ---------------------------------------------------------------------------

namespace detail {

inline int niw_dim(int d) { return 1 + d + d * (d + 1) / 2; }

inline NIWStats niw_unpack_z(const Vec& z, int d) {
  NIWStats st;
  st.n = z[0];
  st.s.assign(z.begin() + 1, z.begin() + 1 + d);
  st.S = SymMatrix(d);
  int idx = 1 + d;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) st.S.set(i, j, z[idx++]);
  return st;
}

inline Vec niw_pack_z(const NIWStats& st, int d) {
  Vec z(niw_dim(d));
  z[0] = st.n;
  for (int i = 0; i < d; ++i) z[1 + i] = st.s[i];
  int idx = 1 + d;
  for (int i = 0; i < d; ++i)
    for (int j = i; j < d; ++j) z[idx++] = st.S(i, j);
  return z;
}

inline void niw_project(Vec& z, int d, bool ridge_div2) {
  z[0] = std::max(z[0], 0.0);
  NIWStats st = niw_unpack_z(z, d);
  if (st.n <= 1e-12) {
    // only the empty teaching set has zero cardinality
    std::fill(z.begin(), z.end(), 0.0);
    return;
  }
  st.S = project_psd(st.S);
  for (int i = 0; i < d; ++i) {
    const double lo = (ridge_div2 ? st.s[i] * st.s[i] / 2.0 : st.s[i] * st.s[i] / st.n) + 1e-10;
    if (st.S(i, i) < lo) st.S.set(i, i, lo);
  }
  z = niw_pack_z(st, d);
}

}  // namespace detail

inline Step1Solution solve_step1(const NIWModel& model, const NIWTarget& target,
                                 const EffortSpec& effort, const SolverOptions& opt) {
  const int d = model.D;
  auto f = [&](const Vec& z) {
    try {
      return niw_step1_objective(model, target, effort, detail::niw_unpack_z(z, d));
    } catch (const NotPositiveDefinite&) {
      return std::numeric_limits<double>::infinity();
    } catch (const DomainError&) {
      return std::numeric_limits<double>::infinity();
    }
  };
  auto g = [&](const Vec& z) {
    const NIWStats st = detail::niw_unpack_z(z, d);
    const NIWGradient gr = niw_step1_gradient(model, target, effort, st);
    Vec out(detail::niw_dim(d));
    out[0] = gr.dn;
    for (int i = 0; i < d; ++i) out[1 + i] = gr.ds[i];
    int idx = 1 + d;
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) out[idx++] = (i == j) ? gr.dS(i, i) : 2.0 * gr.dS(i, j);
    return out;
  };
  auto proj = [&](Vec& z) { detail::niw_project(z, d, opt.ridge_div2); };

  NIWStats init;
  init.n = d + 1.0;
  init.s.assign(d, 0.0);
  init.S = (d + 1.0) * SymMatrix::identity(d);
  PgdResult r = projected_gradient(detail::niw_pack_z(init, d), f, g, proj, opt);

  auto objective_at = [&](long long n) {
    if (n == 0) {
      NIWStats empty{0.0, Vec(d, 0.0), SymMatrix(d)};
      return niw_step1_objective(model, target, effort, empty);
    }
    auto pin = [&, n](Vec& z) {
      z[0] = static_cast<double>(n);
      detail::niw_project(z, d, opt.ridge_div2);
      z[0] = static_cast<double>(n);
    };
    Vec z0 = r.z;
    z0[0] = static_cast<double>(n);
    PgdResult rn = projected_gradient(std::move(z0), f, g, pin, opt);
    return rn.value;
  };

  const NIWStats st = detail::niw_unpack_z(r.z, d);
  Step1Solution sol;
  sol.n_relaxed = st.n;
  sol.s = st.s;
  sol.S = st.S;
  sol.n_int = integerize_n(objective_at, sol.n_relaxed, opt.integer_neighborhood);
  sol.objective_at_opt = r.value;
  sol.iterations = r.iterations;
  sol.converged = r.converged;
  return sol;
}

// ---------------------------------------------------------------------------
// Unpacking aggregate statistics into concrete examples
// ---------------------------------------------------------------------------

// Scalar T(x) = x: n identical examples s/n match the statistics exactly.
inline UnpackResult unpack_equal_split(long long n, double s) {
  UnpackResult r;
  if (n <= 0) return r;
  r.set.examples.assign(n, Vec{s / static_cast<double>(n)});
  return r;
}

// Nonnegative-integer domain: equal split, rounded, then adjusted so the
// items still sum to the rounded target.
inline UnpackResult unpack_integer_sum(long long n, double s) {
  UnpackResult r;
  if (n <= 0) return r;
  const long long total = std::llround(s);
  const long long base = total / n;
  long long rem = total - base * n;
  r.set.examples.assign(n, Vec{static_cast<double>(base)});
  for (long long i = 0; i < rem; ++i) r.set.examples[i][0] += 1.0;
  r.residual = std::abs(static_cast<double>(total) - s);
  return r;
}

// Category counts expand into 1-based category items.
inline UnpackResult unpack_counts(const Vec& counts) {
  UnpackResult r;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const long long c = std::llround(counts[k]);
    for (long long i = 0; i < c; ++i) r.set.examples.push_back(Vec{static_cast<double>(k + 1)});
  }
  return r;
}

// T(x) = (x, x x^T): examples are seeded iid from the target Gaussian and
// improved by gradient descent on the squared statistics mismatch
//   || s - sum x_i ||^2 + || S - sum x_i x_i^T ||_F^2,
// best of unpack_restarts runs. Non-convex, so restarts matter.
inline UnpackResult unpack_niw(const NIWModel& model, const NIWTarget& target, long long n,
                               const Vec& s_target, const SymMatrix& S_target,
                               const SolverOptions& opt) {
  UnpackResult best;
  if (n <= 0) return best;
  const int d = model.D;
  const Vec chol_sigma = cholesky(target.sigma_star);
  best.residual = std::numeric_limits<double>::infinity();

  const int restarts = std::max(1, opt.unpack_restarts);
  for (int restart = 0; restart < restarts; ++restart) {
    Rng rng(mix_seed(opt.seed, 0x756e7061636bULL + restart));
    std::vector<Vec> x(n, Vec(d, 0.0));
    for (auto& xi : x) {
      Vec zraw(d);
      for (int i = 0; i < d; ++i) zraw[i] = rng.normal();
      for (int i = 0; i < d; ++i) {
        double acc = target.mu_star[i];
        for (int j = 0; j <= i; ++j) acc += chol_sigma[i * d + j] * zraw[j];
        xi[i] = acc;
      }
    }

    auto residual_parts = [&](const std::vector<Vec>& pts, Vec& rs, SymMatrix& RS) {
      rs = s_target;
      RS = S_target;
      for (const auto& p : pts) {
        for (int i = 0; i < d; ++i) rs[i] -= p[i];
        for (int i = 0; i < d; ++i)
          for (int j = i; j < d; ++j) RS.add(i, j, -p[i] * p[j]);
      }
    };
    auto objective = [&](const std::vector<Vec>& pts) {
      Vec rs;
      SymMatrix RS;
      residual_parts(pts, rs, RS);
      double v = dot(rs, rs);
      for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) v += RS(i, j) * RS(i, j);
      return v;
    };

    double fx = objective(x);
    double step = 0.05;
    for (int it = 0; it < 20000 && fx > 1e-18; ++it) {
      Vec rs;
      SymMatrix RS;
      residual_parts(x, rs, RS);
      std::vector<Vec> grad(n, Vec(d));
      for (long long j = 0; j < n; ++j) {
        const Vec rsx = RS.mul(x[j]);
        for (int i = 0; i < d; ++i) grad[j][i] = -2.0 * rs[i] - 4.0 * rsx[i];
      }
      bool accepted = false;
      for (double t = step; t >= 1e-20; t *= 0.5) {
        std::vector<Vec> xt(n, Vec(d));
        for (long long j = 0; j < n; ++j)
          for (int i = 0; i < d; ++i) xt[j][i] = x[j][i] - t * grad[j][i];
        const double ft = objective(xt);
        if (ft < fx) {
          x = std::move(xt);
          fx = ft;
          step = t * 2.0;
          accepted = true;
          break;
        }
      }
      if (!accepted) break;
    }

    const double res = std::sqrt(fx);
    if (res < best.residual) {
      best.residual = res;
      best.set.examples = x;
    }
  }
  best.ok = best.residual <= 1e-6;
  return best;
}

}  // namespace teachopt

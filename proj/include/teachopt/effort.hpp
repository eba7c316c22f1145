#pragma once

#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "teachopt/errors.hpp"
#include "teachopt/numerics.hpp"

namespace teachopt {

// Effort that is a function of the raw examples (not of (n, s)) can only be
// used by the closed-form teachers.
class AnalyticOnlyEffort : public std::logic_error {
 public:
  explicit AnalyticOnlyEffort(const std::string& what) : std::logic_error(what) {}
};

class NonDifferentiableEffort : public std::logic_error {
 public:
  explicit NonDifferentiableEffort(const std::string& what) : std::logic_error(what) {}
};

enum class EffortKind { Zero, PerItem, LinearInStats, RangeBox, MinSeparation };

struct EffortSpec {
  EffortKind kind = EffortKind::Zero;
  double c = 0.0;    // PerItem / MinSeparation per-item or separation cost
  Vec weights;       // LinearInStats
  double d = 0.0;    // RangeBox half-width

  static EffortSpec zero() { return {}; }
  static EffortSpec per_item(double c) {
    if (c <= 0.0) throw DomainError("per_item effort: c must be positive");
    return {EffortKind::PerItem, c, {}, 0.0};
  }
  static EffortSpec linear_in_stats(Vec w) {
    for (double x : w)
      if (x < 0.0) throw DomainError("linear_in_stats effort: weights must be nonnegative");
    return {EffortKind::LinearInStats, 0.0, std::move(w), 0.0};
  }
  static EffortSpec range_box(double d) {
    if (d <= 0.0) throw DomainError("range_box effort: d must be positive");
    return {EffortKind::RangeBox, 0.0, {}, d};
  }
  static EffortSpec min_separation(double c) {
    if (c <= 0.0) throw DomainError("min_separation effort: c must be positive");
    return {EffortKind::MinSeparation, c, {}, 0.0};
  }
};

inline double effort_value(const EffortSpec& spec, double n, std::span<const double> s) {
  if (n < 0.0) throw DomainError("effort_value: negative cardinality");
  switch (spec.kind) {
    case EffortKind::Zero:
      return 0.0;
    case EffortKind::PerItem:
      return spec.c * n;
    case EffortKind::LinearInStats: {
      if (spec.weights.size() != s.size())
        throw DomainError("effort_value: weight/stat dimension mismatch");
      return dot(spec.weights, s);
    }
    case EffortKind::RangeBox: {
      // Feasibility |x_i| <= d is enforced by the solver's box projection;
      // a violated aggregate ( |s| > d n is impossible for compliant items )
      // is flagged as infinite here.
      for (double v : s)
        if (std::abs(v) > spec.d * n + 1e-9) return std::numeric_limits<double>::infinity();
      return 0.0;
    }
    case EffortKind::MinSeparation:
      throw AnalyticOnlyEffort("min_separation effort depends on raw examples, not (n, s)");
  }
  return 0.0;
}

struct EffortGradient {
  double dn = 0.0;
  Vec ds;
};

inline EffortGradient effort_gradient(const EffortSpec& spec, double n,
                                      std::span<const double> s) {
  if (n < 0.0) throw DomainError("effort_gradient: negative cardinality");
  EffortGradient g;
  g.ds.assign(s.size(), 0.0);
  switch (spec.kind) {
    case EffortKind::Zero:
      return g;
    case EffortKind::PerItem:
      g.dn = spec.c;
      return g;
    case EffortKind::LinearInStats:
      if (spec.weights.size() != s.size())
        throw DomainError("effort_gradient: weight/stat dimension mismatch");
      g.ds = spec.weights;
      return g;
    case EffortKind::RangeBox:
      return g;  // zero on the feasible interior; the boundary is the projection's job
    case EffortKind::MinSeparation:
      throw AnalyticOnlyEffort("min_separation effort has no (n, s) gradient");
  }
  return g;
}

}  // namespace teachopt

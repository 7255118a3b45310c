#pragma once

// Margin moments, C-bounds, the Gibbs bound, and the PAC-Bayesian bound on
// the risk of a weighted majority vote.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cbound/ensemble.hpp"
#include "cbound/error.hpp"
#include "cbound/margin.hpp"
#include "cbound/output_space.hpp"
#include "cbound/summation.hpp"

namespace cbound {

/// Which margin a set of moments was taken over.
struct MarginKind {
  bool is_omega = false;
  double omega = 0.0;

  static MarginKind true_margin() { return {}; }
  static MarginKind omega_margin(double w) {
    if (!(w >= 0.0 && w <= 1.0)) fail(ErrorCategory::InvalidParameter, "omega must lie in [0,1], got " + std::to_string(w));
    return {true, w};
  }

  friend bool operator==(const MarginKind&, const MarginKind&) = default;
};

inline double margin(const WeightedEnsemble& e, std::span<const double> x, const Label& y) {
  e.space().check(y);
  return margin_of(e.space(), aggregate(e, x), y);
}

inline double omega_margin(const WeightedEnsemble& e, std::span<const double> x, const Label& y, double omega) {
  const auto kind = MarginKind::omega_margin(omega);
  e.space().check(y);
  return omega_margin_of(e.space(), aggregate(e, x), y, kind.omega);
}

inline double margin_value(const OutputSpace& space, std::span<const double> g, const Label& y, MarginKind kind) {
  return kind.is_omega ? omega_margin_of(space, g, y, kind.omega) : margin_of(space, g, y);
}

/// Default B, a uniform bound on |margin| for the space and margin kind.
///   true margin:  1 for multiclass (g lives in the simplex), 2 otherwise
///   omega-margin: max(omega, 1-omega) for multiclass, 1+omega otherwise
inline double default_margin_bound(const OutputSpace& space, MarginKind kind) {
  const bool multiclass = space.kind() == SpaceKind::Multiclass;
  if (!kind.is_omega) return multiclass ? 1.0 : 2.0;
  return multiclass ? std::max(kind.omega, 1.0 - kind.omega) : 1.0 + kind.omega;
}

struct MarginMoments {
  double mu1 = 0.0;  ///< E M
  double mu2 = 0.0;  ///< E M^2
  MarginKind kind;
  std::size_t m = 0;
};

inline MarginMoments moments(const AggregatedVotes& votes, const LabeledDataset& data, MarginKind kind) {
  if (votes.size() != data.size()) fail(ErrorCategory::DimensionMismatch, "votes and dataset sizes differ");
  CompensatedSum s1, s2;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double v = margin_value(data.space(), votes.row(i), data.label(i), kind);
    s1 += v;
    s2 += v * v;
  }
  const double m = static_cast<double>(data.size());
  return {s1.value() / m, s2.value() / m, kind, data.size()};
}

inline MarginMoments moments(const WeightedEnsemble& e, const LabeledDataset& data, MarginKind kind) {
  return moments(aggregate_all(e, data), data, kind);
}

/// 1 - mu1^2 / mu2. Requires mu1 > 0.
inline double c_bound(double mu1, double mu2) {
  if (!(mu1 > 0.0)) fail(ErrorCategory::BoundUndefined, "C-bound needs a positive first margin moment, got " + std::to_string(mu1));
  if (!(mu2 > 0.0)) fail(ErrorCategory::Inconsistency, "second margin moment is zero while the first is positive");
  // mu2 >= mu1^2 in exact arithmetic; rounding can push the ratio past 1.
  return std::clamp(1.0 - (mu1 * mu1) / mu2, 0.0, 1.0);
}

inline double c_bound(const MarginMoments& mm) { return c_bound(mm.mu1, mm.mu2); }

inline std::optional<double> try_c_bound(const MarginMoments& mm) {
  if (!(mm.mu1 > 0.0)) return std::nullopt;
  return c_bound(mm);
}

inline double gibbs_bound_from_risk(double gibbs) { return std::clamp(2.0 * gibbs, 0.0, 1.0); }

inline double gibbs_bound(const WeightedEnsemble& e, const LabeledDataset& data) {
  return gibbs_bound_from_risk(gibbs_risk(e, data));
}

/// Smallest omega at which the omega-margin is a valid surrogate, i.e.
/// M_omega > 0 implies M > 0 for every aggregate in the hull.
inline double omega_validity_threshold(const OutputSpace& space) {
  switch (space.kind()) {
    case SpaceKind::Multiclass: return 0.5;
    case SpaceKind::Multilabel: return (static_cast<double>(space.q()) - 1.0) / static_cast<double>(space.q());
    case SpaceKind::Binary: return 1.0;
  }
  return 1.0;
}

inline bool omega_is_valid_risk_bound(const OutputSpace& space, double omega) {
  return omega >= omega_validity_threshold(space) - 1e-15;
}

struct OmegaCBound {
  double omega = 0.0;
  double value = 1.0;
  bool is_valid_risk_bound = false;
};

inline OmegaCBound omega_c_bound(const MarginMoments& mm, const OutputSpace& space) {
  if (!mm.kind.is_omega) fail(ErrorCategory::InvalidParameter, "omega C-bound needs omega-margin moments");
  if (!(mm.mu1 > 0.0)) {
    fail(ErrorCategory::BoundUndefined, "omega-margin first moment is " + std::to_string(mm.mu1) + " at omega=" + std::to_string(mm.kind.omega));
  }
  return {mm.kind.omega, c_bound(mm), omega_is_valid_risk_bound(space, mm.kind.omega)};
}

inline OmegaCBound omega_c_bound(const WeightedEnsemble& e, const LabeledDataset& data, double omega) {
  return omega_c_bound(moments(e, data, MarginKind::omega_margin(omega)), e.space());
}

/// KL(rho || pi) with 0 ln 0 = 0; +inf when rho puts mass where pi has none.
inline double kl_divergence(std::span<const double> rho, std::span<const double> pi) {
  if (rho.size() != pi.size()) fail(ErrorCategory::DimensionMismatch, "rho and pi have different lengths");
  check_distribution(rho, "rho");
  check_distribution(pi, "pi");
  CompensatedSum s;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] == 0.0) continue;
    if (pi[i] == 0.0) return std::numeric_limits<double>::infinity();
    s += rho[i] * std::log(rho[i] / pi[i]);
  }
  return std::max(0.0, s.value());
}

namespace detail {

inline void check_pac_parameters(std::size_t m, double b, double kl, double delta) {
  if (m < 1) fail(ErrorCategory::InvalidParameter, "sample size must be at least 1");
  if (!(b > 0.0 && b <= 2.0)) fail(ErrorCategory::InvalidParameter, "B must lie in (0,2], got " + std::to_string(b));
  if (!(delta > 0.0 && delta <= 1.0)) fail(ErrorCategory::InvalidParameter, "delta must lie in (0,1], got " + std::to_string(delta));
  if (!(kl >= 0.0)) fail(ErrorCategory::InvalidParameter, "KL must be nonnegative");
}

inline double log_confidence(std::size_t m, double delta) {
  return std::log(2.0 * std::sqrt(static_cast<double>(m)) / delta);
}

}  // namespace detail

/// Lower confidence bound on the true first margin moment:
///   mu1 - sqrt( (2B/m) [KL + ln(2 sqrt(m) / delta)] )
inline double pac_first_moment_lower(double mu1_emp, std::size_t m, double b, double kl, double delta) {
  detail::check_pac_parameters(m, b, kl, delta);
  if (std::isinf(kl)) return -std::numeric_limits<double>::infinity();
  const double dev = std::sqrt(2.0 * b / static_cast<double>(m) * (kl + detail::log_confidence(m, delta)));
  return mu1_emp - dev;
}

/// Upper confidence bound on the true second margin moment; the KL term is
/// doubled because the second moment is an expectation over voter pairs.
///   mu2 + sqrt( (2B^2/m) [2 KL + ln(2 sqrt(m) / delta)] )
inline double pac_second_moment_upper(double mu2_emp, std::size_t m, double b, double kl, double delta) {
  detail::check_pac_parameters(m, b, kl, delta);
  if (std::isinf(kl)) return std::numeric_limits<double>::infinity();
  const double dev = std::sqrt(2.0 * b * b / static_cast<double>(m) * (2.0 * kl + detail::log_confidence(m, delta)));
  return mu2_emp + dev;
}

struct PacBound {
  double lower = 0.0;  ///< first-moment bound before clamping
  double upper = 0.0;  ///< second-moment bound before clamping
  double value = 1.0;
  double kl = 0.0;
  double b = 2.0;
  double delta = 0.05;
  std::size_t m = 0;
};

/// 1 - max(0, lower)^2 / min(1, upper) with each moment bound taken at
/// confidence delta/2, so both hold together with probability 1 - delta.
inline PacBound pac_c_bound(double mu1_emp, double mu2_emp, std::size_t m, double b, double kl, double delta) {
  detail::check_pac_parameters(m, b, kl, delta);
  PacBound out;
  out.kl = kl;
  out.b = b;
  out.delta = delta;
  out.m = m;
  out.lower = pac_first_moment_lower(mu1_emp, m, b, kl, delta / 2.0);
  out.upper = pac_second_moment_upper(mu2_emp, m, b, kl, delta / 2.0);
  const double lo = std::max(0.0, out.lower);
  const double hi = std::min(1.0, out.upper);
  if (lo == 0.0 || !(hi > 0.0)) {
    out.value = 1.0;
  } else {
    out.value = std::clamp(1.0 - lo * lo / hi, 0.0, 1.0);
  }
  return out;
}

inline PacBound pac_c_bound(const WeightedEnsemble& e, const LabeledDataset& data, std::span<const double> pi, double delta,
                            std::optional<double> b = std::nullopt) {
  const auto mm = moments(e, data, MarginKind::true_margin());
  const double kl = kl_divergence(e.rho(), pi);
  return pac_c_bound(mm.mu1, mm.mu2, data.size(), b.value_or(default_margin_bound(e.space(), mm.kind)), kl, delta);
}

/// omega = constant + per_q / Q, so one spec covers datasets of any Q.
struct OmegaSpec {
  double constant = 0.0;
  double per_q = 0.0;
  std::string text;

  double evaluate(std::size_t q) const { return constant + per_q / static_cast<double>(q); }
};

/// Parses "1/2", "1/Q", "1/3+1/(3Q)", "1/6+2/(3Q)", "0.25", "2/(3Q)+0.1" ...
inline OmegaSpec parse_omega(const std::string& text) {
  OmegaSpec spec;
  spec.text = text;
  std::string s;
  for (char c : text) {
    if (!std::isspace(static_cast<unsigned char>(c))) s += c;
  }
  if (s.empty()) fail(ErrorCategory::Parse, "empty omega expression");
  auto number = [&](const std::string& t) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
      v = std::stod(t, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos != t.size() || t.empty()) fail(ErrorCategory::Parse, "bad number '" + t + "' in omega expression '" + text + "'");
    return v;
  };
  std::size_t start = 0;
  while (start <= s.size()) {
    auto plus = s.find('+', start);
    std::string term = s.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
    if (term.empty()) fail(ErrorCategory::Parse, "empty term in omega expression '" + text + "'");
    auto slash = term.find('/');
    if (slash == std::string::npos) {
      if (term == "Q") fail(ErrorCategory::Parse, "omega term Q is not in [0,1]");
      spec.constant += number(term);
    } else {
      const double num = number(term.substr(0, slash));
      std::string den = term.substr(slash + 1);
      if (den.size() >= 2 && den.front() == '(' && den.back() == ')') den = den.substr(1, den.size() - 2);
      if (!den.empty() && den.back() == 'Q') {
        const std::string coeff = den.substr(0, den.size() - 1);
        spec.per_q += num / (coeff.empty() ? 1.0 : number(coeff));
      } else {
        spec.constant += num / number(den);
      }
    }
    if (plus == std::string::npos) break;
    start = plus + 1;
  }
  if (!std::isfinite(spec.constant) || !std::isfinite(spec.per_q)) {
    fail(ErrorCategory::Parse, "omega expression '" + text + "' divides by zero");
  }
  return spec;
}

/// Omega values reported by default: 1/2, 1/3+1/(3Q), 1/6+2/(3Q), 1/Q.
inline std::vector<OmegaSpec> default_omegas() {
  return {parse_omega("1/2"), parse_omega("1/3+1/(3Q)"), parse_omega("1/6+2/(3Q)"), parse_omega("1/Q")};
}

struct OmegaReport {
  std::string label;
  MarginMoments moments;
  std::optional<double> value;  ///< absent when the first moment is <= 0
  bool is_valid_risk_bound = false;

  double reported() const { return value.value_or(1.0); }
};

struct BoundReport {
  OutputSpace space;
  std::size_t m = 0;               ///< evaluation sample size
  double risk_test = 0.0;          ///< majority-vote risk, tie-broken prediction
  double risk_margin_rule = 0.0;   ///< fraction of margins <= 0
  double gibbs_risk = 0.0;
  double gibbs_bound = 0.0;
  MarginMoments moments;
  std::optional<double> c_bound;   ///< absent when mu1 <= 0
  std::vector<OmegaReport> omegas;
  std::optional<PacBound> pac;
  double delta = 0.05;

  double c_bound_reported() const { return c_bound.value_or(1.0); }
};

struct BoundOptions {
  std::vector<OmegaSpec> omegas = default_omegas();
  double delta = 0.05;
  std::optional<double> b;  ///< overrides default_margin_bound for the PAC bound
  bool with_pac = true;
};

/// Every quantity of a report from precomputed aggregated votes.
/// `pac_sample` is the sample the PAC bound is taken over (often a training set).
inline BoundReport make_bound_report(const WeightedEnsemble& e, const LabeledDataset& eval, const AggregatedVotes& eval_votes,
                                     const LabeledDataset* pac_sample, const AggregatedVotes* pac_votes,
                                     const BoundOptions& opt) {
  BoundReport r;
  r.space = e.space();
  r.m = eval.size();
  r.delta = opt.delta;
  r.risk_test = risk(eval_votes, eval, RiskRule::PredictRule);
  r.risk_margin_rule = risk(eval_votes, eval, RiskRule::MarginRule);
  r.gibbs_risk = gibbs_risk(e, eval);
  r.gibbs_bound = gibbs_bound_from_risk(r.gibbs_risk);
  r.moments = moments(eval_votes, eval, MarginKind::true_margin());
  r.c_bound = try_c_bound(r.moments);
  for (const auto& spec : opt.omegas) {
    OmegaReport o;
    o.label = spec.text;
    o.moments = moments(eval_votes, eval, MarginKind::omega_margin(spec.evaluate(e.space().q())));
    if (o.moments.mu1 > 0.0) o.value = c_bound(o.moments);
    o.is_valid_risk_bound = omega_is_valid_risk_bound(e.space(), o.moments.kind.omega);
    r.omegas.push_back(std::move(o));
  }
  if (opt.with_pac && pac_sample && pac_votes) {
    std::vector<double> pi = e.pi().value_or(std::vector<double>(e.size(), 1.0 / static_cast<double>(e.size())));
    const auto mm = moments(*pac_votes, *pac_sample, MarginKind::true_margin());
    const double b = opt.b.value_or(default_margin_bound(e.space(), mm.kind));
    r.pac = pac_c_bound(mm.mu1, mm.mu2, pac_sample->size(), b, kl_divergence(e.rho(), pi), opt.delta);
  }
  return r;
}

inline BoundReport make_bound_report(const WeightedEnsemble& e, const LabeledDataset& eval, const LabeledDataset* pac_sample,
                                     const BoundOptions& opt = {}) {
  const auto ev = aggregate_all(e, eval);
  if (pac_sample) {
    const auto pv = aggregate_all(e, *pac_sample);
    return make_bound_report(e, eval, ev, pac_sample, &pv, opt);
  }
  return make_bound_report(e, eval, ev, nullptr, nullptr, opt);
}

}  // namespace cbound

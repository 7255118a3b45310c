#pragma once

// Brute-force and Monte-Carlo checks of the margin bounds. Margins and
// moments here are recomputed with plain loops over explicitly enumerated
// outputs; nothing below calls into the margin or moment code it checks,
// except where a suite compares the two paths on purpose.

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "cbound/bounds.hpp"
#include "cbound/ensemble.hpp"
#include "cbound/error.hpp"
#include "cbound/output_space.hpp"
#include "cbound/studies.hpp"

namespace cbound::oracle {

struct Atom {
  std::vector<double> x;
  Label label;
  double p = 0.0;
};

class FiniteDistribution {
 public:
  FiniteDistribution(OutputSpace space, std::vector<Atom> atoms) : space_(space), atoms_(std::move(atoms)) {
    if (atoms_.empty()) fail(ErrorCategory::EmptyDataset, "finite distribution needs at least one atom");
    double s = 0.0;
    for (const auto& a : atoms_) {
      if (!(a.p >= 0.0) || !std::isfinite(a.p)) fail(ErrorCategory::InvalidParameter, "atom probabilities must be nonnegative");
      space_.check(a.label);
      s += a.p;
    }
    if (std::abs(s - 1.0) > 1e-12) fail(ErrorCategory::InvalidParameter, "atom probabilities must sum to 1");
  }

  /// Every example of `data` with mass 1/m.
  static FiniteDistribution uniform(const LabeledDataset& data) {
    std::vector<Atom> atoms;
    const double p = 1.0 / static_cast<double>(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
      auto r = data.row(i);
      atoms.push_back({std::vector<double>(r.begin(), r.end()), data.label(i), p});
    }
    return FiniteDistribution(data.space(), std::move(atoms));
  }

  const OutputSpace& space() const noexcept { return space_; }
  const std::vector<Atom>& atoms() const noexcept { return atoms_; }
  std::size_t size() const noexcept { return atoms_.size(); }

  /// m i.i.d. draws.
  template <class Rng>
  LabeledDataset sample(std::size_t m, Rng& rng) const {
    std::vector<double> w;
    for (const auto& a : atoms_) w.push_back(a.p);
    std::discrete_distribution<std::size_t> pick(w.begin(), w.end());
    const std::size_t d = atoms_[0].x.size();
    std::vector<double> features;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < m; ++i) {
      const auto& a = atoms_[pick(rng)];
      features.insert(features.end(), a.x.begin(), a.x.end());
      labels.push_back(a.label);
    }
    return LabeledDataset(space_, d, std::move(features), std::move(labels));
  }

 private:
  OutputSpace space_;
  std::vector<Atom> atoms_;
};

// ---------------------------------------------------------------- naive paths

namespace naive {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline std::vector<double> aggregate(const WeightedEnsemble& e, const std::vector<double>& x) {
  std::vector<double> g(e.space().dim(), 0.0);
  for (std::size_t k = 0; k < e.size(); ++k) {
    const auto out = e.voter(k).vote(x);
    for (std::size_t j = 0; j < g.size(); ++j) g[j] += e.rho()[k] * out[j];
  }
  return g;
}

/// <g, Y(y)> - max over every other enumerated output.
inline double margin(const std::vector<EmbeddedLabel>& outputs, const std::vector<double>& g, const Label& y) {
  double own = 0.0, best = -std::numeric_limits<double>::infinity();
  for (const auto& o : outputs) {
    const double s = dot(g, o.vector);
    if (o.label == y) {
      own = s;
    } else {
      best = std::max(best, s);
    }
  }
  return own - best;
}

inline double omega_margin(const OutputSpace& space, const std::vector<double>& g, const Label& y, double omega) {
  return dot(g, space.embed(y)) - omega;
}

/// Highest-scoring output, first in canonical order on ties.
inline Label vote(const std::vector<EmbeddedLabel>& outputs, const std::vector<double>& g) {
  std::size_t best = 0;
  double best_s = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < outputs.size(); ++i) {
    const double s = dot(g, outputs[i].vector);
    if (s > best_s) {
      best_s = s;
      best = i;
    }
  }
  return outputs[best].label;
}

inline double kl(const std::vector<double>& rho, const std::vector<double>& pi) {
  double s = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] == 0.0) continue;
    if (pi[i] == 0.0) return std::numeric_limits<double>::infinity();
    s += rho[i] * std::log(rho[i] / pi[i]);
  }
  return std::max(0.0, s);
}

}  // namespace naive

// ---------------------------------------------------------------- exact quantities

struct ExactQuantities {
  double risk = 0.0;          ///< P(M <= 0)
  double predict_risk = 0.0;  ///< P(vote != y) with canonical tie-breaking
  double mu1 = 0.0;
  double mu2 = 0.0;
  std::vector<double> omegas;
  std::vector<double> omega_mu1;
  std::vector<double> omega_mu2;
  std::vector<double> omega_risk;  ///< P(M_omega <= 0)
};

inline ExactQuantities exact_quantities(const WeightedEnsemble& e, const FiniteDistribution& d,
                                        const std::vector<double>& omegas = {}) {
  if (!(e.space() == d.space())) fail(ErrorCategory::DimensionMismatch, "ensemble and distribution spaces differ");
  const auto outputs = d.space().enumerate();
  ExactQuantities q;
  q.omegas = omegas;
  q.omega_mu1.assign(omegas.size(), 0.0);
  q.omega_mu2.assign(omegas.size(), 0.0);
  q.omega_risk.assign(omegas.size(), 0.0);
  for (const auto& a : d.atoms()) {
    const auto g = naive::aggregate(e, a.x);
    const double m = naive::margin(outputs, g, a.label);
    q.mu1 += a.p * m;
    q.mu2 += a.p * m * m;
    if (m <= 0.0) q.risk += a.p;
    if (!(naive::vote(outputs, g) == a.label)) q.predict_risk += a.p;
    for (std::size_t k = 0; k < omegas.size(); ++k) {
      const double mw = naive::omega_margin(d.space(), g, a.label, omegas[k]);
      q.omega_mu1[k] += a.p * mw;
      q.omega_mu2[k] += a.p * mw * mw;
      if (mw <= 0.0) q.omega_risk[k] += a.p;
    }
  }
  return q;
}

// ---------------------------------------------------------------- sandwich

struct SandwichVerdict {
  double lower = 0.0;  ///< P(M_{1/Q} <= 0), multiclass only
  double risk = 0.0;   ///< P(M <= 0)
  double upper = 0.0;  ///< P(M_{1/2} <= 0) multiclass, P(M_{(Q-1)/Q} <= 0) multilabel
  double omega_lower = 0.0;
  double omega_upper = 0.0;
  bool holds = true;
};

inline SandwichVerdict check_sandwich(const WeightedEnsemble& e, const FiniteDistribution& d, double tol = 1e-12) {
  const auto& s = d.space();
  const double q = static_cast<double>(s.q());
  SandwichVerdict v;
  if (s.kind() == SpaceKind::Multiclass) {
    v.omega_lower = 1.0 / q;
    v.omega_upper = 0.5;
    const auto eq = exact_quantities(e, d, {v.omega_lower, v.omega_upper});
    v.lower = eq.omega_risk[0];
    v.risk = eq.risk;
    v.upper = eq.omega_risk[1];
    v.holds = v.lower <= v.risk + tol && v.risk <= v.upper + tol;
  } else if (s.kind() == SpaceKind::Multilabel) {
    v.omega_upper = (q - 1.0) / q;
    const auto eq = exact_quantities(e, d, {v.omega_upper});
    v.risk = eq.risk;
    v.upper = eq.omega_risk[0];
    v.holds = v.risk <= v.upper + tol;
  } else {
    fail(ErrorCategory::Unsupported, "sandwich check needs a multiclass or multilabel space");
  }
  return v;
}

// ---------------------------------------------------------------- change of measure

struct ChangeOfMeasureVerdict {
  double lhs = 0.0;  ///< ln E_{pi x pi} exp(phi)
  double rhs = 0.0;  ///< E_{rho x rho} phi - 2 KL(rho || pi)
  double kl = 0.0;
  bool kl_infinite = false;
  bool holds = true;
};

/// phi is row-major n x n over pairs (h, h').
inline ChangeOfMeasureVerdict check_change_of_measure(std::size_t n, const std::vector<double>& rho, const std::vector<double>& pi,
                                                      const std::vector<double>& phi, double tol = 1e-10) {
  if (rho.size() != n || pi.size() != n || phi.size() != n * n) {
    fail(ErrorCategory::DimensionMismatch, "change-of-measure inputs must be n, n and n*n long");
  }
  check_distribution(rho, "rho");
  check_distribution(pi, "pi");
  for (double v : phi) {
    if (!std::isfinite(v)) fail(ErrorCategory::InvalidParameter, "phi must be finite");
  }
  ChangeOfMeasureVerdict v;
  v.kl = naive::kl(rho, pi);
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      if (pi[i] > 0.0 && pi[j] > 0.0) mx = std::max(mx, phi[i * n + j]);
    }
  }
  double s = 0.0, e_rho = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      s += pi[i] * pi[j] * std::exp(phi[i * n + j] - mx);
      e_rho += rho[i] * rho[j] * phi[i * n + j];
    }
  }
  v.lhs = mx + std::log(s);
  if (std::isinf(v.kl)) {
    v.kl_infinite = true;
    v.rhs = -std::numeric_limits<double>::infinity();
    v.holds = true;
    return v;
  }
  v.rhs = e_rho - 2.0 * v.kl;
  v.holds = v.lhs >= v.rhs - tol;
  return v;
}

// ---------------------------------------------------------------- PAC trials

struct PacTrialConfig {
  std::size_t m = 200;
  double delta = 0.05;
  std::size_t trials = 1000;
  std::uint64_t seed = 0;
  double grid_step = 0.1;  ///< simplex grid over rho
  bool grid = true;        ///< false: check the single posterior rho = pi
  std::optional<double> b;
};

struct PacTrialResult {
  std::size_t trials = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;  ///< trials where every posterior had empirical mu1 <= 0
  std::size_t posteriors = 0;
  double frequency = 0.0;
  double min_gap = std::numeric_limits<double>::infinity();  ///< min over trials and posteriors of bound - true risk
};

/// Every rho on the grid {k * step} of the simplex over n voters; the vertices are included.
inline std::vector<std::vector<double>> simplex_grid(std::size_t n, double step) {
  const auto k = static_cast<std::size_t>(std::llround(1.0 / step));
  std::vector<std::vector<double>> out;
  std::vector<std::size_t> c(n, 0);
  auto rec = [&](auto&& self, std::size_t i, std::size_t left) -> void {
    if (i + 1 == n) {
      c[i] = left;
      std::vector<double> r(n);
      for (std::size_t j = 0; j < n; ++j) r[j] = static_cast<double>(c[j]) / static_cast<double>(k);
      out.push_back(std::move(r));
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      c[i] = v;
      self(self, i + 1, left - v);
    }
  };
  rec(rec, 0, k);
  return out;
}

/// Voters and pi are fixed before any sample is drawn. Each trial draws an
/// m-sample, evaluates the PAC bound of every grid posterior and of pi, and
/// counts the trial as a violation if any exact risk exceeds its bound.
inline PacTrialResult pac_validity_trial(const FiniteDistribution& d, const std::vector<VoterPtr>& voters,
                                         const std::vector<double>& pi, const PacTrialConfig& cfg) {
  if (cfg.trials < 1) fail(ErrorCategory::InvalidParameter, "trials must be positive");
  check_distribution(pi, "pi");
  if (pi.size() != voters.size()) fail(ErrorCategory::DimensionMismatch, "pi and voter counts differ");
  std::vector<std::vector<double>> posteriors;
  if (cfg.grid) posteriors = simplex_grid(voters.size(), cfg.grid_step);
  posteriors.push_back(pi);

  const WeightedEnsemble base(d.space(), voters, pi, pi);
  std::vector<WeightedEnsemble> ens;
  std::vector<double> true_risk;
  for (const auto& r : posteriors) {
    ens.push_back(base.with_rho(r));
    true_risk.push_back(exact_quantities(ens.back(), d).risk);
  }

  PacTrialResult res;
  res.trials = cfg.trials;
  res.posteriors = posteriors.size();
  std::vector<int> violated(cfg.trials, 0), skipped(cfg.trials, 0);
  std::vector<double> gap(cfg.trials, std::numeric_limits<double>::infinity());
  cbound::detail::parallel_for(cfg.trials, thread_count(), [&](std::size_t t) {
    std::seed_seq seq{cfg.seed, static_cast<std::uint64_t>(t)};
    std::mt19937_64 rng(seq);
    const auto sample = d.sample(cfg.m, rng);
    bool any_defined = false;
    for (std::size_t k = 0; k < ens.size(); ++k) {
      const auto pb = pac_c_bound(ens[k], sample, pi, cfg.delta, cfg.b);
      if (pb.lower > 0.0) any_defined = true;
      gap[t] = std::min(gap[t], pb.value - true_risk[k]);
      if (true_risk[k] > pb.value) violated[t] = 1;
    }
    skipped[t] = any_defined ? 0 : 1;
  });
  for (std::size_t t = 0; t < cfg.trials; ++t) {
    res.violations += static_cast<std::size_t>(violated[t]);
    res.skipped += static_cast<std::size_t>(skipped[t]);
    res.min_gap = std::min(res.min_gap, gap[t]);
  }
  res.frequency = static_cast<double>(res.violations) / static_cast<double>(res.trials);
  return res;
}

// ---------------------------------------------------------------- random instances

namespace random {

using Rng = std::mt19937_64;

inline double uniform(Rng& rng, double a = 0.0, double b = 1.0) { return std::uniform_real_distribution<double>(a, b)(rng); }

inline std::size_t integer(Rng& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

inline std::vector<double> simplex_point(Rng& rng, std::size_t n) {
  std::exponential_distribution<double> ex(1.0);
  std::vector<double> v(n);
  double s = 0.0;
  for (auto& c : v) s += (c = ex(rng));
  for (auto& c : v) c /= s;
  return v;
}

/// A point of the hull of `space`: a vertex, a sparse mixture, or an interior point.
inline std::vector<double> hull_point(Rng& rng, const OutputSpace& space) {
  const auto mode = integer(rng, 0, 3);
  const std::size_t dim = space.dim();
  switch (space.kind()) {
    case SpaceKind::Binary:
      if (mode == 0) return {uniform(rng) < 0.5 ? -1.0 : 1.0};
      if (mode == 1) return {0.0};
      return {uniform(rng, -1.0, 1.0)};
    case SpaceKind::Multiclass: {
      if (mode == 0) return space.embed(space.label_at(integer(rng, 0, dim - 1)));
      if (mode == 1) {
        // Exact tie between two classes.
        std::vector<double> v(dim, 0.0);
        const auto a = integer(rng, 0, dim - 1), b = (a + 1 + integer(rng, 0, dim - 2)) % dim;
        v[a] = v[b] = 0.5;
        return v;
      }
      return simplex_point(rng, dim);
    }
    case SpaceKind::Multilabel: {
      const double s = space.coordinate_scale();
      std::vector<double> v(dim);
      for (auto& c : v) {
        if (mode == 0) {
          c = uniform(rng) < 0.5 ? -s : s;
        } else if (mode == 1) {
          const auto r = integer(rng, 0, 2);
          c = r == 0 ? -s : (r == 1 ? 0.0 : s);
        } else {
          c = uniform(rng, -s, s);
        }
      }
      return v;
    }
  }
  return {};
}

inline Label label(Rng& rng, const OutputSpace& space) {
  if (space.kind() == SpaceKind::Multilabel) {
    std::vector<std::uint8_t> bits(space.q());
    for (auto& b : bits) b = static_cast<std::uint8_t>(integer(rng, 0, 1));
    return Label::multilabel(std::move(bits));
  }
  return space.label_at(integer(rng, 0, space.cardinality() - 1));
}

/// Voter output biased toward the embedding of `y` with probability `bias`.
inline std::vector<double> voter_output(Rng& rng, const OutputSpace& space, const Label& y, double bias) {
  if (uniform(rng) < bias) {
    const auto target = space.embed(y);
    if (uniform(rng) < 0.5) return target;
    const auto other = hull_point(rng, space);
    const double t = uniform(rng, 0.5, 1.0);
    std::vector<double> v(target.size());
    for (std::size_t j = 0; j < v.size(); ++j) v[j] = t * target[j] + (1.0 - t) * other[j];
    return v;
  }
  return hull_point(rng, space);
}

struct Instance {
  WeightedEnsemble ensemble;
  FiniteDistribution distribution;
};

/// Atoms are keyed by a single feature 0..n-1 so table voters can reach them.
inline Instance instance(Rng& rng, const OutputSpace& space, std::size_t max_atoms, std::size_t max_voters, double bias) {
  const std::size_t n = integer(rng, 1, max_atoms);
  const std::size_t v = integer(rng, 1, max_voters);
  const auto probs = simplex_point(rng, n);
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < n; ++i) atoms.push_back({{static_cast<double>(i)}, label(rng, space), probs[i]});
  std::vector<VoterPtr> voters;
  for (std::size_t k = 0; k < v; ++k) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) rows.push_back(voter_output(rng, space, atoms[i].label, bias));
    voters.push_back(std::make_shared<TableVoter>(space, std::move(rows)));
  }
  // Renormalize against rounding drift in the exponential draws.
  double s = 0.0;
  for (const auto& a : atoms) s += a.p;
  for (auto& a : atoms) a.p /= s;
  return {WeightedEnsemble(space, std::move(voters), simplex_point(rng, v)), FiniteDistribution(space, std::move(atoms))};
}

}  // namespace random

// ---------------------------------------------------------------- suites

struct SuiteResult {
  std::string name;
  std::size_t instances = 0;
  std::size_t violations = 0;
  std::size_t skipped = 0;
  double worst = 0.0;  ///< largest violation amount seen (0 when none)
  std::string first_violation;
  nlohmann::json detail = nlohmann::json::object();

  bool passed() const { return violations == 0; }
};

inline nlohmann::json to_json(const SuiteResult& r) {
  return {{"suite", r.name},        {"instances", r.instances}, {"violations", r.violations}, {"skipped", r.skipped},
          {"worst", r.worst},       {"passed", r.passed()},     {"first_violation", r.first_violation},
          {"detail", r.detail}};
}

namespace detail {

inline void record(SuiteResult& r, double excess, const std::string& what) {
  ++r.violations;
  r.worst = std::max(r.worst, excess);
  if (r.first_violation.empty()) r.first_violation = what;
}

/// Dataset with one row per atom, in atom order.
inline LabeledDataset atoms_as_dataset(const FiniteDistribution& d) {
  std::vector<double> f;
  std::vector<Label> l;
  for (const auto& a : d.atoms()) {
    f.insert(f.end(), a.x.begin(), a.x.end());
    l.push_back(a.label);
  }
  return LabeledDataset(d.space(), d.atoms()[0].x.size(), std::move(f), std::move(l));
}

}  // namespace detail

/// Binary ensembles on a uniform sample: the general C-bound against
/// 1 - E[y f]^2 / E[(y f)^2] computed from the real-valued vote y f.
inline SuiteResult binary_equivalence_suite(std::size_t instances, std::uint64_t seed, double tol = 1e-12) {
  SuiteResult r;
  r.name = "binary_equivalence";
  random::Rng rng(seed);
  const auto space = OutputSpace::binary();
  std::size_t undefined = 0;
  for (std::size_t it = 0; it < instances; ++it) {
    const std::size_t m = random::integer(rng, 1, 50);
    const std::size_t v = random::integer(rng, 1, 10);
    std::vector<double> f;
    std::vector<Label> labels;
    for (std::size_t i = 0; i < m; ++i) {
      f.push_back(static_cast<double>(i));
      labels.push_back(random::label(rng, space));
    }
    std::vector<VoterPtr> voters;
    for (std::size_t k = 0; k < v; ++k) {
      std::vector<std::vector<double>> rows;
      for (std::size_t i = 0; i < m; ++i) rows.push_back(random::voter_output(rng, space, labels[i], 0.6));
      voters.push_back(std::make_shared<TableVoter>(space, std::move(rows)));
    }
    const WeightedEnsemble e(space, voters, random::simplex_point(rng, v));
    const LabeledDataset data(space, 1, f, labels);

    double s1 = 0.0, s2 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      double yf = 0.0;
      for (std::size_t k = 0; k < v; ++k) yf += e.rho()[k] * e.voter(k).vote(data.row(i))[0];
      yf *= labels[i].sign();
      s1 += yf;
      s2 += yf * yf;
    }
    s1 /= static_cast<double>(m);
    s2 /= static_cast<double>(m);
    const auto general = try_c_bound(moments(e, data, MarginKind::true_margin()));
    ++r.instances;
    if (!(s1 > 0.0)) {
      ++undefined;
      if (general) detail::record(r, 1.0, "instance " + std::to_string(it) + ": general bound defined where the binary one is not");
      continue;
    }
    const double binary = 1.0 - s1 * s1 / s2;
    if (!general || std::abs(*general - binary) > tol) {
      detail::record(r, general ? std::abs(*general - binary) : 1.0,
                     "instance " + std::to_string(it) + ": " + (general ? format_double(*general) : "undefined") + " vs " +
                         format_double(binary));
    }
  }
  r.detail["both_undefined"] = undefined;
  return r;
}

/// Exact true risk against the exact C-bound on random multiclass
/// distributions, keeping only instances with mu1 > 0.
inline SuiteResult cbound_validity_suite(std::size_t instances, std::uint64_t seed, double tol = 1e-12) {
  SuiteResult r;
  r.name = "cbound_validity";
  random::Rng rng(seed);
  std::size_t attempts = 0;
  double tightest = std::numeric_limits<double>::infinity();
  while (r.instances < instances) {
    if (++attempts > 100 * instances) fail(ErrorCategory::Degenerate, "could not draw enough instances with mu1 > 0");
    const auto space = OutputSpace::multiclass(random::integer(rng, 2, 6));
    auto inst = random::instance(rng, space, 50, 8, 0.7);
    const auto q = exact_quantities(inst.ensemble, inst.distribution);
    if (!(q.mu1 > 0.0)) {
      ++r.skipped;
      continue;
    }
    ++r.instances;
    const double cb = c_bound(q.mu1, q.mu2);
    tightest = std::min(tightest, cb - q.risk);
    if (q.risk > cb + tol) {
      detail::record(r, q.risk - cb, "instance " + std::to_string(r.instances) + ": risk " + format_double(q.risk) +
                                         " > bound " + format_double(cb));
    }
  }
  r.detail["attempts"] = attempts;
  r.detail["min_bound_minus_risk"] = tightest;
  return r;
}

inline SuiteResult sandwich_suite(SpaceKind kind, std::size_t instances, std::uint64_t seed) {
  SuiteResult r;
  r.name = kind == SpaceKind::Multiclass ? "sandwich_multiclass" : "multilabel_risk_bound";
  random::Rng rng(seed);
  for (std::size_t it = 0; it < instances; ++it) {
    const std::size_t q = random::integer(rng, 2, 6);
    const auto space = kind == SpaceKind::Multiclass ? OutputSpace::multiclass(q) : OutputSpace::multilabel(q);
    auto inst = random::instance(rng, space, 30, 6, 0.5);
    const auto v = check_sandwich(inst.ensemble, inst.distribution);
    ++r.instances;
    if (!v.holds) {
      detail::record(r, std::max(v.lower - v.risk, v.risk - v.upper),
                     "instance " + std::to_string(it) + ": " + format_double(v.lower) + " <= " + format_double(v.risk) +
                         " <= " + format_double(v.upper) + " fails");
    }
  }
  return r;
}

/// Pointwise orderings of the omega-margin against the margin on random
/// (aggregate, label) draws over multiclass and multilabel spaces with Q in 2..6:
/// M_0 >= M >= M_1, and for multiclass M >= M_{1/2}. Each claim is counted
/// separately in `detail`. The multiclass M_{1/2} claim is checked both
/// pointwise and in its implication form M_{1/2} > 0 => M > 0; `pointwise_half`
/// selects which of the two counts as a suite violation.
inline SuiteResult margin_ordering_suite(std::size_t draws, std::uint64_t seed, double tol = 1e-12, bool pointwise_half = true) {
  SuiteResult r;
  r.name = "margin_ordering";
  random::Rng rng(seed);
  std::size_t upper = 0, lower = 0, half = 0, half_implication = 0, multiclass_draws = 0, library_mismatch = 0;
  std::string half_example;
  for (std::size_t it = 0; it < draws; ++it) {
    const std::size_t q = random::integer(rng, 2, 6);
    const bool mc = random::integer(rng, 0, 1) == 0;
    const auto space = mc ? OutputSpace::multiclass(q) : OutputSpace::multilabel(q);
    const auto g = random::hull_point(rng, space);
    const auto y = random::label(rng, space);
    const auto outputs = space.enumerate();
    const double m = naive::margin(outputs, g, y);
    const double m0 = naive::omega_margin(space, g, y, 0.0);
    const double m1 = naive::omega_margin(space, g, y, 1.0);
    if (std::abs(m - margin_of(space, g, y)) > 1e-12) ++library_mismatch;
    ++r.instances;
    bool bad = false;
    if (m0 < m - tol) {
      ++upper;
      bad = true;
    }
    if (m < m1 - tol) {
      ++lower;
      bad = true;
    }
    if (mc) {
      ++multiclass_draws;
      const double mh = naive::omega_margin(space, g, y, 0.5);
      if (m < mh - tol) {
        ++half;
        bad = bad || pointwise_half;
        if (half_example.empty()) {
          half_example = "Q=" + std::to_string(q) + " y=" + to_string(y) + " g=(";
          for (std::size_t j = 0; j < g.size(); ++j) half_example += (j ? "," : "") + format_double(g[j]);
          half_example += "): M=" + format_double(m) + " < M_1/2=" + format_double(mh);
        }
      }
      if (mh > tol && !(m > 0.0)) {
        ++half_implication;
        bad = bad || !pointwise_half;
      }
    }
    if (bad) detail::record(r, 0.0, pointwise_half && !half_example.empty() ? half_example : "draw " + std::to_string(it));
  }
  r.detail = {{"violations_M0_ge_M", upper},
              {"violations_M_ge_M1", lower},
              {"violations_M_ge_Mhalf_multiclass", half},
              {"violations_Mhalf_pos_implies_M_pos", half_implication},
              {"multiclass_draws", multiclass_draws},
              {"library_margin_mismatches", library_mismatch},
              {"first_Mhalf_counterexample", half_example},
              {"half_claim_checked", pointwise_half ? "pointwise" : "implication"}};
  return r;
}

inline SuiteResult change_of_measure_suite(std::size_t instances, std::uint64_t seed, double tol = 1e-10) {
  SuiteResult r;
  r.name = "change_of_measure";
  random::Rng rng(seed);
  std::size_t infinite = 0;
  for (std::size_t it = 0; it < instances; ++it) {
    const std::size_t n = random::integer(rng, 1, 5);
    auto rho = random::simplex_point(rng, n);
    auto pi = random::simplex_point(rng, n);
    // Occasionally concentrate rho on one hypothesis to push KL up.
    if (random::integer(rng, 0, 4) == 0) {
      std::fill(rho.begin(), rho.end(), 0.0);
      rho[random::integer(rng, 0, n - 1)] = 1.0;
    }
    const double scale = std::pow(10.0, random::uniform(rng, -2.0, 1.5));
    std::vector<double> phi(n * n);
    for (auto& p : phi) p = random::uniform(rng, -scale, scale);
    const auto v = check_change_of_measure(n, rho, pi, phi, tol);
    ++r.instances;
    infinite += v.kl_infinite ? 1 : 0;
    if (!v.holds) {
      detail::record(r, v.rhs - v.lhs, "instance " + std::to_string(it) + ": lhs " + format_double(v.lhs) + " < rhs " +
                                           format_double(v.rhs));
    }
  }
  r.detail["kl_infinite"] = infinite;
  return r;
}

/// Fixed 3-class distribution over 40 atoms with three table voters that
/// are right on roughly 70-85% of the mass.
inline std::pair<FiniteDistribution, std::vector<VoterPtr>> pac_reference_problem(std::uint64_t seed = 7) {
  random::Rng rng(seed);
  const auto space = OutputSpace::multiclass(3);
  const std::size_t n = 40;
  const auto probs = random::simplex_point(rng, n);
  std::vector<Atom> atoms;
  for (std::size_t i = 0; i < n; ++i) atoms.push_back({{static_cast<double>(i)}, Label::cls(i % 3), probs[i]});
  double s = 0.0;
  for (const auto& a : atoms) s += a.p;
  for (auto& a : atoms) a.p /= s;
  std::vector<VoterPtr> voters;
  for (double acc : {0.85, 0.75, 0.7}) {
    std::vector<std::vector<double>> rows;
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = random::uniform(rng) < acc ? i % 3 : (i % 3 + random::integer(rng, 1, 2)) % 3;
      rows.push_back(space.embed(Label::cls(c)));
    }
    voters.push_back(std::make_shared<TableVoter>(space, std::move(rows)));
  }
  return {FiniteDistribution(space, std::move(atoms)), std::move(voters)};
}

inline SuiteResult pac_suite(const PacTrialConfig& cfg) {
  auto [d, voters] = pac_reference_problem();
  const std::vector<double> pi(voters.size(), 1.0 / static_cast<double>(voters.size()));
  const auto res = pac_validity_trial(d, voters, pi, cfg);
  SuiteResult r;
  r.name = "pac_validity";
  r.instances = res.trials;
  r.skipped = res.skipped;
  const double limit = cfg.delta + 3.0 * std::sqrt(cfg.delta * (1.0 - cfg.delta) / static_cast<double>(cfg.trials));
  if (res.frequency > limit) detail::record(r, res.frequency - limit, "violation frequency " + format_double(res.frequency));
  r.detail = {{"m", cfg.m},
              {"delta", cfg.delta},
              {"trials", res.trials},
              {"trial_violations", res.violations},
              {"frequency", res.frequency},
              {"limit", limit},
              {"posteriors_per_trial", res.posteriors},
              {"min_bound_minus_risk", res.min_gap},
              {"seed", cfg.seed}};
  return r;
}

/// Uniform distribution over a dataset, exact moments versus the empirical
/// moments from the bounds module.
inline SuiteResult moment_agreement_suite(std::size_t instances, std::uint64_t seed, double tol = 1e-12) {
  SuiteResult r;
  r.name = "moment_agreement";
  random::Rng rng(seed);
  for (std::size_t it = 0; it < instances; ++it) {
    const auto kind = random::integer(rng, 0, 2);
    const std::size_t q = random::integer(rng, 2, 5);
    const auto space = kind == 0 ? OutputSpace::binary() : (kind == 1 ? OutputSpace::multiclass(q) : OutputSpace::multilabel(q));
    auto inst = random::instance(rng, space, 40, 6, 0.5);
    const auto data = detail::atoms_as_dataset(inst.distribution);
    const auto uni = FiniteDistribution::uniform(data);
    const double w = random::uniform(rng);
    const auto q_exact = exact_quantities(inst.ensemble, uni, {w});
    const auto mt = moments(inst.ensemble, data, MarginKind::true_margin());
    const auto mw = moments(inst.ensemble, data, MarginKind::omega_margin(w));
    const double err = std::max({std::abs(q_exact.mu1 - mt.mu1), std::abs(q_exact.mu2 - mt.mu2),
                                 std::abs(q_exact.omega_mu1[0] - mw.mu1), std::abs(q_exact.omega_mu2[0] - mw.mu2),
                                 std::abs(q_exact.risk - risk(inst.ensemble, data, RiskRule::MarginRule)),
                                 std::abs(q_exact.predict_risk - risk(inst.ensemble, data, RiskRule::PredictRule))});
    ++r.instances;
    if (err > tol) detail::record(r, err, "instance " + std::to_string(it) + ": difference " + format_double(err));
  }
  return r;
}

struct VerifyOptions {
  std::uint64_t seed = 20150601;
  std::size_t binary_instances = 200;
  std::size_t validity_instances = 500;
  std::size_t sandwich_instances = 500;
  std::size_t ordering_draws = 10000;
  std::size_t change_of_measure_instances = 2000;
  std::size_t moment_instances = 200;
  bool pointwise_half = false;  ///< margin ordering: check M >= M_{1/2} pointwise instead of M_{1/2} > 0 => M > 0
  PacTrialConfig pac{};
};

/// Every suite with its default size. Seeds are derived from opt.seed by a fixed offset per suite.
inline std::vector<SuiteResult> run_all_suites(const VerifyOptions& opt = {}) {
  std::vector<SuiteResult> out;
  out.push_back(binary_equivalence_suite(opt.binary_instances, opt.seed + 1));
  out.push_back(cbound_validity_suite(opt.validity_instances, opt.seed + 2));
  out.push_back(sandwich_suite(SpaceKind::Multiclass, opt.sandwich_instances, opt.seed + 3));
  out.push_back(sandwich_suite(SpaceKind::Multilabel, opt.sandwich_instances, opt.seed + 4));
  out.push_back(margin_ordering_suite(opt.ordering_draws, opt.seed + 5, 1e-12, opt.pointwise_half));
  auto pac = opt.pac;
  if (pac.seed == 0) pac.seed = opt.seed + 6;
  out.push_back(pac_suite(pac));
  out.push_back(change_of_measure_suite(opt.change_of_measure_instances, opt.seed + 7));
  out.push_back(moment_agreement_suite(opt.moment_instances, opt.seed + 8));
  return out;
}

}  // namespace cbound::oracle

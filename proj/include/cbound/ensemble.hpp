#pragma once

// Voters, weighted ensembles, labeled samples, and the majority vote built
// from them.

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "cbound/error.hpp"
#include "cbound/margin.hpp"
#include "cbound/output_space.hpp"
#include "cbound/summation.hpp"

namespace cbound {

/// Maps a feature vector to a point of the output space's convex hull.
class Voter {
 public:
  virtual ~Voter() = default;

  virtual const OutputSpace& space() const noexcept = 0;
  /// True when every output is an embedded label (a hull vertex).
  virtual bool is_classifier() const noexcept = 0;
  /// Smallest feature-vector length this voter can evaluate.
  virtual std::size_t min_input_dim() const noexcept = 0;
  /// Writes h(x) into `out`, which has space().dim() entries.
  virtual void vote(std::span<const double> x, std::span<double> out) const = 0;
  virtual nlohmann::json to_json() const = 0;

  std::vector<double> vote(std::span<const double> x) const {
    std::vector<double> out(space().dim());
    vote(x, out);
    return out;
  }
};

using VoterPtr = std::shared_ptr<const Voter>;

/// True when v equals some embedded label up to `tol` per coordinate.
inline bool is_vertex(const OutputSpace& space, std::span<const double> v, double tol = 1e-12) {
  switch (space.kind()) {
    case SpaceKind::Binary: return std::abs(std::abs(v[0]) - 1.0) <= tol;
    case SpaceKind::Multiclass: {
      std::size_t ones = 0;
      for (double c : v) {
        if (std::abs(c - 1.0) <= tol) {
          ++ones;
        } else if (std::abs(c) > tol) {
          return false;
        }
      }
      return ones == 1;
    }
    case SpaceKind::Multilabel: {
      const double s = space.coordinate_scale();
      for (double c : v) {
        if (std::abs(std::abs(c) - s) > tol) return false;
      }
      return true;
    }
  }
  return false;
}

/// Majority-vote decoding: argmax over labels c of <Y(c), g>, ties resolved
/// toward the lowest canonical label. With unit-norm embeddings this is the
/// same as argmin of ||Y(c) - g||^2.
inline Label decode(const OutputSpace& space, std::span<const double> g) {
  switch (space.kind()) {
    case SpaceKind::Binary: return Label::binary(g[0] > 0.0 ? 1 : -1);
    case SpaceKind::Multiclass: {
      std::size_t best = 0;
      for (std::size_t c = 1; c < g.size(); ++c) {
        if (g[c] > g[best]) best = c;
      }
      return Label::cls(best);
    }
    case SpaceKind::Multilabel: {
      // <Y(c), g> separates per coordinate; a zero coordinate is a tie and
      // the 0 bit gives the lower canonical index.
      std::vector<std::uint8_t> bits(g.size());
      for (std::size_t j = 0; j < g.size(); ++j) bits[j] = g[j] > 0.0 ? 1 : 0;
      return Label::multilabel(std::move(bits));
    }
  }
  return {};
}

class ConstantVoter final : public Voter {
 public:
  ConstantVoter(OutputSpace space, std::vector<double> output) : space_(space), output_(std::move(output)) {
    if (!space_.in_hull(output_, kHullTolerance)) fail(ErrorCategory::CorruptVoter, "constant voter output outside the hull");
    classifier_ = is_vertex(space_, output_);
  }

  const OutputSpace& space() const noexcept override { return space_; }
  bool is_classifier() const noexcept override { return classifier_; }
  std::size_t min_input_dim() const noexcept override { return 0; }
  void vote(std::span<const double>, std::span<double> out) const override {
    std::copy(output_.begin(), output_.end(), out.begin());
  }
  nlohmann::json to_json() const override { return {{"type", "constant"}, {"output", output_}}; }

  const std::vector<double>& output() const noexcept { return output_; }

 private:
  OutputSpace space_;
  std::vector<double> output_;
  bool classifier_ = false;
};

/// Looks its output up by the integer value of one feature. Used for voters
/// over an explicitly enumerated input set.
class TableVoter final : public Voter {
 public:
  TableVoter(OutputSpace space, std::vector<std::vector<double>> outputs, std::size_t index_feature = 0, bool check_hull = true)
      : space_(space), outputs_(std::move(outputs)), index_feature_(index_feature) {
    if (outputs_.empty()) fail(ErrorCategory::InvalidParameter, "table voter needs at least one row");
    classifier_ = true;
    for (const auto& row : outputs_) {
      if (row.size() != space_.dim()) fail(ErrorCategory::DimensionMismatch, "table voter row has the wrong dimension");
      if (check_hull && !space_.in_hull(row, kHullTolerance)) {
        fail(ErrorCategory::CorruptVoter, "table voter output outside the hull");
      }
      classifier_ = classifier_ && is_vertex(space_, row);
    }
  }

  const OutputSpace& space() const noexcept override { return space_; }
  bool is_classifier() const noexcept override { return classifier_; }
  std::size_t min_input_dim() const noexcept override { return index_feature_ + 1; }

  void vote(std::span<const double> x, std::span<double> out) const override {
    const double key = x[index_feature_];
    if (!(key >= 0) || key != std::floor(key) || key >= static_cast<double>(outputs_.size())) {
      fail(ErrorCategory::InvalidParameter, "table voter key " + std::to_string(key) + " out of range");
    }
    const auto& row = outputs_[static_cast<std::size_t>(key)];
    std::copy(row.begin(), row.end(), out.begin());
  }

  nlohmann::json to_json() const override {
    return {{"type", "table"}, {"index_feature", index_feature_}, {"outputs", outputs_}};
  }

  const std::vector<std::vector<double>>& outputs() const noexcept { return outputs_; }

 private:
  OutputSpace space_;
  std::vector<std::vector<double>> outputs_;
  std::size_t index_feature_;
  bool classifier_ = true;
};

inline void check_distribution(std::span<const double> w, const char* what, double tol = 1e-12) {
  if (w.empty()) fail(ErrorCategory::InvalidParameter, std::string(what) + " is empty");
  CompensatedSum s;
  for (double v : w) {
    if (!(v >= 0.0) || !std::isfinite(v)) fail(ErrorCategory::InvalidParameter, std::string(what) + " has a negative or non-finite weight");
    s += v;
  }
  if (std::abs(s.value() - 1.0) > tol) {
    fail(ErrorCategory::InvalidParameter, std::string(what) + " sums to " + std::to_string(s.value()) + ", not 1");
  }
}

/// Rescales nonnegative weights to sum to one.
inline std::vector<double> normalized(std::vector<double> w) {
  CompensatedSum s;
  for (double v : w) {
    if (!(v >= 0.0)) fail(ErrorCategory::InvalidParameter, "cannot normalize negative weights");
    s += v;
  }
  if (!(s.value() > 0.0)) fail(ErrorCategory::InvalidParameter, "cannot normalize weights with zero total");
  for (double& v : w) v /= s.value();
  return w;
}

class WeightedEnsemble {
 public:
  WeightedEnsemble(OutputSpace space, std::vector<VoterPtr> voters, std::vector<double> rho,
                   std::optional<std::vector<double>> pi = std::nullopt)
      : space_(space), voters_(std::move(voters)), rho_(std::move(rho)), pi_(std::move(pi)) {
    if (voters_.empty()) fail(ErrorCategory::InvalidParameter, "ensemble needs at least one voter");
    if (rho_.size() != voters_.size()) fail(ErrorCategory::DimensionMismatch, "rho length differs from voter count");
    check_distribution(rho_, "rho");
    if (pi_) {
      if (pi_->size() != voters_.size()) fail(ErrorCategory::DimensionMismatch, "pi length differs from voter count");
      check_distribution(*pi_, "pi");
    }
    for (const auto& v : voters_) {
      if (!v) fail(ErrorCategory::InvalidParameter, "null voter");
      if (!(v->space() == space_)) fail(ErrorCategory::InvalidParameter, "voter space differs from ensemble space");
      min_input_dim_ = std::max(min_input_dim_, v->min_input_dim());
    }
  }

  const OutputSpace& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return voters_.size(); }
  const std::vector<VoterPtr>& voters() const noexcept { return voters_; }
  const Voter& voter(std::size_t i) const { return *voters_.at(i); }
  const std::vector<double>& rho() const noexcept { return rho_; }
  const std::optional<std::vector<double>>& pi() const noexcept { return pi_; }
  std::size_t min_input_dim() const noexcept { return min_input_dim_; }

  /// Same voters under a different posterior.
  WeightedEnsemble with_rho(std::vector<double> rho) const { return WeightedEnsemble(space_, voters_, std::move(rho), pi_); }

 private:
  OutputSpace space_;
  std::vector<VoterPtr> voters_;
  std::vector<double> rho_;
  std::optional<std::vector<double>> pi_;
  std::size_t min_input_dim_ = 0;
};

class LabeledDataset {
 public:
  LabeledDataset(OutputSpace space, std::size_t num_features, std::vector<double> features, std::vector<Label> labels)
      : space_(space), d_(num_features), features_(std::move(features)), labels_(std::move(labels)) {
    if (labels_.empty()) fail(ErrorCategory::EmptyDataset, "dataset has no examples");
    if (features_.size() != labels_.size() * d_) {
      fail(ErrorCategory::DimensionMismatch, "feature matrix size does not match m x d");
    }
    for (const auto& l : labels_) space_.check(l);
  }

  const OutputSpace& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return labels_.size(); }
  std::size_t num_features() const noexcept { return d_; }
  std::span<const double> row(std::size_t i) const { return {features_.data() + i * d_, d_}; }
  const Label& label(std::size_t i) const { return labels_[i]; }
  const std::vector<Label>& labels() const noexcept { return labels_; }
  const std::vector<double>& features() const noexcept { return features_; }

  /// Human-readable class names, when the labels came from a file.
  const std::vector<std::string>& class_names() const noexcept { return class_names_; }
  void set_class_names(std::vector<std::string> names) { class_names_ = std::move(names); }

  LabeledDataset subset(std::span<const std::size_t> idx) const {
    std::vector<double> f;
    std::vector<Label> l;
    f.reserve(idx.size() * d_);
    l.reserve(idx.size());
    for (auto i : idx) {
      auto r = row(i);
      f.insert(f.end(), r.begin(), r.end());
      l.push_back(labels_[i]);
    }
    LabeledDataset out(space_, d_, std::move(f), std::move(l));
    out.class_names_ = class_names_;
    return out;
  }

 private:
  OutputSpace space_;
  std::size_t d_;
  std::vector<double> features_;
  std::vector<Label> labels_;
  std::vector<std::string> class_names_;
};

/// E_{h~rho} h(x) written into `out`. Every voter output is hull-checked.
inline void aggregate_into(const WeightedEnsemble& e, std::span<const double> x, std::span<double> out,
                           std::span<double> scratch) {
  if (x.size() < e.min_input_dim()) {
    fail(ErrorCategory::DimensionMismatch, "feature vector has " + std::to_string(x.size()) + " entries, voters need " +
                                               std::to_string(e.min_input_dim()));
  }
  std::fill(out.begin(), out.end(), 0.0);
  for (std::size_t i = 0; i < e.size(); ++i) {
    e.voter(i).vote(x, scratch);
    if (!e.space().in_hull(scratch, kHullTolerance)) {
      fail(ErrorCategory::CorruptVoter, "voter " + std::to_string(i) + " produced an output outside the hull");
    }
    const double w = e.rho()[i];
    if (w == 0.0) continue;
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += w * scratch[k];
  }
}

inline std::vector<double> aggregate(const WeightedEnsemble& e, std::span<const double> x) {
  std::vector<double> out(e.space().dim()), scratch(e.space().dim());
  aggregate_into(e, x, out, scratch);
  return out;
}

inline Label predict(const WeightedEnsemble& e, std::span<const double> x) { return decode(e.space(), aggregate(e, x)); }

/// Aggregated votes for every example of a dataset, row-major m x dim.
class AggregatedVotes {
 public:
  AggregatedVotes(OutputSpace space, std::size_t m) : space_(space), m_(m), data_(m * space.dim()) {}

  const OutputSpace& space() const noexcept { return space_; }
  std::size_t size() const noexcept { return m_; }
  std::span<const double> row(std::size_t i) const { return {data_.data() + i * space_.dim(), space_.dim()}; }
  std::span<double> row(std::size_t i) { return {data_.data() + i * space_.dim(), space_.dim()}; }

 private:
  OutputSpace space_;
  std::size_t m_;
  std::vector<double> data_;
};

inline void check_compatible(const WeightedEnsemble& e, const LabeledDataset& data) {
  if (!(e.space() == data.space())) {
    fail(ErrorCategory::InvalidParameter, "ensemble " + e.space().describe() + " vs dataset " + data.space().describe());
  }
}

inline AggregatedVotes aggregate_all(const WeightedEnsemble& e, const LabeledDataset& data) {
  check_compatible(e, data);
  AggregatedVotes votes(e.space(), data.size());
  std::vector<double> scratch(e.space().dim());
  for (std::size_t i = 0; i < data.size(); ++i) aggregate_into(e, data.row(i), votes.row(i), scratch);
  return votes;
}

enum class RiskRule {
  MarginRule,   ///< error iff margin <= 0, so ties count as errors
  PredictRule,  ///< error iff the tie-broken prediction differs from the label
};

inline double risk(const AggregatedVotes& votes, const LabeledDataset& data, RiskRule rule) {
  if (votes.size() != data.size()) fail(ErrorCategory::DimensionMismatch, "votes and dataset sizes differ");
  std::size_t errors = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const bool err = rule == RiskRule::MarginRule ? margin_of(data.space(), votes.row(i), data.label(i)) <= 0.0
                                                  : !(decode(data.space(), votes.row(i)) == data.label(i));
    errors += err ? 1 : 0;
  }
  return static_cast<double>(errors) / static_cast<double>(data.size());
}

inline double risk(const WeightedEnsemble& e, const LabeledDataset& data, RiskRule rule) {
  return risk(aggregate_all(e, data), data, rule);
}

/// 0-1 risk of each voter taken alone, decoding its output like the vote.
inline std::vector<double> voter_risks(const WeightedEnsemble& e, const LabeledDataset& data) {
  check_compatible(e, data);
  if (data.num_features() < e.min_input_dim()) fail(ErrorCategory::DimensionMismatch, "dataset has too few features");
  std::vector<double> out(e.size());
  std::vector<double> scratch(e.space().dim());
  for (std::size_t v = 0; v < e.size(); ++v) {
    std::size_t errors = 0;
    for (std::size_t i = 0; i < data.size(); ++i) {
      e.voter(v).vote(data.row(i), scratch);
      if (!e.space().in_hull(scratch, kHullTolerance)) {
        fail(ErrorCategory::CorruptVoter, "voter " + std::to_string(v) + " produced an output outside the hull");
      }
      errors += decode(e.space(), scratch) == data.label(i) ? 0 : 1;
    }
    out[v] = static_cast<double>(errors) / static_cast<double>(data.size());
  }
  return out;
}

/// rho-average of the voters' 0-1 risks.
inline double gibbs_risk(const WeightedEnsemble& e, const LabeledDataset& data) {
  const auto r = voter_risks(e, data);
  CompensatedSum s;
  for (std::size_t v = 0; v < r.size(); ++v) s += e.rho()[v] * r[v];
  return s.value();
}

}  // namespace cbound

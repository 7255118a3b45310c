#pragma once

// Output label sets and their unit-norm feature embeddings.
//
//   Binary      {-1,+1}  ->  R,    Y(+1) = 1, Y(-1) = -1
//   Multiclass  {0..Q-1} ->  R^Q,  canonical basis vectors
//   Multilabel  {0,1}^Q  ->  R^Q,  Y_j(y) = +1/sqrt(Q) if y_j = 1 else -1/sqrt(Q)
//
// Voters map inputs into the convex hull of the embedded labels; that hull is
// the interval [-1,1], the probability simplex, or the hypercube [-1/sqrt(Q), 1/sqrt(Q)]^Q.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cbound/error.hpp"

namespace cbound {

enum class SpaceKind { Binary, Multiclass, Multilabel };

inline std::string to_string(SpaceKind k) {
  switch (k) {
    case SpaceKind::Binary: return "binary";
    case SpaceKind::Multiclass: return "multiclass";
    case SpaceKind::Multilabel: return "multilabel";
  }
  return "unknown";
}

inline constexpr double kHullTolerance = 1e-9;
inline constexpr std::size_t kEnumerationCap = 20;

class Label {
 public:
  Label() = default;

  static Label binary(int sign) {
    if (sign != -1 && sign != 1) fail(ErrorCategory::InvalidLabel, "binary label must be -1 or +1, got " + std::to_string(sign));
    Label l;
    l.kind_ = SpaceKind::Binary;
    l.scalar_ = sign;
    return l;
  }

  static Label cls(std::size_t index) {
    Label l;
    l.kind_ = SpaceKind::Multiclass;
    l.scalar_ = static_cast<std::int64_t>(index);
    return l;
  }

  static Label multilabel(std::vector<std::uint8_t> bits) {
    for (auto b : bits) {
      if (b > 1) fail(ErrorCategory::InvalidLabel, "multilabel bits must be 0 or 1");
    }
    Label l;
    l.kind_ = SpaceKind::Multilabel;
    l.bits_ = std::move(bits);
    return l;
  }

  SpaceKind kind() const noexcept { return kind_; }
  int sign() const noexcept { return static_cast<int>(scalar_); }
  std::size_t index() const noexcept { return static_cast<std::size_t>(scalar_); }
  const std::vector<std::uint8_t>& bits() const noexcept { return bits_; }

  friend bool operator==(const Label&, const Label&) = default;

 private:
  SpaceKind kind_ = SpaceKind::Multiclass;
  std::int64_t scalar_ = 0;
  std::vector<std::uint8_t> bits_;
};

inline std::string to_string(const Label& l);

struct EmbeddedLabel {
  Label label;
  std::vector<double> vector;
};

class OutputSpace {
 public:
  OutputSpace() = default;

  static OutputSpace binary() { return OutputSpace(SpaceKind::Binary, 2); }

  static OutputSpace multiclass(std::size_t q) {
    if (q < 2) fail(ErrorCategory::InvalidParameter, "multiclass space needs Q >= 2, got " + std::to_string(q));
    return OutputSpace(SpaceKind::Multiclass, q);
  }

  static OutputSpace multilabel(std::size_t q) {
    if (q < 2) fail(ErrorCategory::InvalidParameter, "multilabel space needs Q >= 2, got " + std::to_string(q));
    return OutputSpace(SpaceKind::Multilabel, q);
  }

  SpaceKind kind() const noexcept { return kind_; }
  /// Class count (multiclass), label count (multilabel), or 2 for binary.
  std::size_t q() const noexcept { return q_; }
  std::size_t dim() const noexcept { return kind_ == SpaceKind::Binary ? 1 : q_; }

  /// Number of elements of the output set. Saturates for very large multilabel Q.
  std::size_t cardinality() const noexcept {
    if (kind_ != SpaceKind::Multilabel) return q_;
    return q_ >= 63 ? SIZE_MAX : (std::size_t{1} << q_);
  }

  bool valid(const Label& l) const noexcept {
    if (l.kind() != kind_) return false;
    switch (kind_) {
      case SpaceKind::Binary: return l.sign() == 1 || l.sign() == -1;
      case SpaceKind::Multiclass: return l.index() < q_;
      case SpaceKind::Multilabel: return l.bits().size() == q_;
    }
    return false;
  }

  void check(const Label& l) const {
    if (!valid(l)) fail(ErrorCategory::InvalidLabel, "label " + to_string(l) + " is not valid for " + describe());
  }

  std::vector<double> embed(const Label& l) const {
    check(l);
    std::vector<double> v(dim(), 0.0);
    switch (kind_) {
      case SpaceKind::Binary: v[0] = static_cast<double>(l.sign()); break;
      case SpaceKind::Multiclass: v[l.index()] = 1.0; break;
      case SpaceKind::Multilabel: {
        const double s = coordinate_scale();
        for (std::size_t j = 0; j < q_; ++j) v[j] = l.bits()[j] ? s : -s;
        break;
      }
    }
    return v;
  }

  /// <v, Y(l)> without materializing Y(l). The label is assumed valid.
  double inner(std::span<const double> v, const Label& l) const noexcept {
    switch (kind_) {
      case SpaceKind::Binary: return v[0] * l.sign();
      case SpaceKind::Multiclass: return v[l.index()];
      case SpaceKind::Multilabel: {
        double s = 0.0;
        for (std::size_t j = 0; j < q_; ++j) s += l.bits()[j] ? v[j] : -v[j];
        return s * coordinate_scale();
      }
    }
    return 0.0;
  }

  /// Label at canonical position i: binary -1 then +1, multiclass ascending
  /// index, multilabel ascending binary value with label j carried by bit j.
  Label label_at(std::size_t i) const {
    switch (kind_) {
      case SpaceKind::Binary:
        if (i > 1) break;
        return Label::binary(i == 0 ? -1 : 1);
      case SpaceKind::Multiclass:
        if (i >= q_) break;
        return Label::cls(i);
      case SpaceKind::Multilabel: {
        if (q_ >= 63 || i >= cardinality()) break;
        std::vector<std::uint8_t> bits(q_);
        for (std::size_t j = 0; j < q_; ++j) bits[j] = static_cast<std::uint8_t>((i >> j) & 1u);
        return Label::multilabel(std::move(bits));
      }
    }
    fail(ErrorCategory::InvalidLabel, "canonical position " + std::to_string(i) + " out of range for " + describe());
  }

  std::size_t canonical_index(const Label& l) const {
    check(l);
    switch (kind_) {
      case SpaceKind::Binary: return l.sign() < 0 ? 0 : 1;
      case SpaceKind::Multiclass: return l.index();
      case SpaceKind::Multilabel: {
        if (q_ >= 63) fail(ErrorCategory::Capacity, "multilabel Q too large for a canonical index");
        std::size_t idx = 0;
        for (std::size_t j = 0; j < q_; ++j) idx |= std::size_t{l.bits()[j]} << j;
        return idx;
      }
    }
    return 0;
  }

  std::vector<EmbeddedLabel> enumerate(std::size_t cap = kEnumerationCap) const {
    if (kind_ == SpaceKind::Multilabel && q_ > cap) {
      fail(ErrorCategory::Capacity, "enumerating a multilabel space with Q=" + std::to_string(q_) +
                                        " needs 2^" + std::to_string(q_) + " elements; cap is Q=" + std::to_string(cap));
    }
    std::vector<EmbeddedLabel> out;
    out.reserve(cardinality());
    for (std::size_t i = 0; i < cardinality(); ++i) {
      Label l = label_at(i);
      auto v = embed(l);
      out.push_back({std::move(l), std::move(v)});
    }
    return out;
  }

  bool in_hull(std::span<const double> v, double tol = kHullTolerance) const {
    if (v.size() != dim()) {
      fail(ErrorCategory::DimensionMismatch,
           "vector of dimension " + std::to_string(v.size()) + " for space of dimension " + std::to_string(dim()));
    }
    if (tol < 0) fail(ErrorCategory::InvalidParameter, "hull tolerance must be nonnegative");
    switch (kind_) {
      case SpaceKind::Binary: return std::isfinite(v[0]) && std::abs(v[0]) <= 1.0 + tol;
      case SpaceKind::Multiclass: {
        double s = 0.0;
        for (double c : v) {
          if (!(c >= -tol)) return false;
          s += c;
        }
        return std::abs(s - 1.0) <= tol;
      }
      case SpaceKind::Multilabel: {
        const double lim = coordinate_scale() + tol;
        for (double c : v) {
          if (!(std::abs(c) <= lim)) return false;
        }
        return true;
      }
    }
    return false;
  }

  /// Magnitude of each multilabel coordinate, 1/sqrt(Q).
  double coordinate_scale() const noexcept { return 1.0 / std::sqrt(static_cast<double>(q_)); }

  std::string describe() const {
    if (kind_ == SpaceKind::Binary) return "binary space";
    return to_string(kind_) + " space (Q=" + std::to_string(q_) + ")";
  }

  friend bool operator==(const OutputSpace&, const OutputSpace&) = default;

 private:
  OutputSpace(SpaceKind k, std::size_t q) : kind_(k), q_(q) {}

  SpaceKind kind_ = SpaceKind::Multiclass;
  std::size_t q_ = 2;
};

inline std::string to_string(const Label& l) {
  switch (l.kind()) {
    case SpaceKind::Binary: return l.sign() > 0 ? "+1" : "-1";
    case SpaceKind::Multiclass: return "class " + std::to_string(l.index());
    case SpaceKind::Multilabel: {
      std::string s = "(";
      for (std::size_t j = 0; j < l.bits().size(); ++j) {
        if (j) s += ',';
        s += l.bits()[j] ? '1' : '0';
      }
      return s + ")";
    }
  }
  return "?";
}

}  // namespace cbound

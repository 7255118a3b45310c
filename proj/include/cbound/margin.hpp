#pragma once

// Margins of a majority vote from its aggregated vote g = E_{h~rho} h(x):
//
//   M(x,y)       = <g, Y(y)> - max_{c != y} <g, Y(c)>
//   M_omega(x,y) = <g, Y(y)> - omega
//
// The max over c is solved in closed form for every space, so no label
// enumeration is needed here.

#include <algorithm>
#include <limits>
#include <span>

#include "cbound/output_space.hpp"

namespace cbound {

inline double margin_of(const OutputSpace& space, std::span<const double> g, const Label& y) {
  switch (space.kind()) {
    case SpaceKind::Binary:
      // <g,Y(y)> - <g,Y(-y)> = 2 y g
      return 2.0 * y.sign() * g[0];
    case SpaceKind::Multiclass: {
      const std::size_t t = y.index();
      double runner_up = -std::numeric_limits<double>::infinity();
      for (std::size_t c = 0; c < g.size(); ++c) {
        if (c != t) runner_up = std::max(runner_up, g[c]);
      }
      return g[t] - runner_up;
    }
    case SpaceKind::Multilabel: {
      // Flipping the labels in a set F lowers <g,Y(y)> by 2 sum_{j in F} t_j
      // with t_j = g_j Y_j(y); the runner-up flips the cheapest nonempty F.
      const double s = space.coordinate_scale();
      double negative = 0.0;
      double smallest = std::numeric_limits<double>::infinity();
      bool any_negative = false;
      for (std::size_t j = 0; j < g.size(); ++j) {
        const double t = (y.bits()[j] ? g[j] : -g[j]) * s;
        if (t < 0.0) {
          negative += t;
          any_negative = true;
        }
        smallest = std::min(smallest, t);
      }
      return 2.0 * (any_negative ? negative : smallest);
    }
  }
  return 0.0;
}

inline double omega_margin_of(const OutputSpace& space, std::span<const double> g, const Label& y, double omega) {
  return space.inner(g, y) - omega;
}

}  // namespace cbound

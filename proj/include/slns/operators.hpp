#pragma once

// Second-order finite-difference operators on grid fields: centred
// differences in the interior and on periodic axes, second-order one-sided
// differences on wall nodes.

#include "slns/field.hpp"

namespace slns {

/// d f / d x_axis at every node.
template <int Dim>
ScalarField<Dim> derivative(const ScalarField<Dim>& f, int axis) {
  const auto& grid = f.grid();
  const int n = grid.shape(axis);
  const double h = grid.spacing(axis);
  ScalarField<Dim> out(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Index<Dim> i = grid.multi_index(k);
    const int c = i[axis];
    auto val = [&](int offset) {
      Index<Dim> j = i;
      j[axis] = grid.shifted(axis, c, offset);
      return f.at(j);
    };
    double d;
    if (grid.periodic(axis) || (c > 0 && c < n - 1)) {
      d = (val(1) - val(-1)) / (2.0 * h);
    } else if (c == 0) {
      d = (-3.0 * val(0) + 4.0 * val(1) - val(2)) / (2.0 * h);
    } else {
      d = (3.0 * val(0) - 4.0 * val(-1) + val(-2)) / (2.0 * h);
    }
    out[k] = d;
  }
  return out;
}

template <int Dim>
VectorField<Dim> gradient(const ScalarField<Dim>& s, const Domain<Dim>& domain) {
  (void)domain;
  VectorField<Dim> g(s.grid());
  for (int a = 0; a < Dim; ++a) g[a] = derivative(s, a);
  return g;
}

template <int Dim>
ScalarField<Dim> divergence(const VectorField<Dim>& v, const Domain<Dim>& domain) {
  (void)domain;
  ScalarField<Dim> d(v.grid());
  for (int a = 0; a < Dim; ++a) d += derivative(v[a], a);
  return d;
}

/// 2D: the scalar d1 v2 - d2 v1.
inline ScalarField<2> curl(const VectorField<2>& v, const Domain<2>& domain) {
  (void)domain;
  return derivative(v[1], 0) - derivative(v[0], 1);
}

inline VectorField<3> curl(const VectorField<3>& v, const Domain<3>& domain) {
  (void)domain;
  VectorField<3> w(v.grid());
  w[0] = derivative(v[2], 1) - derivative(v[1], 2);
  w[1] = derivative(v[0], 2) - derivative(v[2], 0);
  w[2] = derivative(v[1], 0) - derivative(v[0], 1);
  return w;
}

}  // namespace slns

#pragma once

// Grid-backed fields on uniform tensor grids and their space-time
// interpolation.  Periodic axes store one period without the duplicate
// endpoint; walled axes store nodes on both walls.

#include "slns/core.hpp"
#include "slns/domain.hpp"

#include <cmath>
#include <functional>
#include <utility>

namespace slns {

template <int Dim>
using Index = std::array<int, Dim>;

template <int Dim>
class Grid {
 public:
  Grid(const Domain<Dim>& domain, const Index<Dim>& shape) : shape_(shape) {
    std::size_t total = 1;
    for (int a = 0; a < Dim; ++a) {
      periodic_[a] = domain.periodic(a);
      lower_[a] = domain.lower()[a];
      upper_[a] = domain.upper()[a];
      require(shape[a] >= 3, "grid needs at least 3 nodes per axis");
      spacing_[a] = periodic_[a] ? domain.length(a) / shape[a] : domain.length(a) / (shape[a] - 1);
      total *= static_cast<std::size_t>(shape[a]);
    }
    size_ = total;
  }

  const Index<Dim>& shape() const { return shape_; }
  int shape(int axis) const { return shape_[axis]; }
  double spacing(int axis) const { return spacing_[axis]; }
  double lower(int axis) const { return lower_[axis]; }
  double upper(int axis) const { return upper_[axis]; }
  bool periodic(int axis) const { return periodic_[axis]; }
  std::size_t size() const { return size_; }

  /// Row-major: axis 0 varies slowest.
  std::size_t index(const Index<Dim>& i) const {
    std::size_t k = 0;
    for (int a = 0; a < Dim; ++a) k = k * shape_[a] + static_cast<std::size_t>(i[a]);
    return k;
  }

  Index<Dim> multi_index(std::size_t k) const {
    Index<Dim> i{};
    for (int a = Dim - 1; a >= 0; --a) {
      i[a] = static_cast<int>(k % shape_[a]);
      k /= shape_[a];
    }
    return i;
  }

  Vec<Dim> node(const Index<Dim>& i) const {
    Vec<Dim> x;
    for (int a = 0; a < Dim; ++a) x[a] = lower_[a] + i[a] * spacing_[a];
    return x;
  }
  Vec<Dim> node(std::size_t k) const { return node(multi_index(k)); }

  /// Neighbour index along an axis, wrapping on periodic axes.  Walled axes
  /// must stay in range.
  int shifted(int axis, int i, int offset) const {
    int j = i + offset;
    if (periodic_[axis]) {
      j %= shape_[axis];
      if (j < 0) j += shape_[axis];
    }
    return j;
  }

  bool same_layout(const Grid& o) const {
    for (int a = 0; a < Dim; ++a) {
      if (shape_[a] != o.shape_[a] || periodic_[a] != o.periodic_[a]) return false;
      if (std::abs(spacing_[a] - o.spacing_[a]) > 1e-12 * spacing_[a]) return false;
      if (std::abs(lower_[a] - o.lower_[a]) > 1e-12 * (1.0 + std::abs(lower_[a]))) return false;
    }
    return true;
  }

 private:
  Index<Dim> shape_{};
  std::array<double, Dim> spacing_{};
  std::array<double, Dim> lower_{};
  std::array<double, Dim> upper_{};
  std::array<bool, Dim> periodic_{};
  std::size_t size_ = 0;
};

/// Multilinear interpolation stencil: 2^Dim node indices and weights.
template <int Dim>
struct Stencil {
  static constexpr int kCorners = 1 << Dim;
  std::array<std::size_t, kCorners> node{};
  std::array<double, kCorners> weight{};
};

template <int Dim>
Stencil<Dim> interpolation_stencil(const Grid<Dim>& grid, const Vec<Dim>& x) {
  std::array<int, Dim> i0{}, i1{};
  std::array<double, Dim> frac{};
  for (int a = 0; a < Dim; ++a) {
    const int n = grid.shape(a);
    double xi = (x[a] - grid.lower(a)) / grid.spacing(a);
    if (grid.periodic(a)) {
      const double fl = std::floor(xi);
      frac[a] = xi - fl;
      long long base = static_cast<long long>(fl) % n;
      if (base < 0) base += n;
      i0[a] = static_cast<int>(base);
      i1[a] = (i0[a] + 1) % n;
    } else {
      // Positions outside the walls are clamped onto them.
      xi = std::clamp(xi, 0.0, static_cast<double>(n - 1));
      int base = std::min(static_cast<int>(xi), n - 2);
      i0[a] = base;
      i1[a] = base + 1;
      frac[a] = xi - base;
    }
  }
  Stencil<Dim> st;
  for (int c = 0; c < Stencil<Dim>::kCorners; ++c) {
    Index<Dim> idx{};
    double w = 1.0;
    for (int a = 0; a < Dim; ++a) {
      const bool hi = (c >> (Dim - 1 - a)) & 1;
      idx[a] = hi ? i1[a] : i0[a];
      w *= hi ? frac[a] : 1.0 - frac[a];
    }
    st.node[c] = grid.index(idx);
    st.weight[c] = w;
  }
  return st;
}

template <int Dim>
class ScalarField {
 public:
  explicit ScalarField(Grid<Dim> grid, double fill = 0.0) : grid_(std::move(grid)), values_(grid_.size(), fill) {}
  ScalarField(Grid<Dim> grid, std::vector<double> values) : grid_(std::move(grid)), values_(std::move(values)) {
    require(values_.size() == grid_.size(), "scalar field value count does not match grid");
  }

  template <class Fn>
  static ScalarField from_function(const Grid<Dim>& grid, Fn&& fn) {
    ScalarField f(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) f.values_[k] = fn(grid.node(k));
    return f;
  }

  const Grid<Dim>& grid() const { return grid_; }
  std::size_t size() const { return values_.size(); }
  double& operator[](std::size_t k) { return values_[k]; }
  double operator[](std::size_t k) const { return values_[k]; }
  double& at(const Index<Dim>& i) { return values_[grid_.index(i)]; }
  double at(const Index<Dim>& i) const { return values_[grid_.index(i)]; }
  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }

  double sample(const Vec<Dim>& x) const {
    const auto st = interpolation_stencil(grid_, x);
    double v = 0.0;
    for (int c = 0; c < Stencil<Dim>::kCorners; ++c) v += st.weight[c] * values_[st.node[c]];
    return v;
  }

  double max_abs() const {
    double m = 0.0;
    for (double v : values_) m = std::max(m, std::abs(v));
    return m;
  }

  double mean() const { return pairwise_sum(std::span<const double>(values_)) / static_cast<double>(values_.size()); }

  ScalarField& operator+=(const ScalarField& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] += o.values_[k];
    return *this;
  }
  ScalarField& operator-=(const ScalarField& o) {
    for (std::size_t k = 0; k < values_.size(); ++k) values_[k] -= o.values_[k];
    return *this;
  }
  ScalarField& operator*=(double s) {
    for (double& v : values_) v *= s;
    return *this;
  }
  friend ScalarField operator+(ScalarField a, const ScalarField& b) { return a += b; }
  friend ScalarField operator-(ScalarField a, const ScalarField& b) { return a -= b; }
  friend ScalarField operator*(double s, ScalarField a) { return a *= s; }

 private:
  Grid<Dim> grid_;
  std::vector<double> values_;
};

template <int Dim>
class VectorField {
 public:
  explicit VectorField(const Grid<Dim>& grid) : components_(make(grid)) {}
  explicit VectorField(std::array<ScalarField<Dim>, Dim> comps) : components_(std::move(comps)) {
    for (int a = 1; a < Dim; ++a)
      require(components_[a].grid().same_layout(components_[0].grid()), "vector field components disagree on grid");
  }

  template <class Fn>
  static VectorField from_function(const Grid<Dim>& grid, Fn&& fn) {
    VectorField f(grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const Vec<Dim> v = fn(grid.node(k));
      for (int a = 0; a < Dim; ++a) f.components_[a][k] = v[a];
    }
    return f;
  }

  const Grid<Dim>& grid() const { return components_[0].grid(); }
  ScalarField<Dim>& operator[](int a) { return components_[a]; }
  const ScalarField<Dim>& operator[](int a) const { return components_[a]; }

  Vec<Dim> at(std::size_t k) const {
    Vec<Dim> v;
    for (int a = 0; a < Dim; ++a) v[a] = components_[a][k];
    return v;
  }
  void set(std::size_t k, const Vec<Dim>& v) {
    for (int a = 0; a < Dim; ++a) components_[a][k] = v[a];
  }

  Vec<Dim> sample(const Vec<Dim>& x) const {
    const auto st = interpolation_stencil(grid(), x);
    Vec<Dim> v = Vec<Dim>::Zero();
    for (int c = 0; c < Stencil<Dim>::kCorners; ++c)
      for (int a = 0; a < Dim; ++a) v[a] += st.weight[c] * components_[a][st.node[c]];
    return v;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& c : components_) m = std::max(m, c.max_abs());
    return m;
  }

  /// Discrete L2 norm with uniform node weights.
  double l2_norm() const {
    double s = 0.0;
    for (const auto& c : components_)
      for (double v : c.values()) s += v * v;
    return std::sqrt(s / static_cast<double>(grid().size()));
  }

  VectorField& operator+=(const VectorField& o) {
    for (int a = 0; a < Dim; ++a) components_[a] += o.components_[a];
    return *this;
  }
  VectorField& operator-=(const VectorField& o) {
    for (int a = 0; a < Dim; ++a) components_[a] -= o.components_[a];
    return *this;
  }
  VectorField& operator*=(double s) {
    for (auto& c : components_) c *= s;
    return *this;
  }
  friend VectorField operator+(VectorField a, const VectorField& b) { return a += b; }
  friend VectorField operator-(VectorField a, const VectorField& b) { return a -= b; }
  friend VectorField operator*(double s, VectorField a) { return a *= s; }

 private:
  static std::array<ScalarField<Dim>, Dim> make(const Grid<Dim>& grid) {
    return [&]<std::size_t... I>(std::index_sequence<I...>) {
      return std::array<ScalarField<Dim>, Dim>{((void)I, ScalarField<Dim>(grid))...};
    }(std::make_index_sequence<Dim>{});
  }

  std::array<ScalarField<Dim>, Dim> components_;
};

/// Pointwise product.
template <int Dim>
ScalarField<Dim> product(const ScalarField<Dim>& a, const ScalarField<Dim>& b) {
  require(a.size() == b.size(), "product: fields disagree on grid");
  ScalarField<Dim> out(a.grid());
  for (std::size_t k = 0; k < a.size(); ++k) out[k] = a[k] * b[k];
  return out;
}

/// Tensor-product cubic (four-point Lagrange) interpolation on a fully
/// periodic grid.
template <int Dim>
Vec<Dim> sample_cubic(const VectorField<Dim>& f, const Vec<Dim>& x) {
  const auto& grid = f.grid();
  std::array<std::array<int, 4>, Dim> idx{};
  std::array<std::array<double, 4>, Dim> w{};
  for (int a = 0; a < Dim; ++a) {
    require(grid.periodic(a), "cubic sampling needs a periodic grid");
    const double xi = (x[a] - grid.lower(a)) / grid.spacing(a);
    const double fl = std::floor(xi);
    const double s = xi - fl;
    const int n = grid.shape(a);
    long long base = static_cast<long long>(fl) % n;
    if (base < 0) base += n;
    for (int m = 0; m < 4; ++m) idx[a][m] = grid.shifted(a, static_cast<int>(base), m - 1);
    w[a] = {-s * (s - 1.0) * (s - 2.0) / 6.0, (s + 1.0) * (s - 1.0) * (s - 2.0) / 2.0,
            -(s + 1.0) * s * (s - 2.0) / 2.0, (s + 1.0) * s * (s - 1.0) / 6.0};
  }
  Vec<Dim> v = Vec<Dim>::Zero();
  constexpr int kTerms = Dim == 2 ? 16 : 64;
  for (int c = 0; c < kTerms; ++c) {
    Index<Dim> i{};
    double weight = 1.0;
    int rest = c;
    for (int a = 0; a < Dim; ++a) {
      const int m = rest % 4;
      rest /= 4;
      i[a] = idx[a][m];
      weight *= w[a][m];
    }
    const std::size_t k = grid.index(i);
    for (int a = 0; a < Dim; ++a) v[a] += weight * f[a][k];
  }
  return v;
}

/// Relative discrete L2 error ||a - b|| / ||b||.
template <int Dim>
double relative_l2_error(const VectorField<Dim>& approx, const VectorField<Dim>& exact) {
  return (approx - exact).l2_norm() / exact.l2_norm();
}

/// Time-indexed velocity snapshots with uniform spacing plus the viscosity.
template <int Dim>
class FieldSeries {
 public:
  FieldSeries(std::vector<double> times, std::vector<VectorField<Dim>> snapshots, double nu)
      : times_(std::move(times)), snapshots_(std::move(snapshots)), nu_(nu) {
    require(!times_.empty() && times_.size() == snapshots_.size(), "field series needs one snapshot per time");
    require(std::isfinite(nu_) && nu_ >= 0.0, "viscosity must be non-negative");
    if (times_.size() > 1) {
      dt_snap_ = (times_.back() - times_.front()) / static_cast<double>(times_.size() - 1);
      require(dt_snap_ > 0.0, "snapshot times must be strictly increasing");
      for (std::size_t k = 1; k < times_.size(); ++k) {
        require(times_[k] > times_[k - 1], "snapshot times must be strictly increasing");
        require(std::abs((times_[k] - times_[k - 1]) - dt_snap_) <= 1e-9 * dt_snap_,
                "snapshot times must be uniformly spaced");
      }
    }
    for (const auto& s : snapshots_)
      require(s.grid().same_layout(snapshots_.front().grid()), "snapshots must share one grid");
    build_interleaved();
  }

  /// Time-independent field valid on [t0, t1].
  static FieldSeries steady(const VectorField<Dim>& field, double t0, double t1, double nu) {
    return FieldSeries({t0, t1}, {field, field}, nu);
  }

  template <class Fn>  // fn(x, t) -> Vec<Dim>
  static FieldSeries from_function(const Grid<Dim>& grid, double t0, double t1, std::size_t intervals, double nu,
                                   Fn&& fn) {
    require(intervals >= 1, "need at least one snapshot interval");
    std::vector<double> times;
    std::vector<VectorField<Dim>> snaps;
    for (std::size_t k = 0; k <= intervals; ++k) {
      const double t = t0 + (t1 - t0) * static_cast<double>(k) / static_cast<double>(intervals);
      times.push_back(t);
      snaps.push_back(VectorField<Dim>::from_function(grid, [&](const Vec<Dim>& x) { return fn(x, t); }));
    }
    return FieldSeries(std::move(times), std::move(snaps), nu);
  }

  double nu() const { return nu_; }
  const Grid<Dim>& grid() const { return snapshots_.front().grid(); }
  const std::vector<double>& times() const { return times_; }
  const std::vector<VectorField<Dim>>& snapshots() const { return snapshots_; }
  std::size_t size() const { return times_.size(); }
  double t_first() const { return times_.front(); }
  double t_last() const { return times_.back(); }
  double dt_snap() const { return dt_snap_; }

  bool covers(double t) const {
    const double tol = 1e-12 * std::max(1.0, std::abs(t_last()));
    return t >= t_first() - tol && t <= t_last() + tol;
  }

  /// Snapshot index k and blend weight alpha with t = (1-alpha) t_k + alpha t_{k+1}.
  std::pair<std::size_t, double> time_slot(double t) const {
    if (!covers(t)) {
      throw UsageError("time " + std::to_string(t) + " outside field series range [" + std::to_string(t_first()) +
                       ", " + std::to_string(t_last()) + "]");
    }
    if (times_.size() == 1) return {0, 0.0};
    double pos = (t - t_first()) / dt_snap_;
    pos = std::clamp(pos, 0.0, static_cast<double>(times_.size() - 1));
    std::size_t k = std::min(static_cast<std::size_t>(pos), times_.size() - 2);
    return {k, pos - static_cast<double>(k)};
  }

  Vec<Dim> sample(const Vec<Dim>& x, double t) const {
    const auto [k, alpha] = time_slot(t);
    const auto st = interpolation_stencil(grid(), x);
    Vec<Dim> v = blend(st, k);
    if (alpha > 0.0) v = (1.0 - alpha) * v + alpha * blend(st, k + 1);
    return v;
  }

 private:
  Vec<Dim> blend(const Stencil<Dim>& st, std::size_t k) const {
    const double* data = interleaved_[k].data();
    Vec<Dim> v = Vec<Dim>::Zero();
    for (int c = 0; c < Stencil<Dim>::kCorners; ++c) {
      const double* p = data + st.node[c] * Dim;
      for (int a = 0; a < Dim; ++a) v[a] += st.weight[c] * p[a];
    }
    return v;
  }

  void build_interleaved() {
    interleaved_.resize(snapshots_.size());
    for (std::size_t k = 0; k < snapshots_.size(); ++k) {
      const auto& f = snapshots_[k];
      auto& out = interleaved_[k];
      out.resize(f.grid().size() * Dim);
      for (std::size_t n = 0; n < f.grid().size(); ++n)
        for (int a = 0; a < Dim; ++a) out[n * Dim + a] = f[a][n];
    }
  }

  std::vector<double> times_;
  std::vector<VectorField<Dim>> snapshots_;
  double nu_;
  double dt_snap_ = 0.0;
  std::vector<std::vector<double>> interleaved_;
};

/// Multilinear-in-space, linear-in-time velocity evaluation.
template <int Dim>
Vec<Dim> sample_velocity(const FieldSeries<Dim>& series, const Domain<Dim>& domain, const Vec<Dim>& x, double t) {
  (void)domain;
  return series.sample(x, t);
}

/// Velocity gradient G(i, j) = d u_i / d x_j by centred differencing of the
/// interpolated velocity with offset equal to the grid spacing.  Near walls
/// the offsets are clipped to the closed domain (one-sided differences).
template <int Dim>
Mat<Dim> velocity_gradient(const FieldSeries<Dim>& series, const Domain<Dim>& domain, const Vec<Dim>& x, double t) {
  const auto& grid = series.grid();
  Mat<Dim> g;
  for (int j = 0; j < Dim; ++j) {
    const double h = grid.spacing(j);
    Vec<Dim> xp = x, xm = x;
    if (domain.periodic(j)) {
      xp[j] += h;
      xm[j] -= h;
    } else {
      const double c = std::clamp(x[j], domain.lower()[j], domain.upper()[j]);
      xp[j] = std::min(c + h, domain.upper()[j]);
      xm[j] = std::max(c - h, domain.lower()[j]);
    }
    g.col(j) = (series.sample(xp, t) - series.sample(xm, t)) / (xp[j] - xm[j]);
  }
  return g;
}

}  // namespace slns

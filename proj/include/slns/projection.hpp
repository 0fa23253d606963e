#pragma once

// Leray-Hodge projection and Biot-Savart inversion.
//
// On the torus both act diagonally in Fourier space.  The symbol of a
// derivative is the one of the centred difference, i sin(k h) / h, so the
// projected field has zero discrete divergence exactly and discrete
// gradients are annihilated exactly.  On walled grids the projection is
// v - grad(phi) with phi from a sparse constraint system (zero divergence
// at interior nodes, zero normal component on wall nodes).

#include "slns/operators.hpp"

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>
#include <Eigen/SparseQR>
#include <fftw3.h>

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>
#include <sstream>

namespace slns {

namespace detail {

using Complex = std::complex<double>;

/// Shared FFTW plans keyed by shape and direction.  Plans are created under
/// a lock (the FFTW planner is not reentrant); executing a plan on
/// caller-owned unaligned buffers is thread-safe.
class FftPlans {
 public:
  static fftw_plan get(const std::vector<int>& shape, int sign) {
    static FftPlans instance;
    std::lock_guard lock(instance.mutex_);
    auto key = std::make_pair(shape, sign);
    auto it = instance.plans_.find(key);
    if (it != instance.plans_.end()) return it->second.get();
    std::size_t total = 1;
    for (int n : shape) total *= static_cast<std::size_t>(n);
    std::vector<Complex> scratch_in(total), scratch_out(total);
    fftw_plan p = fftw_plan_dft(static_cast<int>(shape.size()), shape.data(),
                                reinterpret_cast<fftw_complex*>(scratch_in.data()),
                                reinterpret_cast<fftw_complex*>(scratch_out.data()), sign,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (p == nullptr) throw NumericError("FFTW could not create a plan");
    auto [ins, ok] = instance.plans_.emplace(key, PlanPtr(p, &fftw_destroy_plan));
    return ins->second.get();
  }

 private:
  using PlanPtr = std::unique_ptr<std::remove_pointer_t<fftw_plan>, decltype(&fftw_destroy_plan)>;
  std::mutex mutex_;
  std::map<std::pair<std::vector<int>, int>, PlanPtr> plans_;
};

template <int Dim>
std::vector<Complex> fft_forward(const ScalarField<Dim>& f) {
  std::vector<int> shape(f.grid().shape().begin(), f.grid().shape().end());
  std::vector<Complex> in(f.values().begin(), f.values().end()), out(in.size());
  fftw_execute_dft(FftPlans::get(shape, FFTW_FORWARD), reinterpret_cast<fftw_complex*>(in.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

template <int Dim>
ScalarField<Dim> fft_backward(const Grid<Dim>& grid, std::vector<Complex> spec) {
  std::vector<int> shape(grid.shape().begin(), grid.shape().end());
  std::vector<Complex> out(spec.size());
  fftw_execute_dft(FftPlans::get(shape, FFTW_BACKWARD), reinterpret_cast<fftw_complex*>(spec.data()),
                   reinterpret_cast<fftw_complex*>(out.data()));
  ScalarField<Dim> f(grid);
  const double scale = 1.0 / static_cast<double>(grid.size());
  for (std::size_t k = 0; k < out.size(); ++k) f[k] = out[k].real() * scale;
  return f;
}

/// Centred-difference symbol sin(k h)/h of every Fourier index on each axis.
template <int Dim>
std::array<std::vector<double>, Dim> difference_symbols(const Grid<Dim>& grid) {
  std::array<std::vector<double>, Dim> sym;
  for (int a = 0; a < Dim; ++a) {
    const int n = grid.shape(a);
    const double h = grid.spacing(a);
    const double len = n * h;
    sym[a].resize(n);
    for (int i = 0; i < n; ++i) {
      const int m = (i <= n / 2) ? i : i - n;
      const double k = 2.0 * std::numbers::pi * m / len;
      double s = std::sin(k * h) / h;
      if (std::abs(s) < 1e-12 / h) s = 0.0;  // Nyquist
      sym[a][i] = s;
    }
  }
  return sym;
}

template <int Dim>
void require_torus_grid(const Grid<Dim>& grid) {
  for (int a = 0; a < Dim; ++a) require(grid.periodic(a), "spectral operator needs a fully periodic grid");
}

}  // namespace detail

template <int Dim>
VectorField<Dim> leray_project_periodic(const VectorField<Dim>& v) {
  const auto& grid = v.grid();
  detail::require_torus_grid(grid);
  const auto sym = detail::difference_symbols(grid);
  std::array<std::vector<detail::Complex>, Dim> spec;
  for (int a = 0; a < Dim; ++a) spec[a] = detail::fft_forward(v[a]);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto idx = grid.multi_index(k);
    double norm2 = 0.0;
    detail::Complex dot = 0.0;
    for (int a = 0; a < Dim; ++a) {
      const double s = sym[a][idx[a]];
      norm2 += s * s;
      dot += s * spec[a][k];
    }
    if (norm2 == 0.0) continue;
    for (int a = 0; a < Dim; ++a) spec[a][k] -= sym[a][idx[a]] * dot / norm2;
  }
  VectorField<Dim> out(grid);
  for (int a = 0; a < Dim; ++a) out[a] = detail::fft_backward(grid, std::move(spec[a]));
  return out;
}

/// Projection onto discretely divergence-free fields with vanishing normal
/// component on walls.  The factorization is reusable across fields.
template <int Dim>
class WalledProjector {
 public:
  using SpMat = Eigen::SparseMatrix<double>;

  explicit WalledProjector(const Grid<Dim>& grid) : grid_(grid) {
    const auto n = static_cast<Eigen::Index>(grid.size());
    for (int a = 0; a < Dim; ++a) deriv_[a] = derivative_matrix(a);
    SpMat lap(n, n);
    for (int a = 0; a < Dim; ++a) lap += SpMat(deriv_[a] * deriv_[a]);

    using RowMat = Eigen::SparseMatrix<double, Eigen::RowMajor>;
    const RowMat lap_rows = lap;
    std::array<RowMat, Dim> deriv_rows;
    for (int a = 0; a < Dim; ++a) deriv_rows[a] = deriv_[a];

    std::vector<Eigen::Triplet<double>> trip;
    Eigen::Index row = 0;
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto idx = grid.multi_index(k);
      bool wall = false;
      for (int a = 0; a < Dim; ++a) {
        if (grid.periodic(a) || (idx[a] != 0 && idx[a] != grid.shape(a) - 1)) continue;
        wall = true;
        rows_.push_back({k, a});
        for (RowMat::InnerIterator it(deriv_rows[a], static_cast<Eigen::Index>(k)); it; ++it)
          trip.emplace_back(row, it.col(), it.value());
        ++row;
      }
      if (!wall) {
        rows_.push_back({k, -1});
        for (RowMat::InnerIterator it(lap_rows, static_cast<Eigen::Index>(k)); it; ++it)
          trip.emplace_back(row, it.col(), it.value());
        ++row;
      }
    }
    system_.resize(row, n);
    system_.setFromTriplets(trip.begin(), trip.end());
    system_.makeCompressed();
    qr_.setPivotThreshold(1e-10);
    qr_.compute(system_);
    if (qr_.info() != Eigen::Success) throw NumericError("walled Leray projection: QR factorization failed");
  }

  VectorField<Dim> project(const VectorField<Dim>& v) const {
    require(v.grid().same_layout(grid_), "field grid does not match projector grid");
    const auto n = static_cast<Eigen::Index>(grid_.size());
    std::array<Eigen::VectorXd, Dim> comp;
    for (int a = 0; a < Dim; ++a) comp[a] = Eigen::Map<const Eigen::VectorXd>(v[a].values().data(), n);
    Eigen::VectorXd div = Eigen::VectorXd::Zero(n);
    for (int a = 0; a < Dim; ++a) div += deriv_[a] * comp[a];

    Eigen::VectorXd rhs(static_cast<Eigen::Index>(rows_.size()));
    for (std::size_t r = 0; r < rows_.size(); ++r) {
      const auto [k, axis] = rows_[r];
      rhs[static_cast<Eigen::Index>(r)] =
          axis < 0 ? div[static_cast<Eigen::Index>(k)] : comp[axis][static_cast<Eigen::Index>(k)];
    }
    const Eigen::VectorXd phi = qr_.solve(rhs);
    const double residual = (system_ * phi - rhs).norm();
    const double scale = std::max(rhs.norm(), 1e-300);
    if (residual > 1e-8 * scale && residual > 1e-12) {
      std::ostringstream msg;
      msg << "walled Leray projection: Neumann system incompatible with data (residual " << residual
          << ", relative " << residual / scale << ")";
      throw NumericError(msg.str());
    }
    VectorField<Dim> out(grid_);
    for (int a = 0; a < Dim; ++a) {
      const Eigen::VectorXd g = deriv_[a] * phi;
      for (Eigen::Index k = 0; k < n; ++k) out[a][static_cast<std::size_t>(k)] = comp[a][k] - g[k];
    }
    return out;
  }

 private:
  struct Row {
    std::size_t node;
    int axis;  // -1: divergence row; otherwise normal component on that axis
  };

  SpMat derivative_matrix(int axis) const {
    const int n = grid_.shape(axis);
    const double h = grid_.spacing(axis);
    std::vector<Eigen::Triplet<double>> trip;
    for (std::size_t k = 0; k < grid_.size(); ++k) {
      const auto idx = grid_.multi_index(k);
      const int c = idx[axis];
      auto col = [&](int off) {
        Index<Dim> j = idx;
        j[axis] = grid_.shifted(axis, c, off);
        return static_cast<Eigen::Index>(grid_.index(j));
      };
      const auto r = static_cast<Eigen::Index>(k);
      if (grid_.periodic(axis) || (c > 0 && c < n - 1)) {
        trip.emplace_back(r, col(1), 0.5 / h);
        trip.emplace_back(r, col(-1), -0.5 / h);
      } else if (c == 0) {
        trip.emplace_back(r, col(0), -1.5 / h);
        trip.emplace_back(r, col(1), 2.0 / h);
        trip.emplace_back(r, col(2), -0.5 / h);
      } else {
        trip.emplace_back(r, col(0), 1.5 / h);
        trip.emplace_back(r, col(-1), -2.0 / h);
        trip.emplace_back(r, col(-2), 0.5 / h);
      }
    }
    const auto sz = static_cast<Eigen::Index>(grid_.size());
    SpMat m(sz, sz);
    m.setFromTriplets(trip.begin(), trip.end());
    return m;
  }

  Grid<Dim> grid_;
  std::array<SpMat, Dim> deriv_;
  std::vector<Row> rows_;
  SpMat system_;
  Eigen::SparseQR<SpMat, Eigen::COLAMDOrdering<int>> qr_;
};

template <int Dim>
VectorField<Dim> leray_project(const VectorField<Dim>& v, const Domain<Dim>& domain) {
  if (!domain.has_walls()) return leray_project_periodic(v);
  return WalledProjector<Dim>(v.grid()).project(v);
}

namespace detail {

/// Solves -Lap(u) = rhs with homogeneous Dirichlet values on wall nodes
/// (compact second-order Laplacian, periodic where the grid is).
template <int Dim>
ScalarField<Dim> dirichlet_poisson(const ScalarField<Dim>& rhs) {
  const auto& grid = rhs.grid();
  const auto n = static_cast<Eigen::Index>(grid.size());
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd b(n);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const auto idx = grid.multi_index(k);
    const auto r = static_cast<Eigen::Index>(k);
    bool wall = false;
    for (int a = 0; a < Dim; ++a)
      if (!grid.periodic(a) && (idx[a] == 0 || idx[a] == grid.shape(a) - 1)) wall = true;
    if (wall) {
      trip.emplace_back(r, r, 1.0);
      b[r] = 0.0;
      continue;
    }
    double diag = 0.0;
    for (int a = 0; a < Dim; ++a) {
      const double w = 1.0 / (grid.spacing(a) * grid.spacing(a));
      diag += 2.0 * w;
      for (int off : {-1, 1}) {
        Index<Dim> j = idx;
        j[a] = grid.shifted(a, idx[a], off);
        trip.emplace_back(r, static_cast<Eigen::Index>(grid.index(j)), -w);
      }
    }
    trip.emplace_back(r, r, diag);
    b[r] = rhs[k];
  }
  Eigen::SparseMatrix<double> m(n, n);
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.compute(m);
  if (lu.info() != Eigen::Success) throw NumericError("Dirichlet Poisson factorization failed");
  const Eigen::VectorXd x = lu.solve(b);
  ScalarField<Dim> out(grid);
  for (std::size_t k = 0; k < grid.size(); ++k) out[k] = x[static_cast<Eigen::Index>(k)];
  return out;
}

}  // namespace detail

/// Velocity from 2D (scalar) vorticity: u = (-Lap)^{-1} curl(omega).
inline VectorField<2> inverse_curl(const ScalarField<2>& omega, const Domain<2>& domain) {
  const auto& grid = omega.grid();
  if (!domain.has_walls()) {
    detail::require_torus_grid(grid);
    const double mean = omega.mean();
    if (std::abs(mean) > 1e-10 * std::max(1.0, omega.max_abs()))
      throw UsageError("inverse_curl on the torus needs zero-mean vorticity (mean = " + std::to_string(mean) + ")");
    const auto sym = detail::difference_symbols(grid);
    auto w = detail::fft_forward(omega);
    std::vector<detail::Complex> u0(grid.size()), u1(grid.size());
    const detail::Complex i(0.0, 1.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto idx = grid.multi_index(k);
      const double sx = sym[0][idx[0]], sy = sym[1][idx[1]];
      const double norm2 = sx * sx + sy * sy;
      if (norm2 == 0.0) continue;
      const detail::Complex psi = w[k] / norm2;
      u0[k] = i * sy * psi;
      u1[k] = -i * sx * psi;
    }
    VectorField<2> u(grid);
    u[0] = detail::fft_backward(grid, std::move(u0));
    u[1] = detail::fft_backward(grid, std::move(u1));
    return u;
  }
  VectorField<2> u(grid);
  u[0] = detail::dirichlet_poisson(derivative(omega, 1));
  u[1] = detail::dirichlet_poisson(-1.0 * derivative(omega, 0));
  return u;
}

inline VectorField<3> inverse_curl(const VectorField<3>& omega, const Domain<3>& domain) {
  const auto& grid = omega.grid();
  if (!domain.has_walls()) {
    detail::require_torus_grid(grid);
    const auto sym = detail::difference_symbols(grid);
    std::array<std::vector<detail::Complex>, 3> w;
    for (int a = 0; a < 3; ++a) w[a] = detail::fft_forward(omega[a]);
    std::array<std::vector<detail::Complex>, 3> u;
    for (auto& c : u) c.assign(grid.size(), 0.0);
    const detail::Complex i(0.0, 1.0);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto idx = grid.multi_index(k);
      const double s[3] = {sym[0][idx[0]], sym[1][idx[1]], sym[2][idx[2]]};
      const double norm2 = s[0] * s[0] + s[1] * s[1] + s[2] * s[2];
      if (norm2 == 0.0) continue;
      u[0][k] = i * (s[1] * w[2][k] - s[2] * w[1][k]) / norm2;
      u[1][k] = i * (s[2] * w[0][k] - s[0] * w[2][k]) / norm2;
      u[2][k] = i * (s[0] * w[1][k] - s[1] * w[0][k]) / norm2;
    }
    VectorField<3> out(grid);
    for (int a = 0; a < 3; ++a) out[a] = detail::fft_backward(grid, std::move(u[a]));
    return out;
  }
  const VectorField<3> c = curl(omega, domain);
  VectorField<3> out(grid);
  for (int a = 0; a < 3; ++a) out[a] = detail::dirichlet_poisson(c[a]);
  return out;
}

}  // namespace slns

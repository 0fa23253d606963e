#pragma once

// Reference solutions used to check the Monte Carlo representations.  Kept
// apart from the estimators: nothing here touches flows or random numbers.

#include "slns/projection.hpp"

#include <cmath>
#include <numbers>
#include <optional>

namespace slns::reference {

inline constexpr double kPi = std::numbers::pi;

/// Decaying Taylor-Green vortex on [0, 2 pi]^2.
inline Vec<2> taylor_green(double nu, double t, const Vec<2>& x) {
  const double decay = std::exp(-2.0 * nu * t);
  return decay * Vec<2>(std::sin(x[0]) * std::cos(x[1]), -std::cos(x[0]) * std::sin(x[1]));
}

inline double taylor_green_vorticity(double nu, double t, const Vec<2>& x) {
  return 2.0 * std::exp(-2.0 * nu * t) * std::sin(x[0]) * std::sin(x[1]);
}

inline double taylor_green_pressure(double nu, double t, const Vec<2>& x) {
  return 0.25 * std::exp(-4.0 * nu * t) * (std::cos(2.0 * x[0]) + std::cos(2.0 * x[1]));
}

inline Domain<2> taylor_green_domain() { return Domain<2>::torus(Vec<2>(0.0, 0.0), Vec<2>(2 * kPi, 2 * kPi)); }

struct ChannelState {
  Vec<2> velocity;
  double vorticity;
};

/// Unidirectional decaying shear between no-slip walls at y = 0 and y = 1.
inline ChannelState channel_decay(double nu, double t, double y) {
  const double decay = std::exp(-nu * kPi * kPi * t);
  return {Vec<2>(decay * std::sin(kPi * y), 0.0), -kPi * decay * std::cos(kPi * y)};
}

inline Domain<2> channel_domain(double length_x = 1.0) {
  return Domain<2>::channel_x(Vec<2>(0.0, 0.0), Vec<2>(length_x, 1.0));
}

/// Dirichlet heat solution on y in [0, 1]: sum_k a_k exp(-nu k^2 pi^2 t) sin(k pi y),
/// with coefficients[k-1] = a_k.
inline double heat_slab(double nu, double t, double y, std::span<const double> coefficients) {
  double v = 0.0;
  for (std::size_t m = 0; m < coefficients.size(); ++m) {
    const double k = static_cast<double>(m + 1);
    v += coefficients[m] * std::exp(-nu * k * k * kPi * kPi * t) * std::sin(k * kPi * y);
  }
  return v;
}

/// Circulation of the Taylor-Green field along a closed polyline (last vertex
/// equal to the first), by composite Gauss-Legendre quadrature on each edge.
inline double taylor_green_circulation(double nu, double t, std::span<const Vec<2>> vertices,
                                       int panels_per_edge = 64) {
  static constexpr double kNode = 0.7745966692414834;  // sqrt(3/5)
  static constexpr std::array<double, 3> kX{-kNode, 0.0, kNode};
  static constexpr std::array<double, 3> kW{5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0};
  double total = 0.0;
  for (std::size_t e = 0; e + 1 < vertices.size(); ++e) {
    const Vec<2> a = vertices[e];
    const Vec<2> d = vertices[e + 1] - a;
    for (int p = 0; p < panels_per_edge; ++p) {
      for (int q = 0; q < 3; ++q) {
        const double s = (p + 0.5 + 0.5 * kX[q]) / panels_per_edge;
        total += 0.5 * kW[q] / panels_per_edge * taylor_green(nu, t, a + s * d).dot(d);
      }
    }
  }
  return total;
}

enum class CaseName { TaylorGreen, ChannelDecay, HeatSlab, FdGeneral };

inline std::string to_string(CaseName c) {
  switch (c) {
    case CaseName::TaylorGreen: return "taylor_green";
    case CaseName::ChannelDecay: return "channel_decay";
    case CaseName::HeatSlab: return "heat_slab";
    case CaseName::FdGeneral: return "fd_general";
  }
  return "?";
}

inline CaseName parse_case(const std::string& s) {
  if (s == "taylor_green") return CaseName::TaylorGreen;
  if (s == "channel_decay") return CaseName::ChannelDecay;
  if (s == "heat_slab") return CaseName::HeatSlab;
  if (s == "fd_general") return CaseName::FdGeneral;
  throw UsageError("unknown reference case '" + s +
                   "' (expected taylor_green, channel_decay, heat_slab or fd_general)");
}

struct ReferenceCase {
  CaseName name = CaseName::TaylorGreen;
  double nu = 0.1;
  std::vector<double> coefficients{1.0};  ///< heat_slab sine coefficients
  double amplitude = 1.0;

  void validate() const {
    require(nu > 0.0 && std::isfinite(nu), "reference case needs nu > 0");
    require(!coefficients.empty(), "heat_slab needs at least one coefficient");
  }
};

/// Semi-implicit periodic vorticity-streamfunction solver: Crank-Nicolson
/// diffusion and second-order Adams-Bashforth advection of div(u omega)
/// with centred differences.  Returns velocity snapshots every
/// `snapshot_every` steps.
inline FieldSeries<2> fd_vorticity_stream(const ScalarField<2>& omega0, double nu, double t_final, double dt,
                                          std::size_t snapshot_every = 1) {
  const auto& grid = omega0.grid();
  const Domain<2> domain = Domain<2>::torus(Vec<2>(grid.lower(0), grid.lower(1)), Vec<2>(grid.upper(0), grid.upper(1)));
  detail::require_torus_grid(grid);
  require(dt > 0.0 && t_final > 0.0, "fd_vorticity_stream needs positive dt and t_final");
  require(snapshot_every >= 1, "snapshot_every must be at least 1");
  const double ratio = t_final / dt;
  const auto steps = static_cast<std::size_t>(std::llround(ratio));
  require(std::abs(ratio - static_cast<double>(steps)) < 1e-9 * ratio, "dt must divide t_final");
  require(steps % snapshot_every == 0, "snapshot_every must divide the step count");

  std::array<std::vector<double>, 2> lap_sym;
  for (int a = 0; a < 2; ++a) {
    const int n = grid.shape(a);
    const double h = grid.spacing(a);
    lap_sym[a].resize(n);
    for (int i = 0; i < n; ++i) {
      const double s = std::sin(kPi * i / n);
      lap_sym[a][i] = -4.0 * s * s / (h * h);
    }
  }

  auto advection = [&](const ScalarField<2>& w, const VectorField<2>& u) {
    return derivative(product(u[0], w), 0) + derivative(product(u[1], w), 1);
  };

  ScalarField<2> w = omega0;
  VectorField<2> u = inverse_curl(w, domain);
  const double min_h = std::min(grid.spacing(0), grid.spacing(1));
  std::vector<double> times{0.0};
  std::vector<VectorField<2>> snaps{u};
  std::optional<ScalarField<2>> prev_adv;

  for (std::size_t n = 0; n < steps; ++n) {
    const double umax = u.max_abs();
    if (umax * dt * 2.0 / min_h > 1.0) {
      throw UsageError("fd_vorticity_stream: CFL violated; use dt <= " + std::to_string(0.5 * min_h / umax));
    }
    const ScalarField<2> adv = advection(w, u);
    ScalarField<2> explicit_part = prev_adv ? 1.5 * adv - 0.5 * *prev_adv : adv;
    prev_adv = adv;

    auto w_hat = detail::fft_forward(w);
    const auto e_hat = detail::fft_forward(explicit_part);
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const auto idx = grid.multi_index(k);
      const double lap = lap_sym[0][idx[0]] + lap_sym[1][idx[1]];
      w_hat[k] = ((1.0 + 0.5 * nu * dt * lap) * w_hat[k] - dt * e_hat[k]) / (1.0 - 0.5 * nu * dt * lap);
    }
    w = detail::fft_backward(grid, std::move(w_hat));
    u = inverse_curl(w, domain);
    if ((n + 1) % snapshot_every == 0) {
      times.push_back(static_cast<double>(n + 1) * dt);
      snaps.push_back(u);
    }
  }
  return FieldSeries<2>(std::move(times), std::move(snaps), nu);
}

}  // namespace slns::reference

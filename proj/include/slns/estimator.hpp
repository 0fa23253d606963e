#pragma once

// Monte Carlo estimators built on the backward flow: the scalar
// Feynman-Kac representation, the Weber-type velocity representation, the
// vorticity representation, the circulation identity and the martingale
// identity for the auxiliary field.

#include "slns/flow.hpp"

#include <functional>
#include <optional>

namespace slns {

/// Data entering the representations.  Only the callables a given
/// estimator needs must be set.
template <int Dim>
struct BoundaryData {
  using Point = Vec<Dim>;
  std::function<double(const Point&)> theta0;                   ///< scalar initial value
  std::function<double(const Point&, double)> g;                ///< scalar wall value
  std::function<double(const Point&, double)> potential_c;      ///< optional killing rate
  std::function<Point(const Point&)> u0;                        ///< initial velocity
  std::function<Point(const Point&, double)> w_tilde;           ///< wall trace of the auxiliary field
  std::function<CurlVec<Dim>(const Point&, double)> omega_tilde;  ///< vorticity on the parabolic boundary
  std::function<Point(const Point&, double)> wbar;              ///< auxiliary field in the interior
};

/// Multilinear lookup of a grid field.
template <int Dim>
std::function<Vec<Dim>(const Vec<Dim>&)> field_function(VectorField<Dim> f) {
  return [f = std::move(f)](const Vec<Dim>& x) { return f.sample(x); };
}

/// Cubic lookup of a grid field on a periodic grid.
template <int Dim>
std::function<Vec<Dim>(const Vec<Dim>&)> cubic_field_function(VectorField<Dim> f) {
  for (int a = 0; a < Dim; ++a) require(f.grid().periodic(a), "cubic lookup needs a periodic grid");
  return [f = std::move(f)](const Vec<Dim>& x) { return sample_cubic(f, x); };
}

template <int N>
struct McEstimate {
  Eigen::Matrix<double, N, 1> mean = Eigen::Matrix<double, N, 1>::Zero();
  Eigen::Matrix<double, N, 1> std_error = Eigen::Matrix<double, N, 1>::Zero();
  std::size_t n_samples = 0;
  std::uint64_t seed = 0;
  std::size_t rejected = 0;

  double value() const { return mean[0]; }
  double error() const { return std_error[0]; }
};

struct EstimatorConfig {
  std::size_t n_paths = 10000;
  double dt = 1e-3;
  std::uint64_t seed = 1;
  int workers = 1;
  ExitRule exit_rule = ExitRule::Bridge;
  /// Pairs each path with its sign-flipped partner.
  bool antithetic = false;
  /// Time at which u0 is given (a restart time for the periodic solver).
  double t_initial = 0.0;

  void validate() const {
    require(n_paths >= 2, "need at least 2 sample paths");
    require(!antithetic || (n_paths % 2 == 0 && n_paths >= 4), "antithetic sampling needs an even path count of at least 4");
    require(dt > 0.0 && std::isfinite(dt), "dt must be positive");
    require(t_initial >= 0.0, "t_initial must be non-negative");
  }
};

/// Sample mean and standard error.  Identical samples give the sample
/// itself and a zero error, bit for bit.  Antithetic samples are averaged in
/// pairs first so the error reflects the pair correlation.
template <int N>
McEstimate<N> summarize(std::span<const Eigen::Matrix<double, N, 1>> samples, bool antithetic, std::uint64_t seed) {
  using V = Eigen::Matrix<double, N, 1>;
  McEstimate<N> est;
  est.n_samples = samples.size();
  est.seed = seed;
  if (samples.empty()) return est;
  if (std::all_of(samples.begin(), samples.end(), [&](const V& v) { return v == samples[0]; })) {
    est.mean = samples[0];
    return est;
  }
  std::vector<V> units;
  if (antithetic) {
    units.reserve(samples.size() / 2);
    for (std::size_t i = 0; i + 1 < samples.size(); i += 2) units.push_back(0.5 * (samples[i] + samples[i + 1]));
  } else {
    units.assign(samples.begin(), samples.end());
  }
  const double m = static_cast<double>(units.size());
  const std::span<const V> us(units);
  const V mean = pairwise_sum(us, [](const V& v) -> V { return v; }) / m;
  const V sq = pairwise_sum(us, [&](const V& v) -> V { return (v - mean).array().square().matrix(); });
  est.mean = mean;
  est.std_error = (sq / (m - 1.0) / m).array().sqrt().matrix();
  return est;
}

namespace detail {

inline std::pair<std::uint64_t, double> path_stream(std::size_t i, bool antithetic) {
  if (!antithetic) return {i, 1.0};
  return {i / 2, (i % 2 == 0) ? 1.0 : -1.0};
}

template <int Dim>
void require_point(const Domain<Dim>& domain, const Vec<Dim>& x) {
  if (!contains(domain, x) && !on_boundary(domain, x)) throw UsageError("evaluation point is outside the domain");
}

template <int Dim>
void require_horizon(const FieldSeries<Dim>& series, double t0, double t) {
  require(t >= t0, "evaluation time precedes the initial time");
  if (t > t0) {
    require(series.covers(t0) && series.covers(t),
            "evaluation time " + std::to_string(t) + " exceeds the field series range");
  }
}

template <int Dim>
FlowOptions<Dim> flow_options(const EstimatorConfig& cfg, bool jacobian, double sign) {
  FlowOptions<Dim> opt;
  opt.exit_rule = cfg.exit_rule;
  opt.track_jacobian = jacobian;
  opt.noise_sign = sign;
  return opt;
}

}  // namespace detail

/// theta(x, t) = E[ exp(-int c) ( 1_{sigma>0} g(A_sigma, sigma) + 1_{sigma=0} theta0(A_0) ) ].
template <int Dim>
McEstimate<1> estimate_scalar_fk(const FieldSeries<Dim>& series, const Domain<Dim>& domain,
                                 const BoundaryData<Dim>& data, const Vec<Dim>& x, double t,
                                 const EstimatorConfig& cfg) {
  cfg.validate();
  require(static_cast<bool>(data.theta0), "scalar estimator needs theta0");
  require(!domain.has_walls() || static_cast<bool>(data.g), "scalar estimator needs wall data g on walled domains");
  require(t > 0.0, "scalar estimator needs t > 0");
  if (!contains(domain, x)) throw UsageError("scalar estimator: point is not inside the domain");
  detail::require_horizon(series, 0.0, t);

  using V = Eigen::Matrix<double, 1, 1>;
  std::vector<V> samples(cfg.n_paths);
  parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t i) {
    const auto [stream, sign] = detail::path_stream(i, cfg.antithetic);
    auto opt = detail::flow_options<Dim>(cfg, false, sign);
    if (data.potential_c) opt.integrand = data.potential_c;
    const auto rec = simulate_backward(series, domain, x, t, 0.0, cfg.dt, RngStream(cfg.seed, stream), opt);
    const double value = rec.exited ? data.g(rec.exit_point, rec.sigma) : data.theta0(rec.final_position);
    samples[i] = V(std::exp(-rec.integral) * value);
  });
  return summarize<1>(samples, cfg.antithetic, cfg.seed);
}

template <int Dim>
struct VelocityEstimate {
  VectorField<Dim> mean;       ///< unprojected representation E[...] at each node
  VectorField<Dim> std_error;  ///< per-component standard error
  /// The same paths with the wall term dropped, E[grad(A)^T 1_{sigma=0} u0(A_0)].
  VectorField<Dim> interior_only;
};

/// Unprojected Weber-type estimate at every node of `grid`:
///   E[ grad(A)^T ( 1_{sigma>0} w_tilde(A_sigma, sigma) + 1_{sigma=0} u0(A_0) ) ].
/// With include_boundary = false the wall term is dropped from `mean`.
/// Nodes on a wall return w_tilde there exactly.  Apply leray_project to
/// obtain u.
template <int Dim>
VelocityEstimate<Dim> estimate_weber_velocity(const FieldSeries<Dim>& series, const Domain<Dim>& domain,
                                              const BoundaryData<Dim>& data, const Grid<Dim>& grid, double t,
                                              const EstimatorConfig& cfg, bool include_boundary = true) {
  cfg.validate();
  require(static_cast<bool>(data.u0), "velocity estimator needs u0");
  require(!domain.has_walls() || static_cast<bool>(data.w_tilde),
          "velocity estimator needs the wall trace w_tilde on walled domains");
  require(t > cfg.t_initial, "velocity estimator needs t after the initial time");
  detail::require_horizon(series, cfg.t_initial, t);

  VelocityEstimate<Dim> out{VectorField<Dim>(grid), VectorField<Dim>(grid), VectorField<Dim>(grid)};
  using V = Vec<Dim>;
  parallel_for(grid.size(), cfg.workers, [&](std::size_t node) {
    const V x = grid.node(node);
    if (!contains(domain, x)) {
      out.mean.set(node, include_boundary ? data.w_tilde(x, t) : V::Zero());
      return;
    }
    const std::uint64_t seed = derive_seed(cfg.seed, node);
    std::vector<V> full(cfg.n_paths), interior(cfg.n_paths);
    for (std::size_t i = 0; i < cfg.n_paths; ++i) {
      const auto [stream, sign] = detail::path_stream(i, cfg.antithetic);
      const auto opt = detail::flow_options<Dim>(cfg, true, sign);
      const auto rec = simulate_backward(series, domain, x, t, cfg.t_initial, cfg.dt, RngStream(seed, stream), opt);
      if (rec.exited) {
        full[i] = rec.jacobian.transpose() * data.w_tilde(rec.exit_point, rec.sigma);
        interior[i] = V::Zero();
      } else {
        full[i] = rec.jacobian.transpose() * data.u0(rec.final_position);
        interior[i] = full[i];
      }
    }
    const auto est_full = summarize<Dim>(full, cfg.antithetic, seed);
    const auto est_interior = summarize<Dim>(interior, cfg.antithetic, seed);
    const auto& est = include_boundary ? est_full : est_interior;
    out.mean.set(node, est.mean);
    out.std_error.set(node, est.std_error);
    out.interior_only.set(node, est_interior.mean);
  });
  return out;
}

/// Vorticity at (x, t): E[omega_tilde(sigma, A_sigma)] in 2D, and
/// E[(grad A)^{-1} omega_tilde(sigma, A_sigma)] in 3D.  Points on a wall
/// return omega_tilde there.
template <int Dim>
McEstimate<kCurlDim<Dim>> estimate_vorticity(const FieldSeries<Dim>& series, const Domain<Dim>& domain,
                                             const BoundaryData<Dim>& data, const Vec<Dim>& x, double t,
                                             const EstimatorConfig& cfg) {
  constexpr int C = kCurlDim<Dim>;
  using V = Eigen::Matrix<double, C, 1>;
  cfg.validate();
  require(static_cast<bool>(data.omega_tilde), "vorticity estimator needs omega_tilde");
  require(t > 0.0, "vorticity estimator needs t > 0");
  detail::require_point(domain, x);
  if (!contains(domain, x)) {
    McEstimate<C> est;
    est.mean = data.omega_tilde(x, t);
    est.n_samples = cfg.n_paths;
    est.seed = cfg.seed;
    return est;
  }
  detail::require_horizon(series, 0.0, t);

  std::vector<V> samples(cfg.n_paths);
  std::vector<char> accepted(cfg.n_paths, 1);
  parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t i) {
    const auto [stream, sign] = detail::path_stream(i, cfg.antithetic);
    const auto opt = detail::flow_options<Dim>(cfg, Dim == 3, sign);
    const auto rec = simulate_backward(series, domain, x, t, 0.0, cfg.dt, RngStream(cfg.seed, stream), opt);
    const V value = data.omega_tilde(rec.final_position, rec.end_time);
    if constexpr (Dim == 2) {
      samples[i] = value;
    } else {
      const double det = rec.jacobian.determinant();
      if (!(std::abs(det) >= 1e-8)) {
        accepted[i] = 0;
        samples[i] = V::Zero();
        return;
      }
      samples[i] = rec.jacobian.inverse() * value;
    }
  });

  std::vector<V> kept;
  kept.reserve(samples.size());
  bool pairs_intact = true;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (accepted[i]) kept.push_back(samples[i]);
    else pairs_intact = false;
  }
  const std::size_t rejected = samples.size() - kept.size();
  if (static_cast<double>(rejected) > 0.01 * static_cast<double>(samples.size())) {
    throw NumericError("vorticity estimator: " + std::to_string(rejected) + " of " + std::to_string(samples.size()) +
                       " paths had a near-singular flow Jacobian");
  }
  auto est = summarize<C>(kept, cfg.antithetic && pairs_intact, cfg.seed);
  est.rejected = rejected;
  return est;
}

/// Closed polyline in the plane: consecutive vertices joined by straight
/// edges, with the last vertex equal to the first.
struct CurveSpec {
  std::vector<Vec<2>> vertices;
  /// Maximal edge length after refinement.
  double max_segment = 0.05;

  void validate() const {
    require(vertices.size() >= 4, "a closed curve needs at least 3 distinct vertices plus the closing vertex");
    require((vertices.front() - vertices.back()).norm() <= 1e-12 * (1.0 + vertices.front().norm()),
            "curve must be closed: last vertex must equal the first");
    require(max_segment > 0.0, "max_segment must be positive");
  }

  /// Refined vertex list; the closing vertex is dropped.
  std::vector<Vec<2>> refined() const {
    std::vector<Vec<2>> pts;
    for (std::size_t e = 0; e + 1 < vertices.size(); ++e) {
      const Vec<2> a = vertices[e];
      const Vec<2> b = vertices[e + 1];
      const int pieces = std::max(1, static_cast<int>(std::ceil((b - a).norm() / max_segment)));
      for (int m = 0; m < pieces; ++m) pts.push_back(a + (b - a) * (static_cast<double>(m) / pieces));
    }
    return pts;
  }

  static CurveSpec square(const Vec<2>& centre, double side, double max_segment = 0.05) {
    const double h = 0.5 * side;
    CurveSpec c;
    c.vertices = {centre + Vec<2>(-h, -h), centre + Vec<2>(h, -h), centre + Vec<2>(h, h), centre + Vec<2>(-h, h),
                  centre + Vec<2>(-h, -h)};
    c.max_segment = max_segment;
    return c;
  }
};

/// Trapezoid rule for the circulation of `field` along the closed polyline
/// through `nodes` (unwrapped coordinates).
inline double polyline_circulation(std::span<const Vec<2>> nodes, const std::function<Vec<2>(const Vec<2>&)>& field) {
  std::vector<double> terms(nodes.size());
  std::vector<Vec<2>> values(nodes.size());
  for (std::size_t j = 0; j < nodes.size(); ++j) values[j] = field(nodes[j]);
  for (std::size_t j = 0; j < nodes.size(); ++j) {
    const std::size_t k = (j + 1) % nodes.size();
    terms[j] = 0.5 * (values[j] + values[k]).dot(nodes[k] - nodes[j]);
  }
  return pairwise_sum(std::span<const double>(terms));
}

/// Circulation of u_t along the curve, as E[ circulation of u0 along the
/// curve transported backward by one shared Wiener path ].  Torus only.
inline McEstimate<1> estimate_circulation(const FieldSeries<2>& series, const Domain<2>& domain,
                                          const BoundaryData<2>& data, const CurveSpec& curve, double t,
                                          const EstimatorConfig& cfg, std::vector<double>* samples_out = nullptr) {
  cfg.validate();
  curve.validate();
  require(!domain.has_walls(), "circulation estimator is defined on the torus only");
  require(static_cast<bool>(data.u0), "circulation estimator needs u0");
  require(t > 0.0, "circulation estimator needs t > 0");
  detail::require_horizon(series, 0.0, t);
  const auto nodes = curve.refined();

  using V = Eigen::Matrix<double, 1, 1>;
  std::vector<V> samples(cfg.n_paths);
  parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t i) {
    const auto [stream, sign] = detail::path_stream(i, cfg.antithetic);
    const auto opt = detail::flow_options<2>(cfg, false, sign);
    const RngStream rng(cfg.seed, stream);
    std::vector<Vec<2>> moved(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j)
      moved[j] = simulate_backward(series, domain, nodes[j], t, 0.0, cfg.dt, rng, opt).final_position;
    samples[i] = V(polyline_circulation(moved, data.u0));
  });
  if (samples_out) {
    samples_out->resize(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) (*samples_out)[i] = samples[i][0];
  }
  return summarize<1>(samples, cfg.antithetic, cfg.seed);
}

/// Estimates E[ grad(A_{sigma v s, t})^T wbar(A_{sigma v s, t}, sigma v s) ]
/// for each stopping level s; every entry should equal wbar(x, t).
template <int Dim>
std::vector<McEstimate<Dim>> check_martingale_identity(const FieldSeries<Dim>& series, const Domain<Dim>& domain,
                                                       const BoundaryData<Dim>& data, const Vec<Dim>& x, double t,
                                                       std::span<const double> stop_levels,
                                                       const EstimatorConfig& cfg) {
  cfg.validate();
  require(static_cast<bool>(data.wbar), "martingale check needs the auxiliary field wbar");
  if (!contains(domain, x)) throw UsageError("martingale check: point is not inside the domain");
  std::vector<McEstimate<Dim>> out;
  for (std::size_t m = 0; m < stop_levels.size(); ++m) {
    const double s = stop_levels[m];
    require(s >= 0.0 && s <= t, "stop levels must lie in [0, t]");
    const std::uint64_t seed = derive_seed(cfg.seed, m);
    if (s == t) {
      McEstimate<Dim> est;
      est.mean = data.wbar(x, t);
      est.n_samples = cfg.n_paths;
      est.seed = seed;
      out.push_back(est);
      continue;
    }
    detail::require_horizon(series, s, t);
    std::vector<Vec<Dim>> samples(cfg.n_paths);
    parallel_for(cfg.n_paths, cfg.workers, [&](std::size_t i) {
      const auto [stream, sign] = detail::path_stream(i, cfg.antithetic);
      const auto opt = detail::flow_options<Dim>(cfg, true, sign);
      const auto rec = simulate_backward(series, domain, x, t, s, cfg.dt, RngStream(seed, stream), opt);
      const Vec<Dim> value = (rec.exited && data.w_tilde) ? data.w_tilde(rec.exit_point, rec.sigma)
                                                          : data.wbar(rec.final_position, rec.end_time);
      samples[i] = rec.jacobian.transpose() * value;
    });
    out.push_back(summarize<Dim>(samples, cfg.antithetic, seed));
  }
  return out;
}

}  // namespace slns

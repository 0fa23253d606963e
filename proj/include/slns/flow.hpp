#pragma once

// Backward noisy characteristics
//
//   A_{s,t}(x) = x - int_s^t u_r(A_{r,t}(x)) dr - sqrt(2 nu) (W_t - W_s),
//
// integrated from s = t down to s_min with Euler-Maruyama, stopped at the
// backward exit time, together with the Jacobian
//
//   grad A_{s,t}(x) = I - int_s^t grad u_r(A_{r,t}(x)) grad A_{r,t}(x) dr.

#include "slns/domain.hpp"
#include "slns/field.hpp"
#include "slns/rng.hpp"

#include <functional>
#include <optional>

namespace slns {

/// How a step is tested for leaving the domain.
enum class ExitRule {
  Segment,  ///< only the straight segment between consecutive positions
  Bridge,   ///< segment test plus the Brownian-bridge crossing probability per wall
};

inline std::string to_string(ExitRule r) { return r == ExitRule::Segment ? "segment" : "bridge"; }

inline ExitRule parse_exit_rule(const std::string& s) {
  if (s == "segment") return ExitRule::Segment;
  if (s == "bridge") return ExitRule::Bridge;
  throw UsageError("unknown exit rule '" + s + "' (expected segment or bridge)");
}

template <int Dim>
struct FlowOptions {
  ExitRule exit_rule = ExitRule::Bridge;
  bool track_jacobian = true;
  bool record_positions = false;
  /// -1 flips every increment (antithetic partner).
  double noise_sign = 1.0;
  /// Added to the step counter used to key the random stream, so a path
  /// restarted at an intermediate time can reuse the same increments.
  std::uint64_t step_offset = 0;
  /// Optional integrand f(x, s) accumulated along the path with the
  /// trapezoid rule up to the stopping time.
  std::function<double(const Vec<Dim>&, double)> integrand;
};

template <int Dim>
struct PathRecord {
  Vec<Dim> start;
  double t = 0.0;
  double dt = 0.0;
  std::vector<Vec<Dim>> positions;   ///< s = t, t - dt, ... (newest first); only when recorded
  std::vector<Vec<Dim>> increments;  ///< Brownian increments per step; only when recorded
  Vec<Dim> final_position;           ///< A at end_time (the exit point when exited)
  Mat<Dim> jacobian = Mat<Dim>::Identity();  ///< grad A_{end_time, t}(x)
  double sigma = 0.0;                ///< backward exit time, 0 when not exited
  bool exited = false;
  Vec<Dim> exit_point;
  int wall_axis = -1;
  int wall_side = 0;
  double end_time = 0.0;             ///< max(sigma, s_min)
  double integral = 0.0;             ///< trapezoid integral of options.integrand
  std::size_t steps = 0;
};

/// One explicit-midpoint step of the backward Jacobian ODE over a step of
/// length h, with velocity gradients at both ends of the step.
template <int Dim>
Mat<Dim> jacobian_step(const Mat<Dim>& jac, const Mat<Dim>& grad_now, const Mat<Dim>& grad_next, double h) {
  const Mat<Dim> half = jac - 0.5 * h * grad_now * jac;
  return jac - h * (0.5 * (grad_now + grad_next)) * half;
}

/// grad A_{s,t} from velocity gradients sampled at r = t, t - dt, ..., s.
template <int Dim>
Mat<Dim> transport_jacobian(std::span<const Mat<Dim>> grad_u_path, double dt) {
  Mat<Dim> jac = Mat<Dim>::Identity();
  for (std::size_t k = 0; k + 1 < grad_u_path.size(); ++k)
    jac = jacobian_step<Dim>(jac, grad_u_path[k], grad_u_path[k + 1], dt);
  return jac;
}

namespace detail {

inline std::size_t step_count(double t, double s_min, double dt) {
  require(dt > 0.0 && std::isfinite(dt), "time step must be positive");
  require(s_min >= 0.0 && s_min <= t, "need 0 <= s_min <= t");
  const double ratio = (t - s_min) / dt;
  const double steps = std::round(ratio);
  require(std::abs(ratio - steps) <= 1e-9 * std::max(1.0, ratio), "dt must divide t - s_min");
  return static_cast<std::size_t>(steps);
}

template <int Dim>
Vec<Dim> increment(const RngStream& rng, std::uint64_t step, double sqrt_dt) {
  Vec<Dim> z;
  const auto p0 = rng.normal_pair(step, 0);
  z[0] = p0[0];
  z[1] = p0[1];
  if constexpr (Dim == 3) z[2] = rng.normal_pair(step, 1)[0];
  return sqrt_dt * z;
}

/// Brownian-bridge crossing test for a step whose endpoints are both inside.
/// Returns the crossing (lambda = d0 / (d0 + d1)) with the smallest lambda.
template <int Dim>
std::optional<CrossingRecord<Dim>> bridge_crossing(const Domain<Dim>& domain, const Vec<Dim>& x0, const Vec<Dim>& x1,
                                                   double variance, const RngStream& rng, std::uint64_t step) {
  std::optional<CrossingRecord<Dim>> best;
  if (variance <= 0.0) return best;
  for (int a = 0; a < Dim; ++a) {
    if (domain.periodic(a)) continue;
    for (int side : {-1, 1}) {
      const double wall = side < 0 ? domain.lower()[a] : domain.upper()[a];
      const double d0 = side < 0 ? x0[a] - wall : wall - x0[a];
      const double d1 = side < 0 ? x1[a] - wall : wall - x1[a];
      if (d0 <= 0.0 || d1 <= 0.0) continue;
      // Crossing probability of a Brownian bridge with variance rate
      // `variance` (per unit time) times dt.
      const double p = std::exp(-2.0 * d0 * d1 / variance);
      const double u = rng.uniform(step, static_cast<std::uint32_t>(2 * a + (side > 0 ? 1 : 0)));
      if (u >= p) continue;
      const double lambda = d0 / (d0 + d1);
      if (best && lambda >= best->lambda) continue;
      CrossingRecord<Dim> rec;
      rec.lambda = lambda;
      rec.point = x0 + lambda * (x1 - x0);
      rec.point[a] = wall;
      rec.wall_axis = a;
      rec.wall_side = side;
      best = rec;
    }
  }
  return best;
}

}  // namespace detail

/// Integrates one backward characteristic from (x, t) down to s_min.
template <int Dim>
PathRecord<Dim> simulate_backward(const FieldSeries<Dim>& series, const Domain<Dim>& domain, const Vec<Dim>& x,
                                  double t, double s_min, double dt, const RngStream& rng,
                                  const FlowOptions<Dim>& options = {}) {
  if (!contains(domain, x)) throw UsageError("simulate_backward: start point is not inside the domain");
  const std::size_t steps = detail::step_count(t, s_min, dt);
  if (steps > 0) {
    require(series.covers(t) && series.covers(s_min), "simulate_backward: [s_min, t] exceeds the field series range");
  }
  const double nu = series.nu();
  const double noise = std::sqrt(2.0 * nu);
  const double sqrt_dt = std::sqrt(dt);

  PathRecord<Dim> rec;
  rec.start = x;
  rec.t = t;
  rec.dt = dt;
  if (options.record_positions) {
    rec.positions.reserve(steps + 1);
    rec.positions.push_back(x);
  }

  Vec<Dim> pos = x;
  Mat<Dim> jac = Mat<Dim>::Identity();
  Mat<Dim> grad_now;
  if (options.track_jacobian && steps > 0) grad_now = velocity_gradient(series, domain, pos, t);
  double f_now = options.integrand ? options.integrand(pos, t) : 0.0;
  double integral = 0.0;

  for (std::size_t k = 0; k < steps; ++k) {
    const double s = t - static_cast<double>(k) * dt;
    const double s_next = (k + 1 == steps) ? s_min : t - static_cast<double>(k + 1) * dt;
    const Vec<Dim> vel = series.sample(pos, s);
    const Vec<Dim> dw = options.noise_sign * detail::increment<Dim>(rng, options.step_offset + k, sqrt_dt);
    const Vec<Dim> next = pos - vel * dt - noise * dw;
    if (options.record_positions) rec.increments.push_back(dw);

    std::optional<CrossingRecord<Dim>> hit;
    if (domain.has_walls()) {
      hit = boundary_crossing(domain, pos, next);
      if (options.exit_rule == ExitRule::Bridge) {
        auto bridged = detail::bridge_crossing(domain, pos, next, 2.0 * nu * dt, rng, options.step_offset + k);
        if (bridged && (!hit || bridged->lambda < hit->lambda)) hit = bridged;
      }
    }

    if (hit) {
      const double sigma = s - hit->lambda * dt;
      if (options.track_jacobian) {
        const Mat<Dim> grad_exit = velocity_gradient(series, domain, hit->point, sigma);
        jac = jacobian_step<Dim>(jac, grad_now, grad_exit, hit->lambda * dt);
      }
      if (options.integrand) integral += 0.5 * (f_now + options.integrand(hit->point, sigma)) * hit->lambda * dt;
      rec.exited = true;
      rec.sigma = sigma;
      rec.exit_point = hit->point;
      rec.wall_axis = hit->wall_axis;
      rec.wall_side = hit->wall_side;
      rec.end_time = sigma;
      rec.final_position = hit->point;
      rec.jacobian = jac;
      rec.integral = integral;
      rec.steps = k + 1;
      if (options.record_positions) rec.positions.push_back(hit->point);
      return rec;
    }

    if (options.track_jacobian) {
      const Mat<Dim> grad_next = velocity_gradient(series, domain, next, s_next);
      jac = jacobian_step<Dim>(jac, grad_now, grad_next, dt);
      grad_now = grad_next;
    }
    if (options.integrand) {
      const double f_next = options.integrand(next, s_next);
      integral += 0.5 * (f_now + f_next) * dt;
      f_now = f_next;
    }
    pos = next;
    if (options.record_positions) rec.positions.push_back(pos);
  }

  rec.sigma = 0.0;
  rec.exited = false;
  rec.end_time = s_min;
  rec.final_position = pos;
  rec.jacobian = jac;
  rec.integral = integral;
  rec.steps = steps;
  return rec;
}

}  // namespace slns

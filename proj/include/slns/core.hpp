#pragma once

// Shared vocabulary for the library: small fixed-size linear algebra,
// error types, deterministic reductions and the trajectory fan-out helper.

#include <Eigen/Dense>

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <span>
#include <stdexcept>
#include <string>
#include <thread>
#include <type_traits>
#include <vector>

namespace slns {

template <int Dim>
using Vec = Eigen::Matrix<double, Dim, 1>;

template <int Dim>
using Mat = Eigen::Matrix<double, Dim, Dim>;

/// Number of vorticity components: a scalar in 2D, a vector in 3D.
template <int Dim>
inline constexpr int kCurlDim = (Dim == 2) ? 1 : 3;

template <int Dim>
using CurlVec = Eigen::Matrix<double, kCurlDim<Dim>, 1>;

/// Caller violated a precondition (bad arguments, bad configuration).
class UsageError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A numerical procedure failed (singular solve, divergence, too many rejections).
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline void require(bool cond, const std::string& what) {
  if (!cond) throw UsageError(what);
}

template <int Dim>
Vec<Dim> to_point(std::span<const double> coords) {
  if (coords.size() != static_cast<std::size_t>(Dim)) {
    throw UsageError("point has " + std::to_string(coords.size()) +
                     " coordinates, expected " + std::to_string(Dim));
  }
  Vec<Dim> p;
  for (int a = 0; a < Dim; ++a) p[a] = coords[a];
  return p;
}

/// Pairwise (tree) summation over a contiguous range.  The association
/// order depends only on the length, so results are reproducible.
template <class T, class Proj>
auto pairwise_sum(std::span<const T> xs, Proj proj) -> decltype(proj(xs[0])) {
  using R = decltype(proj(xs[0]));
  constexpr std::size_t kLeaf = 8;
  if (xs.size() <= kLeaf) {
    if (xs.empty()) {
      if constexpr (std::is_arithmetic_v<R>) return R{0};
      else return R::Zero();
    }
    R acc = proj(xs[0]);
    for (std::size_t i = 1; i < xs.size(); ++i) acc = acc + proj(xs[i]);
    return acc;
  }
  const std::size_t half = xs.size() / 2;
  return pairwise_sum(xs.first(half), proj) + pairwise_sum(xs.subspan(half), proj);
}

inline double pairwise_sum(std::span<const double> xs) {
  return pairwise_sum(xs, [](double v) { return v; });
}

/// Runs body(i) for i in [0, n) on `workers` threads with a static block
/// partition.  Bodies must write only to slots they own.
template <class Body>
void parallel_for(std::size_t n, int workers, Body&& body) {
  workers = std::max(1, workers);
  if (workers == 1 || n < 2) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  const std::size_t nw = std::min<std::size_t>(static_cast<std::size_t>(workers), n);
  std::vector<std::exception_ptr> errors(nw);
  {
    std::vector<std::jthread> pool;
    pool.reserve(nw);
    for (std::size_t w = 0; w < nw; ++w) {
      pool.emplace_back([&, w] {
        const std::size_t lo = n * w / nw;
        const std::size_t hi = n * (w + 1) / nw;
        try {
          for (std::size_t i = lo; i < hi; ++i) body(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

/// Worker count used when the caller passes 0.
inline int default_workers() {
  const unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : static_cast<int>(hc);
}

}  // namespace slns

#ifndef NMAR_OPTIMIZE_HPP
#define NMAR_OPTIMIZE_HPP

// Finite-difference derivatives and a BFGS minimizer with a strong-Wolfe
// line search. Objectives may return +inf outside their domain.

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <utility>

#include <Eigen/Dense>

namespace nmar::optim {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Objective = std::function<double(const Vector&)>;

/// Per-coordinate step max(base, base * |x_i|).
inline double fd_step(double xi, double base = 1e-5) { return std::max(base, base * std::abs(xi)); }

inline Vector central_gradient(const Objective& f, const Vector& x, double base = 1e-5) {
  Vector g(x.size());
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i], base);
    xp[i] = x[i] + h;
    const double fp = f(xp);
    xp[i] = x[i] - h;
    const double fm = f(xp);
    xp[i] = x[i];
    g[i] = (fp - fm) / (2.0 * h);
  }
  return g;
}

inline Vector forward_gradient(const Objective& f, const Vector& x, double base = 1e-5) {
  Vector g(x.size());
  const double f0 = f(x);
  Vector xp = x;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    const double h = fd_step(x[i], base);
    xp[i] = x[i] + h;
    g[i] = (f(xp) - f0) / h;
    xp[i] = x[i];
  }
  return g;
}

/// Central-difference Hessian, symmetrized as (H + H^T) / 2.
inline Matrix central_hessian(const Objective& f, const Vector& x, double base = 1e-5) {
  const Eigen::Index n = x.size();
  Matrix H(n, n);
  Vector h(n);
  for (Eigen::Index i = 0; i < n; ++i) h[i] = fd_step(x[i], base);
  const double f0 = f(x);
  Vector xp = x;
  for (Eigen::Index i = 0; i < n; ++i) {
    xp[i] = x[i] + h[i];
    const double fp = f(xp);
    xp[i] = x[i] - h[i];
    const double fm = f(xp);
    xp[i] = x[i];
    H(i, i) = (fp - 2.0 * f0 + fm) / (h[i] * h[i]);
    for (Eigen::Index j = 0; j < i; ++j) {
      auto eval = [&](double si, double sj) {
        xp[i] = x[i] + si * h[i];
        xp[j] = x[j] + sj * h[j];
        const double v = f(xp);
        xp[i] = x[i];
        xp[j] = x[j];
        return v;
      };
      const double v = (eval(1, 1) - eval(1, -1) - eval(-1, 1) + eval(-1, -1)) / (4.0 * h[i] * h[j]);
      H(i, j) = v;
      H(j, i) = v;
    }
  }
  return 0.5 * (H + H.transpose());
}

struct BfgsOptions {
  double tol = 1e-6;  // stop when |grad| <= tol * (1 + |f|)
  int max_iter = 1000;
  double fd_base = 1e-5;
  double max_step = 5.0;  // cap on the infinity norm of the first trial step
};

struct BfgsResult {
  Vector x;
  double f = std::numeric_limits<double>::infinity();
  Vector grad;
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
  std::string message;
};

namespace detail {

struct LinePoint {
  double alpha;
  double f;
  double slope;  // directional derivative
  Vector g;
};

}  // namespace detail

/// Minimizes `f` from `x0`. Gradients are central finite differences.
inline BfgsResult bfgs(const Objective& objective, Vector x0, const BfgsOptions& opt = {}) {
  BfgsResult res;
  int evals = 0;
  Objective f = [&](const Vector& v) {
    ++evals;
    const double r = objective(v);
    return std::isnan(r) ? std::numeric_limits<double>::infinity() : r;
  };
  auto grad = [&](const Vector& v) { return central_gradient(f, v, opt.fd_base); };

  const Eigen::Index n = x0.size();
  Vector x = std::move(x0);
  double fx = f(x);
  if (!std::isfinite(fx)) {
    res.x = x;
    res.f = fx;
    res.message = "objective not finite at start";
    res.evaluations = evals;
    return res;
  }
  Vector g = grad(x);
  Matrix Hinv = Matrix::Identity(n, n);
  bool fresh = true;  // Hinv is the unscaled identity
  constexpr double c1 = 1e-4;
  constexpr double c2 = 0.9;

  auto done = [&]() { return g.norm() <= opt.tol * (1.0 + std::abs(fx)); };

  int it = 0;
  for (; it < opt.max_iter && !done(); ++it) {
    Vector d = -Hinv * g;
    double d0 = g.dot(d);
    if (!(d0 < 0.0)) {
      Hinv.setIdentity();
      fresh = true;
      d = -g;
      d0 = g.dot(d);
    }
    double alpha = 1.0;
    if (fresh) alpha = std::min(1.0, opt.max_step / std::max(d.lpNorm<Eigen::Infinity>(), 1e-300));

    auto probe = [&](double a) {
      detail::LinePoint p{a, f(x + a * d), 0.0, Vector()};
      if (std::isfinite(p.f)) {
        p.g = grad(x + a * d);
        p.slope = p.g.dot(d);
      }
      return p;
    };

    // Strong-Wolfe search, bracketing phase then bisection zoom.
    detail::LinePoint lo{0.0, fx, d0, g};
    std::optional<detail::LinePoint> accepted;
    double hi_alpha = std::numeric_limits<double>::infinity();
    detail::LinePoint cur = probe(alpha);
    for (int ls = 0; ls < 60; ++ls) {
      const bool armijo = std::isfinite(cur.f) && cur.f <= fx + c1 * cur.alpha * d0;
      if (!armijo || (cur.f >= lo.f && cur.alpha > lo.alpha)) {
        hi_alpha = cur.alpha;
      } else if (std::abs(cur.slope) <= -c2 * d0) {
        accepted = cur;
        break;
      } else if (std::isfinite(hi_alpha) ? cur.slope * (hi_alpha - cur.alpha) >= 0.0
                                          : cur.slope > 0.0) {
        hi_alpha = lo.alpha;
        lo = cur;
      } else {
        lo = cur;
      }
      const double next = std::isfinite(hi_alpha) ? 0.5 * (lo.alpha + hi_alpha) : 2.0 * cur.alpha;
      if (std::isfinite(hi_alpha) && std::abs(hi_alpha - lo.alpha) < 1e-16 * std::max(1.0, lo.alpha))
        break;
      cur = probe(next);
    }
    if (!accepted && lo.alpha > 0.0 && lo.f < fx) accepted = lo;  // Armijo-only progress
    if (!accepted) {
      if (!fresh) {
        Hinv.setIdentity();
        fresh = true;
        continue;
      }
      res.message = "line search failed";
      break;
    }

    const Vector s = accepted->alpha * d;
    const Vector y = accepted->g - g;
    x += s;
    fx = accepted->f;
    g = accepted->g;
    const double sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      if (fresh) {
        Hinv *= sy / y.squaredNorm();
        fresh = false;
      }
      const double rho = 1.0 / sy;
      const Matrix I = Matrix::Identity(n, n);
      Hinv = (I - rho * s * y.transpose()) * Hinv * (I - rho * y * s.transpose()) + rho * s * s.transpose();
    }
  }

  res.x = std::move(x);
  res.f = fx;
  res.grad = std::move(g);
  res.iterations = it;
  res.evaluations = evals;
  res.converged = done();
  if (res.converged)
    res.message = "gradient tolerance reached";
  else if (res.message.empty())
    res.message = "iteration limit reached";
  return res;
}

}  // namespace nmar::optim

#endif  // NMAR_OPTIMIZE_HPP

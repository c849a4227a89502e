#include "modgrad/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "modgrad/errors.hpp"

namespace modgrad {

SymMatrix SymMatrix::identity(std::size_t n) {
  SymMatrix m(n);
  for (std::size_t i = 0; i < n; ++i) m.set(i, i, 1.0);
  return m;
}

SymMatrix SymMatrix::diagonal(std::span<const double> d) {
  SymMatrix m(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) m.set(i, i, d[i]);
  return m;
}

SymMatrix SymMatrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  SymMatrix m(rows.size());
  std::size_t i = 0;
  for (const auto& row : rows) {
    if (row.size() != rows.size()) throw DimensionError("SymMatrix::from_rows: matrix is not square");
    std::size_t j = 0;
    for (double v : row) {
      if (j >= i) m.set(i, j, v);
      ++j;
    }
    ++i;
  }
  return m;
}

Vec SymMatrix::multiply(std::span<const double> v) const {
  if (v.size() != n_) throw DimensionError("SymMatrix::multiply: dimension mismatch");
  Vec out(n_, 0.0);
  for (std::size_t i = 0; i < n_; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n_; ++j) s += data_[i * n_ + j] * v[j];
    out[i] = s;
  }
  return out;
}

double SymMatrix::quadratic_form(std::span<const double> v) const { return dot(multiply(v), v); }

double SymMatrix::frobenius_norm() const {
  double s = 0.0;
  for (double v : data_) s += v * v;
  return std::sqrt(s);
}

double SymMatrix::trace() const {
  double s = 0.0;
  for (std::size_t i = 0; i < n_; ++i) s += data_[i * n_ + i];
  return s;
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double norm(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return std::sqrt(s);
}

// Cyclic Jacobi (Rutishauser's variant): rotations are applied to a working
// copy; the diagonal converges to the spectrum.
Vec eigen_all(const SymMatrix& m) {
  const std::size_t n = m.size();
  if (n == 0) return {};
  std::vector<double> a(m.data().begin(), m.data().end());
  auto at = [&](std::size_t i, std::size_t j) -> double& { return a[i * n + j]; };

  Vec d(n), b(n), z(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) d[i] = b[i] = at(i, i);

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off += std::abs(at(p, q));
    if (off == 0.0) {
      std::sort(d.begin(), d.end());
      return d;
    }
    const double threshold = sweep < 3 ? 0.2 * off / static_cast<double>(n * n) : 0.0;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(d[p]) + g == std::abs(d[p]) && std::abs(d[q]) + g == std::abs(d[q])) {
          at(p, q) = 0.0;
          continue;
        }
        if (std::abs(apq) <= threshold) continue;
        double h = d[q] - d[p];
        double t;
        if (std::abs(h) + g == std::abs(h)) {
          t = apq / h;
        } else {
          const double theta = 0.5 * h / apq;
          t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        const double tau = s / (1.0 + c);
        h = t * apq;
        z[p] -= h;
        z[q] += h;
        d[p] -= h;
        d[q] += h;
        at(p, q) = 0.0;
        auto rotate = [&](std::size_t i, std::size_t j, std::size_t k, std::size_t l) {
          const double gg = at(i, j);
          const double hh = at(k, l);
          at(i, j) = gg - s * (hh + gg * tau);
          at(k, l) = hh + s * (gg - hh * tau);
        };
        for (std::size_t j = 0; j < p; ++j) rotate(j, p, j, q);
        for (std::size_t j = p + 1; j < q; ++j) rotate(p, j, j, q);
        for (std::size_t j = q + 1; j < n; ++j) rotate(p, j, q, j);
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      b[i] += z[i];
      d[i] = b[i];
      z[i] = 0.0;
    }
  }
  throw NumericFailure("eigen_all: Jacobi sweep cap exceeded");
}

double eigen_smallest(const SymMatrix& m) {
  if (m.size() == 0) throw DimensionError("eigen_smallest: empty matrix");
  if (m.size() == 1) return m(0, 0);
  return eigen_all(m).front();
}

Vec solve_dense(std::vector<double> a, Vec b) {
  const std::size_t n = b.size();
  if (a.size() != n * n) throw DimensionError("solve_dense: dimension mismatch");
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r)
      if (std::abs(a[r * n + col]) > std::abs(a[piv * n + col])) piv = r;
    if (a[piv * n + col] == 0.0) throw NumericFailure("solve_dense: singular matrix");
    if (piv != col) {
      for (std::size_t j = 0; j < n; ++j) std::swap(a[col * n + j], a[piv * n + j]);
      std::swap(b[col], b[piv]);
    }
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = a[r * n + col] / a[col * n + col];
      if (f == 0.0) continue;
      for (std::size_t j = col; j < n; ++j) a[r * n + j] -= f * a[col * n + j];
      b[r] -= f * b[col];
    }
  }
  Vec x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t j = i + 1; j < n; ++j) s -= a[i * n + j] * x[j];
    x[i] = s / a[i * n + i];
  }
  return x;
}

namespace {

struct SimpsonPanel {
  double a, m, b;
  double fa, fm, fb;
  double whole;
};

constexpr int kMaxDepth = 50;

double simpson(double a, double b, double fa, double fm, double fb) {
  return (b - a) / 6.0 * (fa + 4.0 * fm + fb);
}

double adapt(const std::function<double(double)>& g, const SimpsonPanel& p, double tol, int depth,
             double& accumulated) {
  const double lm = 0.5 * (p.a + p.m);
  const double rm = 0.5 * (p.m + p.b);
  const double flm = g(lm);
  const double frm = g(rm);
  const double left = simpson(p.a, p.m, p.fa, flm, p.fm);
  const double right = simpson(p.m, p.b, p.fm, frm, p.fb);
  const double refined = left + right;
  const double delta = refined - p.whole;
  const double roundoff = 64.0 * std::numeric_limits<double>::epsilon() * std::abs(refined);
  if (std::abs(delta) <= 15.0 * tol || std::abs(delta) <= roundoff || p.m - p.a <= 0.0) {
    const double est = refined + delta / 15.0;
    accumulated += est;
    return est;
  }
  if (depth >= kMaxDepth) {
    throw QuadratureFailure("integrate_adaptive: subdivision limit reached near t=" + std::to_string(p.m),
                            accumulated + refined);
  }
  const double l = adapt(g, {p.a, lm, p.m, p.fa, flm, p.fm, left}, 0.5 * tol, depth + 1, accumulated);
  const double r = adapt(g, {p.m, rm, p.b, p.fm, frm, p.fb, right}, 0.5 * tol, depth + 1, accumulated);
  return l + r;
}

}  // namespace

double integrate_adaptive(const std::function<double(double)>& g, double a, double b, double tol) {
  if (!(a <= b)) throw DomainError("integrate_adaptive: requires a <= b");
  if (!std::isfinite(a) || !std::isfinite(b)) throw DomainError("integrate_adaptive: bounds must be finite");
  if (a == b) return 0.0;
  const double m = 0.5 * (a + b);
  const double fa = g(a), fm = g(m), fb = g(b);
  double accumulated = 0.0;
  return adapt(g, {a, m, b, fa, fm, fb, simpson(a, b, fa, fm, fb)}, tol, 0, accumulated);
}

}  // namespace modgrad

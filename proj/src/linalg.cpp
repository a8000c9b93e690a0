#include "bodx/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bodx/common.hpp"

namespace bodx::linalg {

namespace {

// Lower Cholesky into row-major full storage. Returns false on a
// non-positive pivot (matrix not numerically PD).
bool cholesky_lower(const SymMatrix& m, std::vector<double>& l) {
  const int n = m.dim();
  l.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = m.at(i, j);
      for (int k = 0; k < j; ++k) s -= l[i * n + k] * l[j * n + k];
      if (i == j) {
        if (!(s > 0.0)) return false;
        l[i * n + i] = std::sqrt(s);
      } else {
        l[i * n + j] = s / l[j * n + j];
      }
    }
  }
  return true;
}

void check_finite(const SymMatrix& m) {
  for (int i = 0; i < m.dim(); ++i)
    for (int j = 0; j <= i; ++j)
      if (!std::isfinite(m.at(i, j)))
        throw std::invalid_argument("symmetric matrix has non-finite entries");
}

}  // namespace

LogDetResult log_det_psd(const SymMatrix& m, double rcond_threshold) {
  require(m.dim() >= 1, "log_det_psd: dimension must be >= 1");
  check_finite(m);
  const int n = m.dim();
  std::vector<double> l;
  if (!cholesky_lower(m, l)) return LogDetResult::ill(0.0);
  double dmin = l[0], dmax = l[0];
  double logdet = 0.0;
  for (int i = 0; i < n; ++i) {
    const double d = l[i * n + i];
    dmin = std::min(dmin, d);
    dmax = std::max(dmax, d);
    logdet += std::log(d);
  }
  const double ratio = dmin / dmax;
  const double rcond = ratio * ratio;
  if (!(rcond >= rcond_threshold)) return LogDetResult::ill(rcond);
  return LogDetResult::value(2.0 * logdet, rcond);
}

void jacobi_eigen(const SymMatrix& m, std::vector<double>& values,
                  std::vector<double>& vectors) {
  check_finite(m);
  const int n = m.dim();
  std::vector<double> a(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[i * n + j] = m.at(i, j);
  vectors.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) vectors[i * n + i] = 1.0;

  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += a[i * n + j] * a[i * n + j];
    if (off <= 1e-300) break;
    double scale = 0.0;
    for (int i = 0; i < n; ++i) scale = std::max(scale, std::abs(a[i * n + i]));
    if (std::sqrt(off) <= 1e-15 * std::max(scale, 1e-300)) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[p * n + q];
        if (apq == 0.0) continue;
        const double app = a[p * n + p];
        const double aqq = a[q * n + q];
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[k * n + p];
          const double akq = a[k * n + q];
          a[k * n + p] = c * akp - s * akq;
          a[k * n + q] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[p * n + k];
          const double aqk = a[q * n + k];
          a[p * n + k] = c * apk - s * aqk;
          a[q * n + k] = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = vectors[k * n + p];
          const double vkq = vectors[k * n + q];
          vectors[k * n + p] = c * vkp - s * vkq;
          vectors[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  values.resize(n);
  for (int i = 0; i < n; ++i) values[i] = a[i * n + i];
  // Sort ascending, permuting eigenvector columns alongside.
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::sort(order.begin(), order.end(),
            [&](int x, int y) { return values[x] < values[y]; });
  std::vector<double> sv(n);
  std::vector<double> svec(static_cast<std::size_t>(n) * n);
  for (int j = 0; j < n; ++j) {
    sv[j] = values[order[j]];
    for (int i = 0; i < n; ++i) svec[i * n + j] = vectors[i * n + order[j]];
  }
  values = std::move(sv);
  vectors = std::move(svec);
}

std::vector<double> jacobi_eigenvalues(const SymMatrix& m) {
  std::vector<double> values, vectors;
  jacobi_eigen(m, values, vectors);
  return values;
}

bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol) {
  require(a.dim() == b.dim(), "loewner_leq: dimension mismatch");
  SymMatrix d(a.dim());
  for (int i = 0; i < a.dim(); ++i)
    for (int j = 0; j <= i; ++j) d.set(i, j, b.at(i, j) - a.at(i, j));
  const auto ev = jacobi_eigenvalues(d);
  return ev.front() >= -tol;
}

DenseChol DenseChol::factor(const std::vector<double>& a, int n, double jitter) {
  DenseChol ch;
  ch.n_ = n;
  ch.l_.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = a[static_cast<std::size_t>(i) * n + j] + (i == j ? jitter : 0.0);
      for (int k = 0; k < j; ++k) s -= ch.l_[i * n + k] * ch.l_[j * n + k];
      if (i == j) {
        if (!(s > 0.0)) return ch;  // ok_ stays false
        ch.l_[i * n + i] = std::sqrt(s);
      } else {
        ch.l_[i * n + j] = s / ch.l_[j * n + j];
      }
    }
  }
  ch.ok_ = true;
  return ch;
}

double DenseChol::logdet() const {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += std::log(l_[static_cast<std::size_t>(i) * n_ + i]);
  return 2.0 * s;
}

std::vector<double> DenseChol::solve(const std::vector<double>& b) const {
  std::vector<double> y(b);
  for (int i = 0; i < n_; ++i) {
    double s = y[i];
    for (int k = 0; k < i; ++k) s -= l_[static_cast<std::size_t>(i) * n_ + k] * y[k];
    y[i] = s / l_[static_cast<std::size_t>(i) * n_ + i];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    double s = y[i];
    for (int k = i + 1; k < n_; ++k) s -= l_[static_cast<std::size_t>(k) * n_ + i] * y[k];
    y[i] = s / l_[static_cast<std::size_t>(i) * n_ + i];
  }
  return y;
}

}  // namespace bodx::linalg

#ifndef BODX_LINALG_HPP
#define BODX_LINALG_HPP

#include <vector>

// Small dense symmetric kernel for information matrices. The deliberate core
// is log_det_psd's conditioning verdict: a Cholesky that cannot complete, or
// completes with a tiny pivot-ratio condition estimate, is a numerically
// rank-deficient matrix and is reported as IllConditioned rather than as a
// value or an exception. Callers route such matrices to analytic bounds.
namespace bodx::linalg {

// Symmetric matrix, packed lower triangle (row-major), so symmetry is exact
// by construction.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(int dim) : dim_(dim), a_(idx(dim, 0), 0.0) {}

  int dim() const { return dim_; }
  double at(int i, int j) const { return i >= j ? a_[idx(i, j)] : a_[idx(j, i)]; }
  void set(int i, int j, double v) { a_[i >= j ? idx(i, j) : idx(j, i)] = v; }
  void add(int i, int j, double v) { a_[i >= j ? idx(i, j) : idx(j, i)] += v; }

 private:
  static std::size_t idx(int i, int j) {
    return static_cast<std::size_t>(i) * (i + 1) / 2 + j;
  }
  int dim_ = 0;
  std::vector<double> a_;
};

struct LogDetResult {
  enum class Kind { Value, IllConditioned };
  Kind kind = Kind::IllConditioned;
  double logdet = 0.0;  // valid when kind == Value
  double rcond = 0.0;   // (min L_ii / max L_ii)^2; 0 when Cholesky failed

  static LogDetResult value(double ld, double rc) {
    return {Kind::Value, ld, rc};
  }
  static LogDetResult ill(double rc) { return {Kind::IllConditioned, 0.0, rc}; }
  bool ok() const { return kind == Kind::Value; }
};

// Cholesky-based log-determinant with a conditioning verdict. Throws
// std::invalid_argument on non-finite entries; never throws for merely
// singular or indefinite input.
LogDetResult log_det_psd(const SymMatrix& m, double rcond_threshold);

// True iff a <= b in the Loewner order: smallest eigenvalue of b - a is
// >= -tol (cyclic Jacobi; dimensions must match).
bool loewner_leq(const SymMatrix& a, const SymMatrix& b, double tol = 1e-10);

// Eigenvalues in ascending order (cyclic Jacobi sweeps).
std::vector<double> jacobi_eigenvalues(const SymMatrix& m);

// As above but also accumulates the rotations; column j of `vectors` (stored
// row-major, n x n) is the eigenvector for eigenvalue j.
void jacobi_eigen(const SymMatrix& m, std::vector<double>& values,
                  std::vector<double>& vectors);

// General dense SPD Cholesky for larger systems (emulator kernel matrices).
// Row-major input; `jitter` is added to the diagonal before factoring.
class DenseChol {
 public:
  static DenseChol factor(const std::vector<double>& a, int n, double jitter);
  bool ok() const { return ok_; }
  int n() const { return n_; }
  double logdet() const;                      // 2 * sum log L_ii
  std::vector<double> solve(const std::vector<double>& b) const;

 private:
  int n_ = 0;
  bool ok_ = false;
  std::vector<double> l_;  // row-major lower triangle (full storage)
};

}  // namespace bodx::linalg

#endif

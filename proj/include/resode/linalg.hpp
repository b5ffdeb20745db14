#pragma once

#include <Eigen/Dense>

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace resode {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Complex = std::complex<double>;

/// Thrown when the shifted-QR iteration runs out of its iteration budget.
/// Eigenvalues deflated before the failure are kept as partial results.
class EigenSolverError : public std::runtime_error {
 public:
  EigenSolverError(const std::string& msg, std::vector<Complex> partial)
      : std::runtime_error(msg), partial_(std::move(partial)) {}

  bool has_partial_results() const { return !partial_.empty(); }
  const std::vector<Complex>& partial_eigenvalues() const { return partial_; }

 private:
  std::vector<Complex> partial_;
};

bool all_finite(const Matrix& a);
bool all_finite(const Vector& v);

/// Product with an explicit conformance check (Eigen alone would assert).
Matrix matmul(const Matrix& a, const Matrix& b);

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, swept until
/// the off-diagonal Frobenius norm drops below tol. Returned in descending
/// order. Inputs asymmetric beyond tol are rejected.
std::vector<double> symmetric_eigenvalues(const Matrix& a, double tol = 1e-10);

/// Eigenvalues of a general square matrix: balancing, Householder reduction
/// to Hessenberg form, then Francis double-shift QR with deflation.
/// tol controls the subdiagonal deflation threshold (relative); max_iter
/// bounds the total number of QR steps (0 means 100 * dimension).
std::vector<Complex> general_eigenvalues(const Matrix& a, double tol = 1e-10,
                                         int max_iter = 0);

/// Largest real part over a spectrum.
double spectral_abscissa(const std::vector<Complex>& eigs);

}  // namespace resode

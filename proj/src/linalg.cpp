#include "resode/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace resode {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

// Iterative diagonal similarity scaling (radix-2), leaves eigenvalues intact.
void balance(Matrix& a) {
  const int n = static_cast<int>(a.rows());
  const double radix = 2.0;
  const double sq = radix * radix;
  bool done = false;
  while (!done) {
    done = true;
    for (int i = 0; i < n; ++i) {
      double r = 0.0;
      double c = 0.0;
      for (int j = 0; j < n; ++j) {
        if (j == i) continue;
        c += std::abs(a(j, i));
        r += std::abs(a(i, j));
      }
      if (c == 0.0 || r == 0.0) continue;
      double g = r / radix;
      double f = 1.0;
      const double s = c + r;
      while (c < g) {
        f *= radix;
        c *= sq;
      }
      g = r * radix;
      while (c > g) {
        f /= radix;
        c /= sq;
      }
      if ((c + r) / f < 0.95 * s) {
        done = false;
        a.row(i) *= 1.0 / f;
        a.col(i) *= f;
      }
    }
  }
}

// Householder similarity reduction to upper Hessenberg form.
void hessenberg(Matrix& a) {
  const int n = static_cast<int>(a.rows());
  for (int k = 0; k + 2 < n; ++k) {
    const int m = n - k - 1;  // length of the column segment below the diagonal
    Vector x = a.block(k + 1, k, m, 1);
    const double norm = x.norm();
    if (norm == 0.0) continue;
    const double alpha = x(0) >= 0.0 ? -norm : norm;
    Vector v = x;
    v(0) -= alpha;
    const double vnorm = v.norm();
    if (vnorm == 0.0) continue;
    v /= vnorm;
    a.block(k + 1, k, m, n - k) -=
        2.0 * v * (v.transpose() * a.block(k + 1, k, m, n - k));
    a.block(0, k + 1, n, m) -=
        2.0 * (a.block(0, k + 1, n, m) * v) * v.transpose();
    a(k + 1, k) = alpha;
    for (int i = k + 2; i < n; ++i) a(i, k) = 0.0;
  }
}

// Francis double-shift QR on an upper Hessenberg matrix. Deflated eigenvalues
// accumulate in `found`; subdiagonal entries are considered negligible
// relative to their diagonal neighbours at threshold `tol`.
std::vector<Complex> hessenberg_qr(Matrix a, double tol, long max_steps) {
  const int n = static_cast<int>(a.rows());
  std::vector<Complex> found;
  found.reserve(n);

  const double deflate = std::max(tol, kEps);
  const double anorm = a.cwiseAbs().sum();
  if (anorm == 0.0) {
    found.assign(n, Complex(0.0, 0.0));
    return found;
  }

  int nn = n - 1;    // high index of the active block
  double t = 0.0;    // accumulated exceptional shifts
  long steps = 0;
  int its = 0;

  while (nn >= 0) {
    // Look for a negligible subdiagonal entry splitting the active block.
    int l = nn;
    while (l > 0) {
      double s = std::abs(a(l - 1, l - 1)) + std::abs(a(l, l));
      if (s == 0.0) s = anorm;
      if (std::abs(a(l, l - 1)) <= deflate * s) {
        a(l, l - 1) = 0.0;
        break;
      }
      --l;
    }

    double x = a(nn, nn);
    if (l == nn) {  // 1x1 block: one real eigenvalue
      found.emplace_back(x + t, 0.0);
      --nn;
      its = 0;
      continue;
    }
    double y = a(nn - 1, nn - 1);
    double w = a(nn, nn - 1) * a(nn - 1, nn);
    if (l == nn - 1) {  // 2x2 block: real or conjugate pair
      double p = 0.5 * (y - x);
      double q = p * p + w;
      double z = std::sqrt(std::abs(q));
      x += t;
      if (q >= 0.0) {
        z = p + std::copysign(z, p);
        found.emplace_back(x + z, 0.0);
        found.emplace_back(z != 0.0 ? x - w / z : x + z, 0.0);
      } else {
        found.emplace_back(x + p, z);
        found.emplace_back(x + p, -z);
      }
      nn -= 2;
      its = 0;
      continue;
    }

    if (++steps > max_steps) {
      throw EigenSolverError("shifted QR did not converge within max_iter",
                             found);
    }
    if (its != 0 && its % 10 == 0) {  // exceptional shift
      t += x;
      for (int i = 0; i <= nn; ++i) a(i, i) -= x;
      double s = std::abs(a(nn, nn - 1)) + std::abs(a(nn - 1, nn - 2));
      x = y = 0.75 * s;
      w = -0.4375 * s * s;
    }
    ++its;

    // Look for two consecutive small subdiagonal elements.
    double p = 0.0, q = 0.0, r = 0.0;
    int m;
    for (m = nn - 2; m >= l; --m) {
      const double z = a(m, m);
      double rr = x - z;
      double ss = y - z;
      p = (rr * ss - w) / a(m + 1, m) + a(m, m + 1);
      q = a(m + 1, m + 1) - z - rr - ss;
      r = a(m + 2, m + 1);
      const double scale = std::abs(p) + std::abs(q) + std::abs(r);
      p /= scale;
      q /= scale;
      r /= scale;
      if (m == l) break;
      const double u = std::abs(a(m, m - 1)) * (std::abs(q) + std::abs(r));
      const double v = std::abs(p) * (std::abs(a(m - 1, m - 1)) +
                                      std::abs(z) + std::abs(a(m + 1, m + 1)));
      if (u <= kEps * v) break;
    }
    for (int i = m + 2; i <= nn; ++i) {
      a(i, i - 2) = 0.0;
      if (i != m + 2) a(i, i - 3) = 0.0;
    }

    // Chase the bulge down the active block.
    for (int k = m; k <= nn - 1; ++k) {
      if (k != m) {
        p = a(k, k - 1);
        q = a(k + 1, k - 1);
        r = (k != nn - 1) ? a(k + 2, k - 1) : 0.0;
        x = std::abs(p) + std::abs(q) + std::abs(r);
        if (x != 0.0) {
          p /= x;
          q /= x;
          r /= x;
        }
      }
      const double s = std::copysign(std::sqrt(p * p + q * q + r * r), p);
      if (s == 0.0) continue;
      if (k == m) {
        if (l != m) a(k, k - 1) = -a(k, k - 1);
      } else {
        a(k, k - 1) = -s * x;
      }
      p += s;
      x = p / s;
      y = q / s;
      const double z = r / s;
      q /= p;
      r /= p;
      for (int j = k; j <= nn; ++j) {  // row transform
        double pp = a(k, j) + q * a(k + 1, j);
        if (k != nn - 1) {
          pp += r * a(k + 2, j);
          a(k + 2, j) -= pp * z;
        }
        a(k + 1, j) -= pp * y;
        a(k, j) -= pp * x;
      }
      const int mmin = std::min(nn, k + 3);
      for (int i = l; i <= mmin; ++i) {  // column transform
        double pp = x * a(i, k) + y * a(i, k + 1);
        if (k != nn - 1) {
          pp += z * a(i, k + 2);
          a(i, k + 2) -= pp * r;
        }
        a(i, k + 1) -= pp * q;
        a(i, k) -= pp;
      }
    }
  }
  return found;
}

}  // namespace

bool all_finite(const Matrix& a) { return a.allFinite(); }
bool all_finite(const Vector& v) { return v.allFinite(); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw std::invalid_argument(
        "matmul: inner dimensions differ (" + std::to_string(a.rows()) + "x" +
        std::to_string(a.cols()) + " * " + std::to_string(b.rows()) + "x" +
        std::to_string(b.cols()) + ")");
  }
  return a * b;
}

std::vector<double> symmetric_eigenvalues(const Matrix& a, double tol) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("symmetric_eigenvalues: matrix not square");
  if (a.rows() == 0)
    throw std::invalid_argument("symmetric_eigenvalues: empty matrix");
  if (!(tol > 0.0))
    throw std::invalid_argument("symmetric_eigenvalues: tol must be positive");

  const int n = static_cast<int>(a.rows());
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > tol) {
    throw std::invalid_argument(
        "symmetric_eigenvalues: asymmetry " + std::to_string(asym) +
        " exceeds tol " + std::to_string(tol));
  }

  Matrix b = 0.5 * (a + a.transpose());
  auto off_norm = [&]() {
    double s = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) s += 2.0 * b(i, j) * b(i, j);
    return std::sqrt(s);
  };

  int sweeps = 0;
  while (off_norm() > tol) {
    if (++sweeps > 100)
      throw std::runtime_error("symmetric_eigenvalues: Jacobi sweep limit");
    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = b(p, q);
        if (apq == 0.0) continue;
        const double theta = (b(q, q) - b(p, p)) / (2.0 * apq);
        const double tt =
            std::copysign(1.0, theta) /
            (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(tt * tt + 1.0);
        const double s = tt * c;
        for (int i = 0; i < n; ++i) {
          if (i == p || i == q) continue;
          const double bip = b(i, p);
          const double biq = b(i, q);
          b(i, p) = c * bip - s * biq;
          b(i, q) = s * bip + c * biq;
          b(p, i) = b(i, p);
          b(q, i) = b(i, q);
        }
        b(p, p) -= tt * apq;
        b(q, q) += tt * apq;
        b(p, q) = 0.0;
        b(q, p) = 0.0;
      }
    }
  }

  std::vector<double> eigs(n);
  for (int i = 0; i < n; ++i) eigs[i] = b(i, i);
  std::sort(eigs.rbegin(), eigs.rend());
  return eigs;
}

std::vector<Complex> general_eigenvalues(const Matrix& a, double tol,
                                         int max_iter) {
  if (a.rows() != a.cols())
    throw std::invalid_argument("general_eigenvalues: matrix not square");
  if (a.rows() == 0)
    throw std::invalid_argument("general_eigenvalues: empty matrix");
  if (a.rows() > 256)
    throw std::invalid_argument(
        "general_eigenvalues: dimension exceeds the supported bound of 256");
  if (!(tol > 0.0))
    throw std::invalid_argument("general_eigenvalues: tol must be positive");

  const int n = static_cast<int>(a.rows());
  if (n == 1) return {Complex(a(0, 0), 0.0)};

  Matrix h = a;
  balance(h);
  hessenberg(h);
  const long budget = max_iter > 0 ? max_iter : 100L * n;
  return hessenberg_qr(std::move(h), tol, budget);
}

double spectral_abscissa(const std::vector<Complex>& eigs) {
  if (eigs.empty())
    throw std::invalid_argument("spectral_abscissa: empty spectrum");
  double best = eigs.front().real();
  for (const auto& e : eigs) best = std::max(best, e.real());
  return best;
}

}  // namespace resode

#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <random>

#include "ncflab/error.hpp"

namespace ncflab {

using cplx = std::complex<double>;
/// Element of the finite trace algebra M_n.
using MatElem = Eigen::MatrixXcd;
using RVec = Eigen::VectorXd;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kInf = std::numeric_limits<double>::infinity();

inline bool all_finite(const MatElem& x) {
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      if (!std::isfinite(x(i, j).real()) || !std::isfinite(x(i, j).imag())) return false;
  return true;
}

inline void require_square(const MatElem& x) {
  require(x.rows() == x.cols() && x.rows() > 0, "matrix must be square and non-empty");
}

/// Normalized trace Tr(x)/n.
inline cplx tau(const MatElem& x) {
  require_square(x);
  return x.trace() / static_cast<double>(x.rows());
}

inline RVec singular_values(const MatElem& x) {
  require_square(x);
  require(all_finite(x), "non-finite matrix entries");
  if (x.rows() == 1) return RVec::Constant(1, std::abs(x(0, 0)));
  Eigen::JacobiSVD<MatElem> svd(x);
  return svd.singularValues();
}

inline double op_norm(const MatElem& x) { return singular_values(x).maxCoeff(); }

/// (tau |s|^p)^(1/p) for a vector of singular values s; p may be +inf.
inline double schatten_from_singular(const RVec& s, double p) {
  if (std::isinf(p)) return s.size() ? s.maxCoeff() : 0.0;
  double acc = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) acc += std::pow(s[i], p);
  return std::pow(acc / static_cast<double>(s.size()), 1.0 / p);
}

/// Schatten p-norm with respect to the normalized trace.
inline double schatten_norm(const MatElem& x, double p) {
  require(p >= 1.0, "schatten_norm requires p >= 1");
  require_square(x);
  require(all_finite(x), "non-finite matrix entries");
  if (p == 2.0) return std::sqrt(x.squaredNorm() / static_cast<double>(x.rows()));
  return schatten_from_singular(singular_values(x), p);
}

struct Polar {
  MatElem u;  // unitary, completed on the kernel
  MatElem m;  // |x|
};

/// x = u |x| with u unitary; rank-deficient inputs get an orthonormal completion.
inline Polar polar_decompose(const MatElem& x) {
  require_square(x);
  require(all_finite(x), "non-finite matrix entries");
  Eigen::JacobiSVD<MatElem> svd(x, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const MatElem& w = svd.matrixU();
  const MatElem& v = svd.matrixV();
  Polar out;
  out.u = w * v.adjoint();
  out.m = v * svd.singularValues().cast<cplx>().asDiagonal() * v.adjoint();
  out.m = 0.5 * (out.m + out.m.adjoint());
  return out;
}

/// |x| = (x* x)^(1/2).
inline MatElem abs_value(const MatElem& x) { return polar_decompose(x).m; }

inline bool is_self_adjoint(const MatElem& a, double tol) {
  if (a.rows() != a.cols()) return false;
  const double scale = std::max(1.0, a.norm());
  return (a - a.adjoint()).norm() <= tol * scale;
}

struct HermEig {
  RVec values;     // ascending
  MatElem vectors; // columns
};

/// Spectral decomposition of a self-adjoint matrix.
inline HermEig herm_eig(const MatElem& a, double tol = 1e-10) {
  require_square(a);
  require(all_finite(a), "non-finite matrix entries");
  require(is_self_adjoint(a, tol), "matrix is not self-adjoint");
  MatElem h = 0.5 * (a + a.adjoint());
  Eigen::SelfAdjointEigenSolver<MatElem> es(h);
  if (es.info() != Eigen::Success) throw numeric_error("eigensolver failed");
  return {es.eigenvalues(), es.eigenvectors()};
}

inline double min_eigenvalue(const MatElem& a, double tol = 1e-10) {
  return herm_eig(a, tol).values.minCoeff();
}

/// a <= b in the PSD order, up to tol on the smallest eigenvalue of b - a.
inline bool psd_leq(const MatElem& a, const MatElem& b, double tol) {
  require(a.rows() == b.rows() && a.cols() == b.cols(), "shape mismatch");
  require(is_self_adjoint(a, 1e-10) && is_self_adjoint(b, 1e-10),
          "psd_leq requires self-adjoint arguments");
  return min_eigenvalue(b - a) >= -tol;
}

/// Functional calculus f(a) for self-adjoint a.
template <class F>
MatElem func_calc(const MatElem& a, F&& f) {
  HermEig e = herm_eig(a);
  RVec fv(e.values.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) fv[i] = f(e.values[i]);
  return e.vectors * fv.cast<cplx>().asDiagonal() * e.vectors.adjoint();
}

/// a^alpha for PSD a. Eigenvalues above -1e-10 ||a|| are clipped to zero.
inline MatElem mat_power(const MatElem& a, double alpha) {
  HermEig e = herm_eig(a);
  const double scale = std::max(std::abs(e.values.minCoeff()), std::abs(e.values.maxCoeff()));
  const double floor = -1e-10 * scale;
  if (e.values.minCoeff() < floor) throw invalid_input("mat_power: matrix is not positive semidefinite");
  RVec fv(e.values.size());
  for (Eigen::Index i = 0; i < fv.size(); ++i) {
    const double v = std::max(e.values[i], 0.0);
    if (v == 0.0 && alpha <= 0.0) throw invalid_input("mat_power: singular matrix with non-positive exponent");
    fv[i] = (v == 0.0) ? 0.0 : std::pow(v, alpha);
  }
  MatElem out = e.vectors * fv.cast<cplx>().asDiagonal() * e.vectors.adjoint();
  return 0.5 * (out + out.adjoint());
}

// Random instances used by tests, fuzzers and experiment families.

inline MatElem random_gaussian(int n, std::mt19937_64& rng, double sigma = 1.0) {
  std::normal_distribution<double> nd(0.0, sigma);
  MatElem x(n, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = cplx(nd(rng), nd(rng));
  return x;
}

inline MatElem random_hermitian(int n, std::mt19937_64& rng) {
  MatElem g = random_gaussian(n, rng);
  return 0.5 * (g + g.adjoint());
}

/// c* c for Gaussian c, optionally rank-limited.
inline MatElem random_psd(int n, std::mt19937_64& rng, int rank = -1) {
  const int r = rank < 0 ? n : rank;
  std::normal_distribution<double> nd(0.0, 1.0);
  MatElem c(r, n);
  for (int j = 0; j < n; ++j)
    for (int i = 0; i < r; ++i) c(i, j) = cplx(nd(rng), nd(rng));
  MatElem out = c.adjoint() * c;
  return 0.5 * (out + out.adjoint());
}

inline MatElem random_unitary(int n, std::mt19937_64& rng) {
  Eigen::HouseholderQR<MatElem> qr(random_gaussian(n, rng));
  MatElem q = qr.householderQ();
  MatElem r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int i = 0; i < n; ++i) {
    const cplx d = r(i, i);
    if (std::abs(d) > 0) q.col(i) *= d / std::abs(d);
  }
  return q;
}

}  // namespace ncflab

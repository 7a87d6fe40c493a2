#include "mpest/posterior.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <sstream>

namespace mpest {

namespace {

constexpr double kConditionGuard = 1e12;

// S^H Lambda S without materializing Lambda for the white case.
CMat gram(const CMat& S, const NoisePrecision& lambda) {
  if (lambda.is_white()) return lambda.scalar() * (S.adjoint() * S);
  return S.adjoint() * (lambda.matrix() * S);
}

CVec info_vector(const CMat& S, const NoisePrecision& lambda, const CVec& y) {
  if (lambda.is_white()) return lambda.scalar() * (S.adjoint() * y);
  return S.adjoint() * (lambda.matrix() * y);
}

}  // namespace

WeightPosterior posterior_a2(const CMat& S, const NoisePrecision& lambda,
                             const RVec& alpha, const CVec& y) {
  const int L = static_cast<int>(S.cols());
  if (alpha.size() != L) throw std::invalid_argument("alpha size does not match S");
  if (S.rows() != y.size()) throw std::invalid_argument("S and y dimension mismatch");
  for (int l = 0; l < L; ++l) {
    if (!std::isfinite(alpha[l]) || alpha[l] < 0.0)
      throw std::invalid_argument("posterior_a2 requires finite nonnegative alpha");
  }

  WeightPosterior post;
  post.alpha = alpha;
  if (L == 0) {
    post.mean = CVec();
    post.cov = CMat();
    return post;
  }

  CMat G = gram(S, lambda);
  G.diagonal() += alpha.cast<cplx>();
  // Hermitian system; the sizes here are small, so an eigendecomposition
  // doubles as both the condition guard and the inverse.
  Eigen::SelfAdjointEigenSolver<CMat> eig(G);
  const RVec& ev = eig.eigenvalues();
  const double emin = ev.minCoeff();
  const double emax = ev.maxCoeff();
  if (emin <= 0.0 || emax / emin > kConditionGuard) {
    const double cond = emin > 0.0 ? emax / emin : std::numeric_limits<double>::infinity();
    std::ostringstream msg;
    msg << "posterior system is ill-conditioned (condition estimate " << cond << ")";
    throw IllConditionedError(msg.str(), cond);
  }
  post.cov = eig.eigenvectors() * ev.cwiseInverse().asDiagonal() *
             eig.eigenvectors().adjoint();
  post.mean = post.cov * info_vector(S, lambda, y);
  return post;
}

ScalarPosterior posterior_a1(const CVec& s, const NoisePrecision& lambda,
                             double alpha, const CVec& residual) {
  if (!std::isfinite(alpha) || alpha < 0.0)
    throw std::invalid_argument("posterior_a1 requires finite nonnegative alpha");
  const double n2 = weighted_norm2(s, lambda);
  ScalarPosterior p;
  p.var = 1.0 / (n2 + alpha);
  p.mean = p.var * lambda.inner(s, residual);
  return p;
}

LeaveOneOut leave_one_out(const CMat& S, const NoisePrecision& lambda,
                          const RVec& alpha, const CVec& y, int l,
                          const WeightPosterior& full, int* warn_counter) {
  const int L = static_cast<int>(S.cols());
  if (l < 0 || l >= L) throw std::invalid_argument("leave_one_out index out of range");

  LeaveOneOut out;
  if (L == 1) {
    out.cov = CMat();
    out.mean = CVec();
    out.residual = y;
    return out;
  }

  CMat Sm(S.rows(), L - 1);
  RVec am(L - 1);
  for (int k = 0, j = 0; k < L; ++k) {
    if (k == l) continue;
    Sm.col(j) = S.col(k);
    am[j] = alpha[k];
    ++j;
  }

  const double pivot = std::real(full.cov(l, l));
  if (pivot <= 0.0) {
    if (warn_counter) ++*warn_counter;
    WeightPosterior direct = posterior_a2(Sm, lambda, am, y);
    out.cov = direct.cov;
    out.mean = direct.mean;
    out.residual = y - Sm * out.mean;
    return out;
  }

  CVec q(L - 1);
  CVec wm(L - 1);
  CMat P(L - 1, L - 1);
  for (int k = 0, j = 0; k < L; ++k) {
    if (k == l) continue;
    q[j] = full.cov(k, l);
    wm[j] = full.mean[k];
    for (int k2 = 0, j2 = 0; k2 < L; ++k2) {
      if (k2 == l) continue;
      P(j, j2) = full.cov(k, k2);
      ++j2;
    }
    ++j;
  }
  out.cov = P - (q * q.adjoint()) / pivot;
  out.mean = wm - q * (full.mean[l] / pivot);
  out.residual = y - Sm * out.mean;
  return out;
}

}  // namespace mpest

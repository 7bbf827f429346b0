#include "koopctl/eigensolve.hpp"

#include <lapacke.h>

#include <cmath>
#include <string>
#include <vector>

#include "koopctl/error.hpp"

namespace koopctl {

namespace {

struct Symmetrized {
  Eigen::VectorXd diag;
  Eigen::VectorXd offdiag;
  Eigen::VectorXd scale;  // A = S^{-1} T S with S = diag(scale)
};

// Diagonal similarity turning the tridiagonal operator into a symmetric one.
// Requires A(i, i+1) A(i+1, i) > 0, which holds for the Sturm-Liouville
// discretisation.
Symmetrized symmetrize(const DiscreteOperator& op) {
  const Eigen::Index n = op.diag.size();
  Symmetrized s;
  s.diag = op.diag;
  s.offdiag.resize(n - 1);
  s.scale.resize(n);
  s.scale[0] = 1.0;
  for (Eigen::Index i = 0; i + 1 < n; ++i) {
    const double prod = op.upper[i] * op.lower[i];
    if (!(prod > 0.0)) {
      throw NumericalError("eigensolve: operator is not symmetrisable at row " + std::to_string(i));
    }
    s.offdiag[i] = std::sqrt(prod);
    s.scale[i + 1] = s.scale[i] * std::sqrt(op.upper[i] / op.lower[i]);
  }
  return s;
}

struct TridiagonalEigen {
  std::vector<double> values;  // ascending
  Eigen::MatrixXd vectors;     // column-major, one per value (may be empty)
};

TridiagonalEigen stevr(const Symmetrized& s, std::size_t count, bool vectors) {
  const auto n = static_cast<lapack_int>(s.diag.size());
  if (count == 0 || count > static_cast<std::size_t>(n)) {
    throw InvalidArgument("eigensolve: count must be in [1, N], got " + std::to_string(count));
  }
  std::vector<double> d(s.diag.data(), s.diag.data() + n);
  std::vector<double> e(s.offdiag.data(), s.offdiag.data() + n - 1);
  e.push_back(0.0);
  const lapack_int il = n - static_cast<lapack_int>(count) + 1;
  const lapack_int iu = n;
  lapack_int found = 0;
  std::vector<double> w(static_cast<std::size_t>(n));
  TridiagonalEigen out;
  if (vectors) out.vectors.resize(n, static_cast<Eigen::Index>(count));
  std::vector<lapack_int> support(2 * count);
  const lapack_int info =
      LAPACKE_dstevr(LAPACK_COL_MAJOR, vectors ? 'V' : 'N', 'I', n, d.data(), e.data(), 0.0, 0.0,
                     il, iu, 0.0, &found, w.data(), vectors ? out.vectors.data() : nullptr,
                     n, support.data());
  if (info != 0) {
    throw NumericalError("eigensolve: LAPACK dstevr failed (info " + std::to_string(info) +
                         ") near eigenvalue index " + std::to_string(info > 0 ? info : -info));
  }
  if (found != static_cast<lapack_int>(count)) {
    throw NumericalError("eigensolve: expected " + std::to_string(count) + " eigenvalues, got " +
                         std::to_string(found));
  }
  out.values.assign(w.begin(), w.begin() + found);
  return out;
}

}  // namespace

std::vector<Eigenpair> eigensolve_reference(const DiscreteOperator& op, const SpatialGrid& grid,
                                            std::size_t count) {
  if (op.size() != grid.size()) throw InvalidArgument("eigensolve: operator/grid size mismatch");
  const Symmetrized s = symmetrize(op);
  const TridiagonalEigen te = stevr(s, count, true);

  std::vector<Eigenpair> pairs;
  pairs.reserve(count);
  for (std::size_t k = count; k-- > 0;) {
    Eigenpair p;
    p.lambda = te.values[k];
    p.phi = te.vectors.col(static_cast<Eigen::Index>(k)).cwiseQuotient(s.scale);
    const double norm = grid.norm(p.phi);
    if (!(norm > 0.0)) {
      throw NumericalError("eigensolve: zero eigenvector at index " + std::to_string(count - k));
    }
    p.phi /= norm;
    if (p.phi[0] < 0.0) p.phi = -p.phi;
    pairs.push_back(std::move(p));
  }
  return pairs;
}

std::vector<double> reference_eigenvalues(const DiscreteOperator& op, std::size_t count) {
  const TridiagonalEigen te = stevr(symmetrize(op), count, false);
  return {te.values.rbegin(), te.values.rend()};
}

Eigen::MatrixXd mode_matrix(const std::vector<Eigenpair>& pairs, std::size_t first,
                            std::size_t count) {
  if (first + count > pairs.size()) throw InvalidArgument("mode_matrix: index out of range");
  if (count == 0) return {};
  Eigen::MatrixXd m(pairs[first].phi.size(), static_cast<Eigen::Index>(count));
  for (std::size_t j = 0; j < count; ++j) m.col(static_cast<Eigen::Index>(j)) = pairs[first + j].phi;
  return m;
}

}  // namespace koopctl

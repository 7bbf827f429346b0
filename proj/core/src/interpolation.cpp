#include "koopctl/interpolation.hpp"

#include <algorithm>
#include <utility>

#include "koopctl/error.hpp"
#include "koopctl/tridiagonal.hpp"

namespace koopctl {

namespace {

// Interpolating polynomial (Lagrange form) for fewer than four knots.
double lagrange(const std::vector<double>& x, const std::vector<double>& y, double t) {
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    double basis = 1.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (j != i) basis *= (t - x[j]) / (x[i] - x[j]);
    }
    acc += basis * y[i];
  }
  return acc;
}

}  // namespace

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
  const std::size_t n = x_.size();
  if (n == 0 || n != y_.size()) throw InvalidArgument("spline: need matching nonempty samples");
  for (std::size_t i = 1; i < n; ++i) {
    if (!(x_[i] > x_[i - 1])) throw InvalidArgument("spline: knots must increase strictly");
  }
  if (n < 4) return;

  // Unknowns: second derivatives m_0..m_{n-1}. Interior rows are the usual
  // C2 conditions; the first and last rows impose continuity of the third
  // derivative across x_1 and x_{n-2} (not-a-knot).
  std::vector<double> h(n - 1);
  for (std::size_t i = 0; i + 1 < n; ++i) h[i] = x_[i + 1] - x_[i];

  // The system is tridiagonal apart from the two not-a-knot rows; eliminating
  // m_0 and m_{n-1} with them leaves a tridiagonal system in m_1..m_{n-2}.
  const std::size_t k = n - 2;
  Eigen::VectorXd lower = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  Eigen::VectorXd diag = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  Eigen::VectorXd upper = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(k));
  Eigen::VectorXd rhs(static_cast<Eigen::Index>(k));
  for (std::size_t i = 1; i + 1 < n; ++i) {
    const auto r = static_cast<Eigen::Index>(i - 1);
    lower[r] = h[i - 1];
    diag[r] = 2.0 * (h[i - 1] + h[i]);
    upper[r] = h[i];
    rhs[r] = 6.0 * ((y_[i + 1] - y_[i]) / h[i] - (y_[i] - y_[i - 1]) / h[i - 1]);
  }
  // m_0 = m_1 + (h0/h1)(m_1 - m_2)
  {
    const double ratio = h[0] / h[1];
    diag[0] += lower[0] * (1.0 + ratio);
    upper[0] -= lower[0] * ratio;
    lower[0] = 0.0;
  }
  // m_{n-1} = m_{n-2} + (h_{n-2}/h_{n-3})(m_{n-2} - m_{n-3})
  {
    const auto r = static_cast<Eigen::Index>(k - 1);
    const double ratio = h[n - 2] / h[n - 3];
    diag[r] += upper[r] * (1.0 + ratio);
    lower[r] -= upper[r] * ratio;
    upper[r] = 0.0;
  }
  const TridiagonalSolver<double> solver(lower.tail(static_cast<Eigen::Index>(k) - 1), diag,
                                         upper.head(static_cast<Eigen::Index>(k) - 1));
  const Eigen::VectorXd interior = solver.solve(rhs);
  m_.assign(n, 0.0);
  for (std::size_t i = 1; i + 1 < n; ++i) m_[i] = interior[static_cast<Eigen::Index>(i - 1)];
  m_[0] = m_[1] + h[0] / h[1] * (m_[1] - m_[2]);
  m_[n - 1] = m_[n - 2] + h[n - 2] / h[n - 3] * (m_[n - 2] - m_[n - 3]);
}

double CubicSpline::operator()(double t) const {
  const std::size_t n = x_.size();
  if (n < 4) return lagrange(x_, y_, t);
  // Piece index: clamp so that points outside use the end pieces.
  auto it = std::upper_bound(x_.begin(), x_.end(), t);
  std::size_t i = it == x_.begin() ? 0 : static_cast<std::size_t>(it - x_.begin()) - 1;
  i = std::min(i, n - 2);
  const double h = x_[i + 1] - x_[i];
  const double a = (x_[i + 1] - t) / h;
  const double b = (t - x_[i]) / h;
  return a * y_[i] + b * y_[i + 1] +
         ((a * a * a - a) * m_[i] + (b * b * b - b) * m_[i + 1]) * h * h / 6.0;
}

Eigen::VectorXd CubicSpline::operator()(const Eigen::VectorXd& t) const {
  return t.unaryExpr([this](double s) { return (*this)(s); });
}

Eigen::VectorXcd spline_interpolate(const std::vector<double>& x, const Eigen::VectorXcd& y,
                                    const Eigen::VectorXd& t) {
  if (static_cast<std::size_t>(y.size()) != x.size()) {
    throw InvalidArgument("spline: sample count does not match knot count");
  }
  std::vector<double> re(x.size()), im(x.size());
  bool has_imag = false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    re[i] = y[static_cast<Eigen::Index>(i)].real();
    im[i] = y[static_cast<Eigen::Index>(i)].imag();
    has_imag = has_imag || im[i] != 0.0;
  }
  Eigen::VectorXcd out(t.size());
  out.real() = CubicSpline(x, re)(t);
  out.imag() = has_imag ? CubicSpline(x, im)(t) : Eigen::VectorXd::Zero(t.size());
  return out;
}

}  // namespace koopctl

// Derivative-magnitude table for the standard bump profile
//   rho(x) = exp(1 - 1/(1-x^2)) on (-1,1), extended by zero.
//
// Writing rho^(k)(x) = rho(x) * Q_k(x) / (1-x^2)^{2k} gives the recurrence
//   Q_{k+1} = (1-x^2)^2 Q_k' + 4 k x (1-x^2) Q_k - 2 x Q_k,   Q_0 = 1,
// obtained by differentiating and clearing denominators.  Coefficients grow
// large but stay well inside double range for k <= 40; the sup is evaluated
// in log space so the pole factors never overflow.

#include <cmath>
#include <mutex>
#include <vector>

namespace dbf {

namespace {

std::vector<double> poly_derivative(const std::vector<double>& q) {
  std::vector<double> d(q.size() > 1 ? q.size() - 1 : 1, 0.0);
  for (size_t i = 1; i < q.size(); ++i) d[i - 1] = q[i] * double(i);
  return d;
}

double poly_eval(const std::vector<double>& q, double x) {
  double acc = 0.0;
  for (size_t i = q.size(); i-- > 0;) acc = acc * x + q[i];
  return acc;
}

std::vector<double> build_table(int kmax) {
  std::vector<std::vector<double>> Q;
  Q.push_back({1.0});
  for (int k = 0; k < kmax; ++k) {
    const auto& q = Q.back();
    auto dq = poly_derivative(q);
    // (1-x^2)^2 = 1 - 2x^2 + x^4
    std::vector<double> next(q.size() + 3, 0.0);
    for (size_t i = 0; i < dq.size(); ++i) {
      next[i] += dq[i];
      if (i + 2 < next.size()) next[i + 2] -= 2.0 * dq[i];
      if (i + 4 >= next.size()) next.resize(i + 5, 0.0);
      next[i + 4] += dq[i];
    }
    // + (4k x (1-x^2) - 2x) Q = (4k x - 4k x^3 - 2x) Q
    for (size_t i = 0; i < q.size(); ++i) {
      if (i + 1 >= next.size()) next.resize(i + 2, 0.0);
      next[i + 1] += (4.0 * k - 2.0) * q[i];
      if (i + 3 >= next.size()) next.resize(i + 4, 0.0);
      next[i + 3] -= 4.0 * k * q[i];
    }
    Q.push_back(std::move(next));
  }

  std::vector<double> sup(size_t(kmax) + 1, 0.0);
  const int grid = 20000;
  for (int k = 0; k <= kmax; ++k) {
    double best = 0.0;
    for (int i = 0; i < grid; ++i) {
      double x = double(i) / double(grid); // symmetry: |rho^(k)| is even or odd
      double om = 1.0 - x * x;
      if (om <= 1e-12) continue;
      double qv = std::fabs(poly_eval(Q[size_t(k)], x));
      if (qv == 0.0) continue;
      double lg = std::log(qv) - 2.0 * k * std::log(om) + 1.0 - 1.0 / om;
      if (lg > 700.0) continue; // cannot happen for k <= 40, guard anyway
      double v = std::exp(lg);
      if (v > best) best = v;
    }
    sup[size_t(k)] = best;
  }
  return sup;
}

} // namespace

const std::vector<double>& bump_derivative_table() {
  static std::vector<double> table;
  static std::once_flag once;
  std::call_once(once, [] { table = build_table(40); });
  return table;
}

} // namespace dbf

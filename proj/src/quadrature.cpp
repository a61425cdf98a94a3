#include "qscope/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <utility>

namespace qscope {

namespace {

// P_n(z) and P_n'(z) by the three-term recurrence.
std::pair<double, double> legendre_with_derivative(int n, double z) {
  double p0 = 1.0, p1 = z;
  for (int k = 2; k <= n; ++k) {
    double p2 = ((2.0 * k - 1.0) * z * p1 - (k - 1.0) * p0) / k;
    p0 = p1;
    p1 = p2;
  }
  return {p1, n * (z * p1 - p0) / (z * z - 1.0)};
}

// Newton iteration on P_n starting from the Tricomi guess.
std::pair<std::vector<double>, std::vector<double>> legendre_reference(int n) {
  std::vector<double> x(n), w(n);
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double z = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    for (int iter = 0; iter < 100; ++iter) {
      auto [p, dp] = legendre_with_derivative(n, z);
      double dz = p / dp;
      z -= dz;
      if (std::abs(dz) < 1e-15) break;
    }
    double dp = legendre_with_derivative(n, z).second;
    x[i] = -z;
    x[n - 1 - i] = z;
    w[i] = w[n - 1 - i] = 2.0 / ((1.0 - z * z) * dp * dp);
  }
  return {x, w};
}

}  // namespace

QuadratureRule gauss_legendre(int n, double a, double b) {
  static std::mutex mu;
  static std::map<int, std::pair<std::vector<double>, std::vector<double>>> cache;
  std::pair<std::vector<double>, std::vector<double>> ref;
  {
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(n);
    if (it == cache.end()) it = cache.emplace(n, legendre_reference(n)).first;
    ref = it->second;
  }
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (int i = 0; i < n; ++i) {
    rule.nodes[i] = mid + half * ref.first[i];
    rule.weights[i] = half * ref.second[i];
  }
  return rule;
}

void hermite_functions(double x, int count, double* out) {
  if (count <= 0) return;
  out[0] = std::pow(std::numbers::pi, -0.25) * std::exp(-0.5 * x * x);
  if (count == 1) return;
  out[1] = std::sqrt(2.0) * x * out[0];
  for (int m = 2; m < count; ++m) {
    out[m] = std::sqrt(2.0 / m) * x * out[m - 1] - std::sqrt((m - 1.0) / m) * out[m - 2];
  }
}

std::vector<double> hermite_functions(double x, int count) {
  std::vector<double> v(count);
  hermite_functions(x, count, v.data());
  return v;
}

Eigen::MatrixXd hermite_table(const std::vector<double>& xs, int count) {
  Eigen::MatrixXd t(xs.size(), count);
  std::vector<double> row(count);
  for (size_t k = 0; k < xs.size(); ++k) {
    hermite_functions(xs[k], count, row.data());
    for (int n = 0; n < count; ++n) t(k, n) = row[n];
  }
  return t;
}

}  // namespace qscope

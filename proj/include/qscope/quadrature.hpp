#pragma once

#include <vector>

#include <Eigen/Dense>

namespace qscope {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

/// n-point Gauss–Legendre rule on [a, b]. Nodes on [-1, 1] are cached per n.
QuadratureRule gauss_legendre(int n, double a, double b);

/// Normalized HO eigenfunctions ψ_0..ψ_{count-1} at x (units ℓ0), by the
/// stable three-term recurrence. Fills out[0..count).
void hermite_functions(double x, int count, double* out);
std::vector<double> hermite_functions(double x, int count);

/// Table ψ_n(x_k): rows = nodes, cols = levels.
Eigen::MatrixXd hermite_table(const std::vector<double>& xs, int count);

}  // namespace qscope

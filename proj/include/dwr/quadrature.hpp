#pragma once

#include <Eigen/Dense>

namespace dwr {

/// Quadrature on the reference triangle {x,y >= 0, x+y <= 1}. Exact for
/// polynomials of total degree `order`; weights sum to 1/2.
struct QuadratureRule {
  Eigen::MatrixX2d points;
  Eigen::VectorXd weights;
  int order = 0;
  int size() const { return static_cast<int>(weights.size()); }
};

QuadratureRule triangle_quadrature(int order); // order <= 8

/// Gauss-Legendre rule on [0,1], exact for degree 2n-1.
struct EdgeRule {
  Eigen::VectorXd points;
  Eigen::VectorXd weights;
  int size() const { return static_cast<int>(weights.size()); }
};

EdgeRule edge_quadrature(int order); // order <= 15

} // namespace dwr

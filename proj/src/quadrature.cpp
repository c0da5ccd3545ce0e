#include "dwr/quadrature.hpp"

#include <stdexcept>
#include <vector>

namespace dwr {

namespace {

// Gauss-Legendre nodes/weights on [-1,1].
void gauss_legendre(int n, std::vector<double>& x, std::vector<double>& w) {
  switch (n) {
    case 1:
      x = {0.0};
      w = {2.0};
      return;
    case 2:
      x = {-0.5773502691896257, 0.5773502691896257};
      w = {1.0, 1.0};
      return;
    case 3:
      x = {-0.7745966692414834, 0.0, 0.7745966692414834};
      w = {0.5555555555555556, 0.8888888888888888, 0.5555555555555556};
      return;
    case 4:
      x = {-0.8611363115940526, -0.3399810435848563, 0.3399810435848563, 0.8611363115940526};
      w = {0.3478548451374538, 0.6521451548625461, 0.6521451548625461, 0.3478548451374538};
      return;
    case 5:
      x = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
           0.9061798459386640};
      w = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889, 0.4786286704993665,
           0.2369268850561891};
      return;
    case 6:
      x = {-0.9324695142031521, -0.6612093864662645, -0.2386191860831969, 0.2386191860831969,
           0.6612093864662645, 0.9324695142031521};
      w = {0.1713244923791704, 0.3607615730481386, 0.4679139345726910, 0.4679139345726910,
           0.3607615730481386, 0.1713244923791704};
      return;
    case 7:
      x = {-0.9491079123427585, -0.7415311855993945, -0.4058451513773972, 0.0,
           0.4058451513773972, 0.7415311855993945, 0.9491079123427585};
      w = {0.1294849661688697, 0.2797053914892766, 0.3818300505051189, 0.4179591836734694,
           0.3818300505051189, 0.2797053914892766, 0.1294849661688697};
      return;
    case 8:
      x = {-0.9602898564975363, -0.7966664774136267, -0.5255324099163290, -0.1834346424956498,
           0.1834346424956498, 0.5255324099163290, 0.7966664774136267, 0.9602898564975363};
      w = {0.1012285362903763, 0.2223810344533745, 0.3137066458778873, 0.3626837833783620,
           0.3626837833783620, 0.3137066458778873, 0.2223810344533745, 0.1012285362903763};
      return;
    default:
      throw std::invalid_argument("gauss_legendre: unsupported point count");
  }
}

} // namespace

EdgeRule edge_quadrature(int order) {
  if (order < 0 || order > 15) throw std::invalid_argument("edge_quadrature: unsupported order");
  int n = order / 2 + 1;
  std::vector<double> x, w;
  gauss_legendre(n, x, w);
  EdgeRule r;
  r.points.resize(n);
  r.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    r.points[i] = 0.5 * (x[i] + 1.0);
    r.weights[i] = 0.5 * w[i];
  }
  return r;
}

QuadratureRule triangle_quadrature(int order) {
  if (order < 0 || order > 8)
    throw std::invalid_argument("triangle_quadrature: unsupported order " +
                                std::to_string(order));
  QuadratureRule r;
  r.order = order;
  if (order <= 1) {
    r.points.resize(1, 2);
    r.points << 1.0 / 3.0, 1.0 / 3.0;
    r.weights.resize(1);
    r.weights << 0.5;
    return r;
  }
  if (order == 2) {
    r.points.resize(3, 2);
    r.points << 1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0, 1.0 / 6.0, 2.0 / 3.0;
    r.weights.resize(3);
    r.weights << 1.0 / 6.0, 1.0 / 6.0, 1.0 / 6.0;
    return r;
  }
  // Collapsed tensor-product rule: x from a Gauss rule on [0,1],
  // y = t (1-x) with Jacobian (1-x). Positive weights for any order.
  int n = (order + 3) / 2;
  std::vector<double> gx, gw;
  gauss_legendre(n, gx, gw);
  r.points.resize(n * n, 2);
  r.weights.resize(n * n);
  int k = 0;
  for (int i = 0; i < n; ++i) {
    double x = 0.5 * (gx[i] + 1.0);
    double wx = 0.5 * gw[i];
    for (int j = 0; j < n; ++j) {
      double t = 0.5 * (gx[j] + 1.0);
      double wt = 0.5 * gw[j];
      r.points(k, 0) = x;
      r.points(k, 1) = t * (1.0 - x);
      r.weights(k) = wx * wt * (1.0 - x);
      ++k;
    }
  }
  return r;
}

} // namespace dwr

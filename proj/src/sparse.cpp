#include "dwr/sparse.hpp"

#include <Eigen/SparseLU>

#include <string>

namespace dwr {

Eigen::VectorXd solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b) {
  if (A.rows() != A.cols()) throw SolveError("solve: matrix is not square");
  if (A.rows() != b.size()) throw SolveError("solve: rhs size mismatch");
  if (A.rows() == 0) return Eigen::VectorXd();

  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
  lu.analyzePattern(A);
  lu.factorize(A);
  if (lu.info() != Eigen::Success) {
    // locate an empty row/column for the diagnostic
    std::vector<char> row_hit(A.rows(), 0), col_hit(A.cols(), 0);
    for (int k = 0; k < A.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
        if (it.value() != 0.0) {
          row_hit[it.row()] = 1;
          col_hit[it.col()] = 1;
        }
    for (long i = 0; i < A.rows(); ++i)
      if (!row_hit[i] || !col_hit[i])
        throw SolveError("solve: singular matrix (zero pivot) at dof " + std::to_string(i));
    throw SolveError("solve: singular matrix: " + lu.lastErrorMessage());
  }
  Eigen::VectorXd x = lu.solve(b);

  double anorm = 0;
  for (int k = 0; k < A.outerSize(); ++k)
    for (Eigen::SparseMatrix<double>::InnerIterator it(A, k); it; ++it)
      anorm = std::max(anorm, std::abs(it.value()));
  double tol = 1e-10 * (anorm * x.norm() + b.norm());
  Eigen::VectorXd r = b - A * x;
  if (r.norm() > tol) {
    x += lu.solve(r); // one step of iterative refinement
    r = b - A * x;
    if (r.norm() > tol)
      throw SolveError("solve: residual " + std::to_string(r.norm()) + " exceeds tolerance " +
                       std::to_string(tol));
  }
  return x;
}

Eigen::VectorXd solve(const SparseSystem& sys) { return solve(sys.A, sys.b); }

void Assembler::add_matrix(int bi, const std::vector<long>& rows, int bj,
                           const std::vector<long>& cols, const Eigen::MatrixXd& M) {
  const Space& cs = *layout_.spaces[bj];
  for (std::size_t i = 0; i < rows.size(); ++i) {
    long gi = layout_.global(bi, rows[i]);
    if (gi < 0) continue;
    for (std::size_t j = 0; j < cols.size(); ++j) {
      long gj = layout_.global(bj, cols[j]);
      if (gj >= 0) {
        trips_.emplace_back(static_cast<int>(gi), static_cast<int>(gj), M(i, j));
      } else {
        double g = cs.prescribed[cols[j]];
        if (g != 0.0) rhs_[gi] -= M(i, j) * g;
      }
    }
  }
}

void Assembler::add_vector(int bi, const std::vector<long>& rows, const Eigen::VectorXd& v) {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    long gi = layout_.global(bi, rows[i]);
    if (gi >= 0) rhs_[gi] += v[i];
  }
}

SparseSystem Assembler::finish() {
  SparseSystem sys;
  sys.A.resize(layout_.n_free, layout_.n_free);
  sys.A.setFromTriplets(trips_.begin(), trips_.end());
  sys.A.makeCompressed();
  sys.b = rhs_;
  return sys;
}

std::vector<long> cell_dofs(const Space& s, int cell) {
  std::vector<long> dofs(static_cast<std::size_t>(s.nodes_per_cell) * s.components);
  const int* cn = s.cell_node_ptr(cell);
  std::size_t k = 0;
  for (int i = 0; i < s.nodes_per_cell; ++i)
    for (int c = 0; c < s.components; ++c) dofs[k++] = s.dof(cn[i], c);
  return dofs;
}

} // namespace dwr

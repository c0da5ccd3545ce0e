#pragma once

#include "dwr/space.hpp"

#include <Eigen/Sparse>

#include <stdexcept>
#include <vector>

namespace dwr {

struct SolveError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Linear system over the free dofs of one or more spaces (Dirichlet dofs
/// eliminated symmetrically, prescribed values lifted into the rhs).
struct SparseSystem {
  Eigen::SparseMatrix<double> A;
  Eigen::VectorXd b;
};

/// Direct sparse factorization. Post: ||Ax-b|| <= 1e-10 (||A|| ||x|| + ||b||).
Eigen::VectorXd solve(const SparseSystem& sys);
Eigen::VectorXd solve(const Eigen::SparseMatrix<double>& A, const Eigen::VectorXd& b);

/// Monolithic free-dof numbering over a list of spaces (blocks).
struct BlockLayout {
  std::vector<const Space*> spaces;
  std::vector<long> offset;
  long n_free = 0;

  explicit BlockLayout(std::vector<const Space*> sp) : spaces(std::move(sp)) {
    offset.resize(spaces.size());
    for (std::size_t i = 0; i < spaces.size(); ++i) {
      offset[i] = n_free;
      n_free += spaces[i]->n_free();
    }
  }
  /// Global free index of a space dof, or -1 if constrained.
  long global(int block, long dof) const {
    int fi = spaces[block]->free_index[dof];
    return fi < 0 ? -1 : offset[block] + fi;
  }
};

/// Triplet accumulator with Dirichlet elimination and rhs lifting.
class Assembler {
public:
  explicit Assembler(const BlockLayout& layout)
      : layout_(layout), rhs_(Eigen::VectorXd::Zero(layout.n_free)) {}

  /// Adds a local matrix coupling row dofs of block bi with column dofs of
  /// block bj. Prescribed column dofs are lifted: rhs -= M * g.
  void add_matrix(int bi, const std::vector<long>& rows, int bj, const std::vector<long>& cols,
                  const Eigen::MatrixXd& M);
  void add_vector(int bi, const std::vector<long>& rows, const Eigen::VectorXd& v);

  SparseSystem finish();
  Eigen::VectorXd& rhs() { return rhs_; }

private:
  const BlockLayout& layout_;
  std::vector<Eigen::Triplet<double>> trips_;
  Eigen::VectorXd rhs_;
};

/// Local dof ids (into the space's full numbering) of a cell, interleaved by
/// component: node0.c0, node0.c1, node1.c0, ...
std::vector<long> cell_dofs(const Space& s, int cell);

} // namespace dwr

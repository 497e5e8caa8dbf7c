#pragma once

#include "nqpsor/nqpsor.hpp"

namespace fixtures {

// The 3x3 counterexample to post-sweep projection; solution [0.8, 0, 0.8].
inline nqpsor::NqpProblem three_by_three() {
  const std::vector<double> a{2, -1, 0.5, -1, 2, -1, 0.5, -1, 2};
  return nqpsor::NqpProblem(nqpsor::SparseSymMatrix::from_dense(3, a), {2, -2, 2});
}

inline nqpsor::NqpProblem two_by_two() {
  const std::vector<double> a{2, -1, -1, 2};
  return nqpsor::NqpProblem(nqpsor::SparseSymMatrix::from_dense(2, a), {1, 1});
}

// C = [[1,0],[0,2],[1,1]].
inline nqpsor::ColumnOperator small_c() {
  const std::vector<double> c{1, 0, 0, 2, 1, 1};
  return nqpsor::ColumnOperator::from_dense(3, 2, c);
}

}  // namespace fixtures

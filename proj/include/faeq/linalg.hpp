#pragma once

#include <Eigen/Dense>
#include <complex>

namespace faeq {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;

inline bool all_finite(const ComplexMatrix& m) { return m.allFinite(); }
inline bool all_finite(const ComplexVector& v) { return v.allFinite(); }

}  // namespace faeq

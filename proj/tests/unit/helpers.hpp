#pragma once

#include "pvqe/qstate.hpp"

#include <cmath>
#include <random>
#include <string>

namespace pvqe::test {

inline StateVector random_state(std::size_t dim, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  CVector v(static_cast<Eigen::Index>(dim));
  for (auto &a : v) a = Complex{g(rng), g(rng)};
  return StateVector::normalized(v);
}

inline DensityMatrix random_density(std::size_t dim, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  const auto d = static_cast<Eigen::Index>(dim);
  CMatrix a(d, d);
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) a(i, j) = Complex{g(rng), g(rng)};
  CMatrix r = a * a.adjoint();
  r /= r.trace().real();
  return DensityMatrix(0.5 * (r + r.adjoint()));
}

inline std::string random_pauli(std::size_t n, std::mt19937_64 &rng) {
  static const char letters[] = "IXYZ";
  std::uniform_int_distribution<int> u(0, 3);
  std::string s;
  for (std::size_t q = 0; q < n; ++q) s += letters[u(rng)];
  return s;
}

inline OperatorSum random_hermitian(std::size_t n, std::size_t terms, std::mt19937_64 &rng) {
  std::normal_distribution<double> g;
  OperatorSum op(n);
  for (std::size_t t = 0; t < terms; ++t) op.add(g(rng), PauliString(random_pauli(n, rng)));
  return op;
}

/// Dense Pauli matrix by explicit Kronecker products, independent of the
/// library's bit-mask construction.
inline CMatrix dense_pauli(const std::string &s) {
  CMatrix out = CMatrix::Identity(1, 1);
  for (char c : s) {
    CMatrix p(2, 2);
    switch (c) {
    case 'I': p << 1, 0, 0, 1; break;
    case 'X': p << 0, 1, 1, 0; break;
    case 'Y': p << 0, Complex{0, -1}, Complex{0, 1}, 0; break;
    default: p << 1, 0, 0, -1; break;
    }
    CMatrix next(out.rows() * 2, out.cols() * 2);
    for (Eigen::Index i = 0; i < out.rows(); ++i)
      for (Eigen::Index j = 0; j < out.cols(); ++j) next.block(2 * i, 2 * j, 2, 2) = out(i, j) * p;
    out = next;
  }
  return out;
}

} // namespace pvqe::test

#pragma once

#include <array>
#include <cmath>
#include <complex>

namespace inchworm {

using Complex = std::complex<double>;

inline constexpr Complex kI{0.0, 1.0};

// Fixed-size 2x2 complex matrix. Entry names follow (row, col), so a21() is
// row 2, column 1. Storage is column-major: a11, a21, a12, a22.
class ComplexMat2 {
 public:
  constexpr ComplexMat2() = default;
  constexpr ComplexMat2(Complex a11, Complex a21, Complex a12, Complex a22)
      : e_{a11, a21, a12, a22} {}

  static constexpr ComplexMat2 zero() { return {}; }
  static constexpr ComplexMat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  static constexpr ComplexMat2 diag(Complex d1, Complex d2) { return {d1, 0.0, 0.0, d2}; }
  // Row-major argument order, the way matrices are written on paper.
  static constexpr ComplexMat2 rows(Complex r1c1, Complex r1c2, Complex r2c1, Complex r2c2) {
    return {r1c1, r2c1, r1c2, r2c2};
  }

  Complex& a11() { return e_[0]; }
  Complex& a21() { return e_[1]; }
  Complex& a12() { return e_[2]; }
  Complex& a22() { return e_[3]; }
  constexpr const Complex& a11() const { return e_[0]; }
  constexpr const Complex& a21() const { return e_[1]; }
  constexpr const Complex& a12() const { return e_[2]; }
  constexpr const Complex& a22() const { return e_[3]; }

  // 0-based (row, col).
  Complex& operator()(int row, int col) { return e_[row + 2 * col]; }
  const Complex& operator()(int row, int col) const { return e_[row + 2 * col]; }

  std::array<Complex, 4>& entries() { return e_; }
  const std::array<Complex, 4>& entries() const { return e_; }

  ComplexMat2& operator+=(const ComplexMat2& b) {
    for (int i = 0; i < 4; ++i) e_[i] += b.e_[i];
    return *this;
  }
  ComplexMat2& operator-=(const ComplexMat2& b) {
    for (int i = 0; i < 4; ++i) e_[i] -= b.e_[i];
    return *this;
  }
  ComplexMat2& operator*=(Complex s) {
    for (auto& z : e_) z *= s;
    return *this;
  }
  ComplexMat2& operator*=(double s) {
    for (auto& z : e_) z *= s;
    return *this;
  }

  friend bool operator==(const ComplexMat2&, const ComplexMat2&) = default;

 private:
  std::array<Complex, 4> e_{};
};

inline ComplexMat2 operator+(ComplexMat2 a, const ComplexMat2& b) { return a += b; }
inline ComplexMat2 operator-(ComplexMat2 a, const ComplexMat2& b) { return a -= b; }
inline ComplexMat2 operator-(ComplexMat2 a) { return a *= -1.0; }
inline ComplexMat2 operator*(ComplexMat2 a, Complex s) { return a *= s; }
inline ComplexMat2 operator*(Complex s, ComplexMat2 a) { return a *= s; }
inline ComplexMat2 operator*(ComplexMat2 a, double s) { return a *= s; }
inline ComplexMat2 operator*(double s, ComplexMat2 a) { return a *= s; }

inline ComplexMat2 operator*(const ComplexMat2& a, const ComplexMat2& b) {
  return {a.a11() * b.a11() + a.a12() * b.a21(), a.a21() * b.a11() + a.a22() * b.a21(),
          a.a11() * b.a12() + a.a12() * b.a22(), a.a21() * b.a12() + a.a22() * b.a22()};
}

inline ComplexMat2 adjoint(const ComplexMat2& a) {
  return {std::conj(a.a11()), std::conj(a.a12()), std::conj(a.a21()), std::conj(a.a22())};
}

inline Complex trace(const ComplexMat2& a) { return a.a11() + a.a22(); }
inline Complex det(const ComplexMat2& a) { return a.a11() * a.a22() - a.a12() * a.a21(); }

// Sum of |a_ij|^2.
inline double squared_norm(const ComplexMat2& a) {
  double s = 0.0;
  for (const auto& z : a.entries()) s += std::norm(z);
  return s;
}

inline double frobenius_norm(const ComplexMat2& a) { return std::sqrt(squared_norm(a)); }

inline bool is_finite(const ComplexMat2& a) {
  for (const auto& z : a.entries())
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

inline ComplexMat2 pauli_x() { return ComplexMat2::rows(0.0, 1.0, 1.0, 0.0); }
inline ComplexMat2 pauli_y() { return ComplexMat2::rows(0.0, -kI, kI, 0.0); }
inline ComplexMat2 pauli_z() { return ComplexMat2::diag(1.0, -1.0); }

/// Matrix exponential. Splits a = mu*I + B with B traceless, so that
/// B^2 = q^2 I and exp(a) = e^mu (cosh q I + sinh(q)/q B). When the eigenvalue
/// gap 2|q| drops below 1e-8 the ratio sinh(q)/q comes from its Taylor series.
ComplexMat2 mat_exp(const ComplexMat2& a);

}  // namespace inchworm

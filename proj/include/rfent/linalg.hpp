#pragma once

// Small dense linear algebra sized at runtime with fixed capacity.
// Model dimensions are tiny (n <= 6), so everything lives on the stack
// and carries value semantics.

#include <algorithm>
#include <array>
#include <cassert>
#include <cmath>
#include <cstddef>

namespace rfent {

inline constexpr int kMaxDim = 6;

class Vec {
 public:
  Vec() : n_(0) { a_.fill(0.0); }
  explicit Vec(int n) : n_(n) {
    assert(n >= 0 && n <= kMaxDim);
    a_.fill(0.0);
  }
  static Vec zero(int n) { return Vec(n); }
  static Vec basis(int n, int i) {
    Vec v(n);
    v[i] = 1.0;
    return v;
  }

  int size() const { return n_; }
  double& operator[](int i) { return a_[static_cast<size_t>(i)]; }
  double operator[](int i) const { return a_[static_cast<size_t>(i)]; }

  Vec& operator+=(const Vec& o) {
    for (int i = 0; i < n_; ++i) a_[i] += o.a_[i];
    return *this;
  }
  Vec& operator-=(const Vec& o) {
    for (int i = 0; i < n_; ++i) a_[i] -= o.a_[i];
    return *this;
  }
  Vec& operator*=(double c) {
    for (int i = 0; i < n_; ++i) a_[i] *= c;
    return *this;
  }

  friend Vec operator+(Vec a, const Vec& b) { return a += b; }
  friend Vec operator-(Vec a, const Vec& b) { return a -= b; }
  friend Vec operator*(double c, Vec a) { return a *= c; }
  friend Vec operator*(Vec a, double c) { return a *= c; }
  friend Vec operator-(Vec a) { return a *= -1.0; }

  double dot(const Vec& o) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i) s += a_[i] * o.a_[i];
    return s;
  }
  double norm() const { return std::sqrt(dot(*this)); }
  double max_abs() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i) m = std::max(m, std::abs(a_[i]));
    return m;
  }

 private:
  std::array<double, kMaxDim> a_;
  int n_;
};

class Mat {
 public:
  Mat() : n_(0) { a_.fill(0.0); }
  explicit Mat(int n) : n_(n) {
    assert(n >= 0 && n <= kMaxDim);
    a_.fill(0.0);
  }
  static Mat zero(int n) { return Mat(n); }
  static Mat identity(int n) {
    Mat m(n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int size() const { return n_; }
  double& operator()(int i, int j) { return a_[static_cast<size_t>(i * kMaxDim + j)]; }
  double operator()(int i, int j) const { return a_[static_cast<size_t>(i * kMaxDim + j)]; }

  Mat& operator+=(const Mat& o) {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) (*this)(i, j) += o(i, j);
    return *this;
  }
  Mat& operator-=(const Mat& o) {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) (*this)(i, j) -= o(i, j);
    return *this;
  }
  Mat& operator*=(double c) {
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) (*this)(i, j) *= c;
    return *this;
  }
  friend Mat operator+(Mat a, const Mat& b) { return a += b; }
  friend Mat operator-(Mat a, const Mat& b) { return a -= b; }
  friend Mat operator*(double c, Mat a) { return a *= c; }

  Vec mul(const Vec& v) const {
    Vec r(n_);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      for (int j = 0; j < n_; ++j) s += (*this)(i, j) * v[j];
      r[i] = s;
    }
    return r;
  }
  Mat mul(const Mat& o) const {
    Mat r(n_);
    for (int i = 0; i < n_; ++i)
      for (int k = 0; k < n_; ++k) {
        double aik = (*this)(i, k);
        for (int j = 0; j < n_; ++j) r(i, j) += aik * o(k, j);
      }
    return r;
  }
  Mat transpose() const {
    Mat r(n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) r(i, j) = (*this)(j, i);
    return r;
  }

  // q(u, v) = u^T A v for bilinear forms.
  double quad(const Vec& u, const Vec& v) const {
    double s = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) s += u[i] * (*this)(i, j) * v[j];
    return s;
  }

  double max_abs() const {
    double m = 0.0;
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m = std::max(m, std::abs((*this)(i, j)));
    return m;
  }

  double det() const {
    Mat lu(*this);
    int parity = 1;
    if (!lu.lu_decompose_(parity)) return 0.0;
    double d = parity;
    for (int i = 0; i < n_; ++i) d *= lu(i, i);
    return d;
  }

  // Solves A x = b by partially pivoted LU. Returns false when singular.
  bool solve(const Vec& b, Vec& x) const {
    Mat lu(*this);
    int parity = 1;
    std::array<int, kMaxDim> perm{};
    if (!lu.lu_decompose_(parity, &perm)) return false;
    x = Vec(n_);
    Vec y(n_);
    for (int i = 0; i < n_; ++i) {
      double s = b[perm[static_cast<size_t>(i)]];
      for (int j = 0; j < i; ++j) s -= lu(i, j) * y[j];
      y[i] = s;
    }
    for (int i = n_ - 1; i >= 0; --i) {
      double s = y[i];
      for (int j = i + 1; j < n_; ++j) s -= lu(i, j) * x[j];
      x[i] = s / lu(i, i);
    }
    return true;
  }

  bool inverse(Mat& out) const {
    out = Mat(n_);
    for (int j = 0; j < n_; ++j) {
      Vec col(n_);
      if (!solve(Vec::basis(n_, j), col)) return false;
      for (int i = 0; i < n_; ++i) out(i, j) = col[i];
    }
    return true;
  }

  // Smallest eigenvalue of a symmetric matrix (cyclic Jacobi sweeps).
  double sym_eig_min() const {
    Mat a(*this);
    for (int sweep = 0; sweep < 64; ++sweep) {
      double off = 0.0;
      for (int p = 0; p < n_; ++p)
        for (int q = p + 1; q < n_; ++q) off += a(p, q) * a(p, q);
      if (off < 1e-30) break;
      for (int p = 0; p < n_; ++p)
        for (int q = p + 1; q < n_; ++q) {
          if (std::abs(a(p, q)) < 1e-300) continue;
          double theta = 0.5 * std::atan2(2.0 * a(p, q), a(q, q) - a(p, p));
          double c = std::cos(theta), s = std::sin(theta);
          for (int k = 0; k < n_; ++k) {
            double akp = a(k, p), akq = a(k, q);
            a(k, p) = c * akp - s * akq;
            a(k, q) = s * akp + c * akq;
          }
          for (int k = 0; k < n_; ++k) {
            double apk = a(p, k), aqk = a(q, k);
            a(p, k) = c * apk - s * aqk;
            a(q, k) = s * apk + c * aqk;
          }
        }
    }
    double m = a(0, 0);
    for (int i = 1; i < n_; ++i) m = std::min(m, a(i, i));
    return m;
  }

  bool is_spd(double floor = 0.0) const { return sym_eig_min() > floor; }

 private:
  bool lu_decompose_(int& parity, std::array<int, kMaxDim>* perm_out = nullptr) {
    std::array<int, kMaxDim> perm{};
    for (int i = 0; i < n_; ++i) perm[static_cast<size_t>(i)] = i;
    for (int k = 0; k < n_; ++k) {
      int piv = k;
      for (int i = k + 1; i < n_; ++i)
        if (std::abs((*this)(i, k)) > std::abs((*this)(piv, k))) piv = i;
      if ((*this)(piv, k) == 0.0) return false;
      if (piv != k) {
        for (int j = 0; j < n_; ++j) std::swap((*this)(piv, j), (*this)(k, j));
        std::swap(perm[static_cast<size_t>(piv)], perm[static_cast<size_t>(k)]);
        parity = -parity;
      }
      for (int i = k + 1; i < n_; ++i) {
        (*this)(i, k) /= (*this)(k, k);
        for (int j = k + 1; j < n_; ++j) (*this)(i, j) -= (*this)(i, k) * (*this)(k, j);
      }
    }
    if (perm_out) *perm_out = perm;
    return true;
  }

  std::array<double, kMaxDim * kMaxDim> a_;
  int n_;
};

// Gram matrix <cols_i, cols_j>_G for n column vectors.
inline Mat gram(const Mat& cols, const Mat& metric) {
  int n = cols.size();
  Mat g(n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int a = 0; a < n; ++a)
        for (int b = 0; b < n; ++b) s += cols(a, i) * metric(a, b) * cols(b, j);
      g(i, j) = s;
    }
  return g;
}

}  // namespace rfent

#pragma once

// Dense complex linear algebra for desk-scale Hermitian problems.
//
// Matrices are small (dimension up to a few hundred), so everything is a
// plain row-major std::vector<std::complex<double>>. The eigensolver is a
// cyclic complex Jacobi iteration.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qpa/error.hpp"

namespace qpa {

using complex = std::complex<double>;

/// Dimension cap for operators produced by kron() and friends.
inline constexpr std::size_t kDefaultDimensionCap = 4096;

/// Relative threshold deciding which eigenvalues count towards a rank.
inline constexpr double kRankTolerance = 1e-9;

class ComplexMatrix {
 public:
  ComplexMatrix() = default;

  ComplexMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), data_(rows * cols, complex{0.0, 0.0}) {
    if (rows == 0 || cols == 0) {
      raise(ErrorKind::DimensionMismatch, "matrix dimensions must be positive");
    }
  }

  ComplexMatrix(std::size_t rows, std::size_t cols, std::vector<complex> entries)
      : rows_(rows), cols_(cols), data_(std::move(entries)) {
    if (rows == 0 || cols == 0) {
      raise(ErrorKind::DimensionMismatch, "matrix dimensions must be positive");
    }
    if (data_.size() != rows * cols) {
      raise(ErrorKind::DimensionMismatch,
            "entry count " + std::to_string(data_.size()) + " does not match " +
                std::to_string(rows) + "x" + std::to_string(cols));
    }
    for (const auto& z : data_) {
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) {
        raise(ErrorKind::DimensionMismatch, "matrix entries must be finite");
      }
    }
  }

  static ComplexMatrix zeros(std::size_t rows, std::size_t cols) { return {rows, cols}; }

  static ComplexMatrix identity(std::size_t dim) {
    ComplexMatrix m(dim, dim);
    for (std::size_t i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
  }

  static ComplexMatrix diagonal(std::span<const double> values) {
    ComplexMatrix m(values.size(), values.size());
    for (std::size_t i = 0; i < values.size(); ++i) m(i, i) = values[i];
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool is_square() const noexcept { return rows_ == cols_; }

  complex& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  const complex& operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<const complex> entries() const noexcept { return data_; }
  std::span<complex> entries() noexcept { return data_; }

  ComplexMatrix adjoint() const {
    ComplexMatrix out(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) out(j, i) = std::conj((*this)(i, j));
    return out;
  }

  complex trace() const {
    require_square("trace");
    complex t{0.0, 0.0};
    for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& z : data_) m = std::max(m, std::abs(z));
    return m;
  }

  /// Squared Frobenius norm, tr(A A^dagger).
  double frobenius_sq() const {
    double s = 0.0;
    for (const auto& z : data_) s += std::norm(z);
    return s;
  }

  ComplexMatrix& operator+=(const ComplexMatrix& rhs) {
    require_same_shape(rhs);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += rhs.data_[k];
    return *this;
  }

  ComplexMatrix& operator-=(const ComplexMatrix& rhs) {
    require_same_shape(rhs);
    for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= rhs.data_[k];
    return *this;
  }

  ComplexMatrix& operator*=(complex scalar) {
    for (auto& z : data_) z *= scalar;
    return *this;
  }

  friend ComplexMatrix operator+(ComplexMatrix lhs, const ComplexMatrix& rhs) { return lhs += rhs; }
  friend ComplexMatrix operator-(ComplexMatrix lhs, const ComplexMatrix& rhs) { return lhs -= rhs; }
  friend ComplexMatrix operator*(ComplexMatrix lhs, complex scalar) { return lhs *= scalar; }
  friend ComplexMatrix operator*(complex scalar, ComplexMatrix rhs) { return rhs *= scalar; }

  friend ComplexMatrix operator*(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.cols_ != b.rows_) {
      raise(ErrorKind::DimensionMismatch, "matrix product of incompatible shapes");
    }
    ComplexMatrix out(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i) {
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const complex aik = a(i, k);
        if (aik == complex{0.0, 0.0}) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) out(i, j) += aik * b(k, j);
      }
    }
    return out;
  }

  friend bool operator==(const ComplexMatrix&, const ComplexMatrix&) = default;

 private:
  void require_square(const char* op) const {
    if (!is_square()) raise(ErrorKind::DimensionMismatch, std::string(op) + " needs a square matrix");
  }
  void require_same_shape(const ComplexMatrix& rhs) const {
    if (rows_ != rhs.rows_ || cols_ != rhs.cols_) {
      raise(ErrorKind::DimensionMismatch, "matrix shapes differ");
    }
  }

  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<complex> data_;
};

/// Largest |A(i,j) - conj(A(j,i))|.
inline double hermiticity_defect(const ComplexMatrix& a) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i; j < a.cols(); ++j)
      worst = std::max(worst, std::abs(a(i, j) - std::conj(a(j, i))));
  return worst;
}

/// Square matrix equal to its adjoint up to 1e-12 relative to its largest
/// entry. The stored matrix is symmetrized exactly on construction.
class HermitianOperator {
 public:
  HermitianOperator() = default;

  explicit HermitianOperator(ComplexMatrix m) : m_(std::move(m)) {
    if (!m_.is_square()) raise(ErrorKind::NotHermitian, "operator is not square");
    const double tol = 1e-12 * std::max(m_.max_abs(), 1e-300);
    const double defect = hermiticity_defect(m_);
    if (defect > tol) {
      raise(ErrorKind::NotHermitian, "hermiticity defect " + std::to_string(defect));
    }
    for (std::size_t i = 0; i < m_.rows(); ++i) {
      m_(i, i) = complex{m_(i, i).real(), 0.0};
      for (std::size_t j = i + 1; j < m_.cols(); ++j) {
        const complex avg = 0.5 * (m_(i, j) + std::conj(m_(j, i)));
        m_(i, j) = avg;
        m_(j, i) = std::conj(avg);
      }
    }
  }

  static HermitianOperator diagonal(std::span<const double> values) {
    return HermitianOperator(ComplexMatrix::diagonal(values));
  }

  std::size_t dim() const noexcept { return m_.rows(); }
  const ComplexMatrix& matrix() const noexcept { return m_; }
  const complex& operator()(std::size_t i, std::size_t j) const { return m_(i, j); }

  double trace() const { return m_.trace().real(); }

  friend HermitianOperator operator-(const HermitianOperator& a, const HermitianOperator& b) {
    if (a.dim() != b.dim()) raise(ErrorKind::DimensionMismatch, "operator dimensions differ");
    return HermitianOperator(a.m_ - b.m_);
  }
  friend HermitianOperator operator+(const HermitianOperator& a, const HermitianOperator& b) {
    if (a.dim() != b.dim()) raise(ErrorKind::DimensionMismatch, "operator dimensions differ");
    return HermitianOperator(a.m_ + b.m_);
  }
  friend HermitianOperator operator*(double scalar, const HermitianOperator& a) {
    return HermitianOperator(a.m_ * complex{scalar, 0.0});
  }

 private:
  ComplexMatrix m_;
};

struct EigenSystem {
  std::vector<double> values;  // descending
  ComplexMatrix vectors;       // column k belongs to values[k]
};

struct JacobiOptions {
  int max_sweeps = 100;
  double relative_threshold = 1e-14;
};

/// Cyclic Jacobi diagonalization of a Hermitian operator.
///
/// Each pivot (p,q) is handled by first rotating the phase of a_pq away with
/// a diagonal unitary, then applying the classic real symmetric rotation.
inline EigenSystem eig_hermitian(const HermitianOperator& op, JacobiOptions options = {}) {
  const std::size_t n = op.dim();
  ComplexMatrix a = op.matrix();
  ComplexMatrix v = ComplexMatrix::identity(n);

  const double norm = std::sqrt(a.frobenius_sq());
  const double threshold = options.relative_threshold * norm;

  auto off_diagonal = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
  };

  int sweep = 0;
  while (off_diagonal() > threshold) {
    if (sweep++ >= options.max_sweeps) {
      raise(ErrorKind::NoConvergence,
            "Jacobi iteration exceeded " + std::to_string(options.max_sweeps) + " sweeps");
    }
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const complex g = a(p, q);
        const double mag = std::abs(g);
        if (mag == 0.0) continue;
        const complex phase = std::conj(g) / mag;  // e^{-i phi}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double theta = (aqq - app) / (2.0 * mag);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;

        const complex upp = c;
        const complex upq = s;
        const complex uqp = -s * phase;
        const complex uqq = c * phase;

        for (std::size_t k = 0; k < n; ++k) {
          const complex akp = a(k, p);
          const complex akq = a(k, q);
          a(k, p) = akp * upp + akq * uqp;
          a(k, q) = akp * upq + akq * uqq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const complex apk = a(p, k);
          const complex aqk = a(q, k);
          a(p, k) = std::conj(upp) * apk + std::conj(uqp) * aqk;
          a(q, k) = std::conj(upq) * apk + std::conj(uqq) * aqk;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
        a(p, p) = app - t * mag;
        a(q, q) = aqq + t * mag;

        for (std::size_t k = 0; k < n; ++k) {
          const complex vkp = v(k, p);
          const complex vkq = v(k, q);
          v(k, p) = vkp * upp + vkq * uqp;
          v(k, q) = vkp * upq + vkq * uqq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t i, std::size_t j) { return a(i, i).real() > a(j, j).real(); });

  EigenSystem out{std::vector<double>(n), ComplexMatrix(n, n)};
  for (std::size_t k = 0; k < n; ++k) {
    out.values[k] = a(order[k], order[k]).real();
    for (std::size_t i = 0; i < n; ++i) out.vectors(i, k) = v(i, order[k]);
  }
  return out;
}

inline std::vector<double> eigenvalues(const HermitianOperator& op) {
  return eig_hermitian(op).values;
}

/// V diag(values) V^dagger.
inline ComplexMatrix reconstruct(const EigenSystem& es) {
  const std::size_t n = es.values.size();
  ComplexMatrix out(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      complex s{0.0, 0.0};
      for (std::size_t k = 0; k < n; ++k) s += es.vectors(i, k) * es.values[k] * std::conj(es.vectors(j, k));
      out(i, j) = s;
    }
  return out;
}

inline ComplexMatrix kron(const ComplexMatrix& a, const ComplexMatrix& b,
                          std::size_t dimension_cap = kDefaultDimensionCap) {
  const std::size_t rows = a.rows() * b.rows();
  const std::size_t cols = a.cols() * b.cols();
  if (rows > dimension_cap || cols > dimension_cap) {
    raise(ErrorKind::DimensionOverflow, "Kronecker product dimension " + std::to_string(rows) + "x" +
                                            std::to_string(cols) + " exceeds cap " +
                                            std::to_string(dimension_cap));
  }
  ComplexMatrix out(rows, cols);
  for (std::size_t ia = 0; ia < a.rows(); ++ia)
    for (std::size_t ja = 0; ja < a.cols(); ++ja) {
      const complex x = a(ia, ja);
      if (x == complex{0.0, 0.0}) continue;
      for (std::size_t ib = 0; ib < b.rows(); ++ib)
        for (std::size_t jb = 0; jb < b.cols(); ++jb)
          out(ia * b.rows() + ib, ja * b.cols() + jb) = x * b(ib, jb);
    }
  return out;
}

inline HermitianOperator kron(const HermitianOperator& a, const HermitianOperator& b,
                              std::size_t dimension_cap = kDefaultDimensionCap) {
  return HermitianOperator(kron(a.matrix(), b.matrix(), dimension_cap));
}

/// tr|A| as the sum of absolute eigenvalues.
inline double trace_norm(const HermitianOperator& a) {
  double s = 0.0;
  for (double lambda : eigenvalues(a)) s += std::abs(lambda);
  return s;
}

/// Count of eigenvalues with |lambda| above kRankTolerance * max |lambda|.
inline std::size_t numeric_rank(std::span<const double> values, double relative_tol = kRankTolerance) {
  double top = 0.0;
  for (double x : values) top = std::max(top, std::abs(x));
  if (top == 0.0) return 0;
  return static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [&](double x) { return std::abs(x) > relative_tol * top; }));
}

inline std::size_t numeric_rank(const HermitianOperator& a, double relative_tol = kRankTolerance) {
  const auto values = eigenvalues(a);
  return numeric_rank(values, relative_tol);
}

/// tr(A B) without forming the product.
inline complex trace_of_product(const ComplexMatrix& a, const ComplexMatrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols()) {
    raise(ErrorKind::DimensionMismatch, "trace_of_product of incompatible shapes");
  }
  complex s{0.0, 0.0};
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, i);
  return s;
}

}  // namespace qpa

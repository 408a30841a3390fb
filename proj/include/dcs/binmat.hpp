#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace dcs {

/// Default threshold below which a floating-point entry counts as a
/// structural zero.
inline constexpr double kDefaultStructTol = 1e-9;

/// Dense 0/1 matrix over the boolean semiring. Encodes sparsity patterns:
/// sensing/communication topologies, impulse-response supports and the
/// per-block information structure.
///
/// Values are immutable after construction. Products and sums follow the
/// boolean semiring (OR of ANDs), i.e. the pattern of the product of the
/// corresponding 0/1 real matrices.
class BinaryMatrix {
 public:
  BinaryMatrix() = default;
  /// All-zero matrix of the given shape.
  BinaryMatrix(std::size_t rows, std::size_t cols);
  /// Row-major nested list; every entry must be 0 or 1 and rows must be
  /// of equal length.
  BinaryMatrix(std::initializer_list<std::initializer_list<int>> rows);
  explicit BinaryMatrix(const std::vector<std::vector<int>>& rows);

  static BinaryMatrix Zero(std::size_t rows, std::size_t cols);
  static BinaryMatrix Ones(std::size_t rows, std::size_t cols);
  static BinaryMatrix Identity(std::size_t size);
  static BinaryMatrix FromFunction(
      std::size_t rows, std::size_t cols,
      const std::function<bool(std::size_t, std::size_t)>& entry);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return rows_ == 0 || cols_ == 0; }

  bool operator()(std::size_t i, std::size_t j) const;

  /// Copy with entry (i, j) replaced.
  BinaryMatrix WithEntry(std::size_t i, std::size_t j, bool value) const;
  BinaryMatrix Transpose() const;
  BinaryMatrix Block(std::size_t row, std::size_t col, std::size_t rows,
                     std::size_t cols) const;
  /// Copy with `block` written at (row, col).
  BinaryMatrix WithBlock(std::size_t row, std::size_t col,
                         const BinaryMatrix& block) const;

  std::size_t count() const;
  bool all_zero() const { return count() == 0; }
  bool all_ones() const { return count() == rows_ * cols_; }

  /// The pattern as a 0/1 real matrix.
  Eigen::MatrixXd ToReal() const;
  std::vector<std::vector<int>> ToRows() const;
  std::string ToString() const;

  friend bool operator==(const BinaryMatrix& a, const BinaryMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.bits_ == b.bits_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<std::uint8_t> bits_;
};

/// Result of an entrywise comparison X <= Y.
struct OrderReport {
  bool holds = true;
  /// Every (i, j) with X(i,j) = 1 and Y(i,j) = 0, row-major.
  std::vector<std::pair<std::size_t, std::size_t>> violations;
};

/// Entry (i,j) is 1 iff |Y(i,j)| > tol.
BinaryMatrix StructOf(const Eigen::Ref<const Eigen::MatrixXd>& Y,
                      double tol = kDefaultStructTol);

/// Boolean product. Throws std::invalid_argument on shape mismatch.
BinaryMatrix BoolMul(const BinaryMatrix& X, const BinaryMatrix& Z);
/// Entrywise OR. Throws std::invalid_argument on shape mismatch.
BinaryMatrix BoolAdd(const BinaryMatrix& X, const BinaryMatrix& Y);
/// r-fold boolean product of a square matrix; r = 0 gives the identity.
BinaryMatrix BoolPow(const BinaryMatrix& Z, std::size_t r);

OrderReport Leq(const BinaryMatrix& X, const BinaryMatrix& Y);

/// True iff |Y(i,j)| <= tol wherever X(i,j) = 0, i.e. Y lies in the
/// sparsity subspace of X up to tol.
bool Member(const Eigen::Ref<const Eigen::MatrixXd>& Y, const BinaryMatrix& X,
            double tol = 0.0);

/// Y with every entry outside the pattern X set to zero.
Eigen::MatrixXd Project(const Eigen::Ref<const Eigen::MatrixXd>& Y,
                        const BinaryMatrix& X);

inline BinaryMatrix operator*(const BinaryMatrix& a, const BinaryMatrix& b) {
  return BoolMul(a, b);
}
inline BinaryMatrix operator+(const BinaryMatrix& a, const BinaryMatrix& b) {
  return BoolAdd(a, b);
}
inline bool operator<=(const BinaryMatrix& a, const BinaryMatrix& b) {
  return Leq(a, b).holds;
}

}  // namespace dcs

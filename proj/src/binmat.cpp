#include "dcs/binmat.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace dcs {
namespace {

void RequireSameShape(const BinaryMatrix& a, const BinaryMatrix& b,
                      const char* op) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream msg;
    msg << op << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs "
        << b.rows() << "x" << b.cols();
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

BinaryMatrix::BinaryMatrix(std::size_t rows, std::size_t cols)
    : rows_(rows), cols_(cols), bits_(rows * cols, 0) {}

BinaryMatrix::BinaryMatrix(
    std::initializer_list<std::initializer_list<int>> rows) {
  std::vector<std::vector<int>> copy;
  copy.reserve(rows.size());
  for (const auto& r : rows) copy.emplace_back(r);
  *this = BinaryMatrix(copy);
}

BinaryMatrix::BinaryMatrix(const std::vector<std::vector<int>>& rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.front().size();
  bits_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw std::invalid_argument("BinaryMatrix: ragged rows");
    }
    for (int v : r) {
      if (v != 0 && v != 1) {
        throw std::invalid_argument("BinaryMatrix: entries must be 0 or 1");
      }
      bits_.push_back(static_cast<std::uint8_t>(v));
    }
  }
}

BinaryMatrix BinaryMatrix::Zero(std::size_t rows, std::size_t cols) {
  return BinaryMatrix(rows, cols);
}

BinaryMatrix BinaryMatrix::Ones(std::size_t rows, std::size_t cols) {
  BinaryMatrix out(rows, cols);
  std::fill(out.bits_.begin(), out.bits_.end(), 1);
  return out;
}

BinaryMatrix BinaryMatrix::Identity(std::size_t size) {
  BinaryMatrix out(size, size);
  for (std::size_t i = 0; i < size; ++i) out.bits_[i * size + i] = 1;
  return out;
}

BinaryMatrix BinaryMatrix::FromFunction(
    std::size_t rows, std::size_t cols,
    const std::function<bool(std::size_t, std::size_t)>& entry) {
  BinaryMatrix out(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      out.bits_[i * cols + j] = entry(i, j) ? 1 : 0;
    }
  }
  return out;
}

bool BinaryMatrix::operator()(std::size_t i, std::size_t j) const {
  if (i >= rows_ || j >= cols_) {
    throw std::out_of_range("BinaryMatrix: index out of range");
  }
  return bits_[i * cols_ + j] != 0;
}

BinaryMatrix BinaryMatrix::WithEntry(std::size_t i, std::size_t j,
                                     bool value) const {
  if (i >= rows_ || j >= cols_) {
    throw std::out_of_range("BinaryMatrix: index out of range");
  }
  BinaryMatrix out = *this;
  out.bits_[i * cols_ + j] = value ? 1 : 0;
  return out;
}

BinaryMatrix BinaryMatrix::Transpose() const {
  return FromFunction(cols_, rows_,
                      [this](std::size_t i, std::size_t j) { return (*this)(j, i); });
}

BinaryMatrix BinaryMatrix::Block(std::size_t row, std::size_t col,
                                 std::size_t rows, std::size_t cols) const {
  if (row + rows > rows_ || col + cols > cols_) {
    throw std::out_of_range("BinaryMatrix::Block: out of range");
  }
  return FromFunction(rows, cols, [&](std::size_t i, std::size_t j) {
    return (*this)(row + i, col + j);
  });
}

BinaryMatrix BinaryMatrix::WithBlock(std::size_t row, std::size_t col,
                                     const BinaryMatrix& block) const {
  if (row + block.rows() > rows_ || col + block.cols() > cols_) {
    throw std::out_of_range("BinaryMatrix::WithBlock: out of range");
  }
  BinaryMatrix out = *this;
  for (std::size_t i = 0; i < block.rows(); ++i) {
    for (std::size_t j = 0; j < block.cols(); ++j) {
      out.bits_[(row + i) * cols_ + col + j] = block(i, j) ? 1 : 0;
    }
  }
  return out;
}

std::size_t BinaryMatrix::count() const {
  std::size_t total = 0;
  for (auto b : bits_) total += b;
  return total;
}

Eigen::MatrixXd BinaryMatrix::ToReal() const {
  Eigen::MatrixXd out(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) {
      out(i, j) = bits_[i * cols_ + j];
    }
  }
  return out;
}

std::vector<std::vector<int>> BinaryMatrix::ToRows() const {
  std::vector<std::vector<int>> out(rows_, std::vector<int>(cols_));
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out[i][j] = bits_[i * cols_ + j];
  }
  return out;
}

std::string BinaryMatrix::ToString() const {
  std::ostringstream os;
  os << "[";
  for (std::size_t i = 0; i < rows_; ++i) {
    os << (i ? ",[" : "[");
    for (std::size_t j = 0; j < cols_; ++j) {
      os << (j ? "," : "") << static_cast<int>(bits_[i * cols_ + j]);
    }
    os << "]";
  }
  os << "]";
  return os.str();
}

BinaryMatrix StructOf(const Eigen::Ref<const Eigen::MatrixXd>& Y, double tol) {
  if (!(tol >= 0.0)) {
    throw std::invalid_argument("StructOf: tolerance must be nonnegative");
  }
  return BinaryMatrix::FromFunction(
      Y.rows(), Y.cols(),
      [&](std::size_t i, std::size_t j) { return std::abs(Y(i, j)) > tol; });
}

BinaryMatrix BoolMul(const BinaryMatrix& X, const BinaryMatrix& Z) {
  if (X.cols() != Z.rows()) {
    std::ostringstream msg;
    msg << "BoolMul: inner dimensions differ (" << X.rows() << "x" << X.cols()
        << " times " << Z.rows() << "x" << Z.cols() << ")";
    throw std::invalid_argument(msg.str());
  }
  return BinaryMatrix::FromFunction(
      X.rows(), Z.cols(), [&](std::size_t i, std::size_t j) {
        for (std::size_t k = 0; k < X.cols(); ++k) {
          if (X(i, k) && Z(k, j)) return true;
        }
        return false;
      });
}

BinaryMatrix BoolAdd(const BinaryMatrix& X, const BinaryMatrix& Y) {
  RequireSameShape(X, Y, "BoolAdd");
  return BinaryMatrix::FromFunction(
      X.rows(), X.cols(),
      [&](std::size_t i, std::size_t j) { return X(i, j) || Y(i, j); });
}

BinaryMatrix BoolPow(const BinaryMatrix& Z, std::size_t r) {
  if (Z.rows() != Z.cols()) {
    throw std::invalid_argument("BoolPow: matrix must be square");
  }
  BinaryMatrix out = BinaryMatrix::Identity(Z.rows());
  for (std::size_t i = 0; i < r; ++i) {
    BinaryMatrix next = BoolMul(out, Z);
    if (next == out) break;  // fixed point: further powers are identical
    out = std::move(next);
  }
  return out;
}

OrderReport Leq(const BinaryMatrix& X, const BinaryMatrix& Y) {
  RequireSameShape(X, Y, "Leq");
  OrderReport report;
  for (std::size_t i = 0; i < X.rows(); ++i) {
    for (std::size_t j = 0; j < X.cols(); ++j) {
      if (X(i, j) && !Y(i, j)) report.violations.emplace_back(i, j);
    }
  }
  report.holds = report.violations.empty();
  return report;
}

bool Member(const Eigen::Ref<const Eigen::MatrixXd>& Y, const BinaryMatrix& X,
            double tol) {
  if (static_cast<std::size_t>(Y.rows()) != X.rows() ||
      static_cast<std::size_t>(Y.cols()) != X.cols()) {
    throw std::invalid_argument("Member: shape mismatch");
  }
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    for (Eigen::Index j = 0; j < Y.cols(); ++j) {
      if (!X(i, j) && std::abs(Y(i, j)) > tol) return false;
    }
  }
  return true;
}

Eigen::MatrixXd Project(const Eigen::Ref<const Eigen::MatrixXd>& Y,
                        const BinaryMatrix& X) {
  if (static_cast<std::size_t>(Y.rows()) != X.rows() ||
      static_cast<std::size_t>(Y.cols()) != X.cols()) {
    throw std::invalid_argument("Project: shape mismatch");
  }
  return Y.cwiseProduct(X.ToReal());
}

}  // namespace dcs

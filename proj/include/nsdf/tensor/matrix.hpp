#pragma once

#include <cmath>
#include <initializer_list>
#include <sstream>
#include <vector>

#include "nsdf/core.hpp"

namespace nsdf::tensor {

// Vector allocator that default-initializes on resize, so buffers that are
// fully overwritten right away skip the zero fill.
template <typename T, typename Base = std::allocator<T>>
struct DefaultInitAllocator : Base {
  template <typename U>
  struct rebind {
    using other = DefaultInitAllocator<U, typename std::allocator_traits<Base>::template rebind_alloc<U>>;
  };
  using Base::Base;
  template <typename U>
  void construct(U* ptr) noexcept(std::is_nothrow_default_constructible_v<U>) {
    ::new (static_cast<void*>(ptr)) U;
  }
  template <typename U, typename... Args>
  void construct(U* ptr, Args&&... args) {
    std::allocator_traits<Base>::construct(static_cast<Base&>(*this), ptr,
                                           std::forward<Args>(args)...);
  }
};

// Dense row-major matrix. Point batches are stored as 3xk (or 4xk) matrices,
// one point per column, so layer evaluation maps onto plain matrix products.
template <typename T>
class Matrix {
public:
  using Storage = std::vector<T, DefaultInitAllocator<T>>;

  Matrix() = default;
  Matrix(int rows, int cols) : rows_(rows), cols_(cols), data_(size_t(rows) * cols, T(0)) {
    if (rows < 0 || cols < 0)
      throw Error(ErrorKind::contract, "matrix dimensions must be non-negative");
  }
  Matrix(int rows, int cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(data.begin(), data.end()) {
    if (data_.size() != size_t(rows) * cols)
      throw Error(ErrorKind::contract, "matrix data length does not match rows*cols");
  }

  // Entries are not cleared; every element must be written before use.
  static Matrix uninitialized(int rows, int cols) {
    Matrix m;
    m.rows_ = rows;
    m.cols_ = cols;
    m.data_.resize(size_t(rows) * cols);
    return m;
  }
  Matrix(std::initializer_list<std::initializer_list<T>> rows) {
    rows_ = int(rows.size());
    cols_ = rows_ ? int(rows.begin()->size()) : 0;
    data_.reserve(size_t(rows_) * cols_);
    for (const auto& r : rows) {
      if (int(r.size()) != cols_)
        throw Error(ErrorKind::contract, "ragged initializer for matrix");
      data_.insert(data_.end(), r.begin(), r.end());
    }
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = T(1);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }
  Storage& storage() { return data_; }
  const Storage& storage() const { return data_; }
  std::vector<T> to_vector() const { return std::vector<T>(data_.begin(), data_.end()); }

  T& operator()(int r, int c) { return data_[size_t(r) * cols_ + c]; }
  const T& operator()(int r, int c) const { return data_[size_t(r) * cols_ + c]; }

  T* row(int r) { return data_.data() + size_t(r) * cols_; }
  const T* row(int r) const { return data_.data() + size_t(r) * cols_; }

  bool all_finite() const {
    for (const T& v : data_)
      if (!std::isfinite(double(v))) return false;
    return true;
  }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  std::string shape_str() const {
    std::ostringstream os;
    os << rows_ << "x" << cols_;
    return os.str();
  }

  template <typename U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (size_t i = 0; i < data_.size(); ++i) out.data()[i] = U(data_[i]);
    return out;
  }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

private:
  int rows_ = 0;
  int cols_ = 0;
  Storage data_;
};

}  // namespace nsdf::tensor

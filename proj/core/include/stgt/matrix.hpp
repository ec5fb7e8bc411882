#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace stgt {

/// Dense row-major matrix of doubles. The single numeric container used by
/// the differentiation tape, the tree learners and the feature pipeline.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> values);
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix zeros(std::size_t rows, std::size_t cols) { return Matrix(rows, cols, 0.0); }
    static Matrix full(std::size_t rows, std::size_t cols, double v) { return Matrix(rows, cols, v); }
    static Matrix identity(std::size_t n);
    static Matrix row_vector(std::span<const double> v);
    static Matrix column_vector(std::span<const double> v);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }
    std::vector<double>& values() { return data_; }
    const std::vector<double>& values() const { return data_; }

    bool same_shape(const Matrix& other) const {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }

    void fill(double v);
    bool all_finite() const;

    Matrix transposed() const;

    bool operator==(const Matrix& other) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// c += a * b. Shapes must already agree; kernels keep the inner loop
/// contiguous so the compiler can vectorize them.
void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c);
/// c += a^T * b
void matmul_at_b_acc(const Matrix& a, const Matrix& b, Matrix& c);
/// c += a * b^T
void matmul_a_bt_acc(const Matrix& a, const Matrix& b, Matrix& c);

Matrix matmul(const Matrix& a, const Matrix& b);

double l2_norm(std::span<const double> v);
double dot(std::span<const double> a, std::span<const double> b);

} // namespace stgt

#include "stgt/matrix.hpp"

#include <cmath>
#include <cstring>
#include <sstream>

#include "stgt/error.hpp"

namespace stgt {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> values)
    : rows_(rows), cols_(cols), data_(std::move(values)) {
    if (data_.size() != rows_ * cols_) {
        std::ostringstream os;
        os << "Matrix: " << data_.size() << " values for shape " << rows_ << "x" << cols_;
        throw ShapeError(os.str());
    }
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
    rows_ = rows.size();
    cols_ = rows_ == 0 ? 0 : rows.begin()->size();
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeError("Matrix: ragged initializer rows");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::row_vector(std::span<const double> v) {
    return Matrix(1, v.size(), std::vector<double>(v.begin(), v.end()));
}

Matrix Matrix::column_vector(std::span<const double> v) {
    return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

void Matrix::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Matrix::all_finite() const {
    for (double x : data_)
        if (!std::isfinite(x)) return false;
    return true;
}

Matrix Matrix::transposed() const {
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

namespace {

void check_mm(std::size_t ak, std::size_t bk, std::size_t am, std::size_t bn,
              std::size_t cm, std::size_t cn, const char* what) {
    if (ak != bk || am != cm || bn != cn) {
        std::ostringstream os;
        os << what << ": shapes " << am << "x" << ak << " and " << bk << "x" << bn
           << " into " << cm << "x" << cn;
        throw ShapeError(os.str());
    }
}

} // namespace

void matmul_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    check_mm(a.cols(), b.rows(), a.rows(), b.cols(), c.rows(), c.cols(), "matmul");
    const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
    for (std::size_t i = 0; i < m; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t p = 0; p < k; ++p) {
            const double av = ai[p];
            const double* bp = b.row(p);
            for (std::size_t j = 0; j < n; ++j) ci[j] += av * bp[j];
        }
    }
}

void matmul_at_b_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    check_mm(a.rows(), b.rows(), a.cols(), b.cols(), c.rows(), c.cols(), "matmul_at_b");
    const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
    for (std::size_t i = 0; i < k; ++i) {
        const double* ai = a.row(i);
        const double* bi = b.row(i);
        for (std::size_t p = 0; p < m; ++p) {
            const double av = ai[p];
            double* cp = c.row(p);
            for (std::size_t j = 0; j < n; ++j) cp[j] += av * bi[j];
        }
    }
}

void matmul_a_bt_acc(const Matrix& a, const Matrix& b, Matrix& c) {
    check_mm(a.cols(), b.cols(), a.rows(), b.rows(), c.rows(), c.cols(), "matmul_a_bt");
    const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
    for (std::size_t i = 0; i < m; ++i) {
        const double* ai = a.row(i);
        double* ci = c.row(i);
        for (std::size_t j = 0; j < n; ++j) {
            const double* bj = b.row(j);
            double acc = 0.0;
            for (std::size_t p = 0; p < k; ++p) acc += ai[p] * bj[p];
            ci[j] += acc;
        }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) {
        std::ostringstream os;
        os << "matmul: inner dimensions disagree, " << a.rows() << "x" << a.cols()
           << " vs " << b.rows() << "x" << b.cols();
        throw ShapeError(os.str());
    }
    Matrix c(a.rows(), b.cols());
    matmul_acc(a, b, c);
    return c;
}

double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

} // namespace stgt

#pragma once

#include <cstddef>
#include <vector>

namespace scr {

// Dense row-major double matrix. All training math runs in 64-bit floats.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    double* row(std::size_t r) { return data_.data() + r * cols_; }
    const double* row(std::size_t r) const { return data_.data() + r * cols_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::size_t size() const { return data_.size(); }

    void fill(double v) { data_.assign(data_.size(), v); }

    bool same_shape(const Matrix& other) const { return rows_ == other.rows_ && cols_ == other.cols_; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

// GEMM kernels. Accumulation order is fixed by the source (manually split
// accumulators, no -ffast-math), so results are bit-reproducible run to run.
// Shapes are asserted by the callers; these are the hot loops.

// out = a * b^T          [a.rows x b.rows], requires a.cols == b.cols
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out);
// out = a * b            [a.rows x b.cols], requires a.cols == b.rows
void gemm_nn(const Matrix& a, const Matrix& b, Matrix& out);
// out = a^T * b          [a.cols x b.cols], requires a.rows == b.rows
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out);

Matrix matmul_nt(const Matrix& a, const Matrix& b);
Matrix matmul_nn(const Matrix& a, const Matrix& b);
Matrix matmul_tn(const Matrix& a, const Matrix& b);

// y += s * x over n entries.
void axpy(double s, const double* x, double* y, std::size_t n);
// Eight-lane dot product with a fixed combine order.
double dot(const double* a, const double* b, std::size_t n);

bool all_finite(const Matrix& m);
bool all_finite(const std::vector<double>& v);

}  // namespace scr

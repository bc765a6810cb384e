#include "scr/matrix.hpp"

#include <cassert>
#include <cmath>

namespace scr {

double dot(const double* __restrict a, const double* __restrict b, std::size_t n) {
    double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
    std::size_t k = 0;
    for (; k + 8 <= n; k += 8) {
        for (int u = 0; u < 8; ++u) acc[u] += a[k + u] * b[k + u];
    }
    double tail = 0.0;
    for (; k < n; ++k) tail += a[k] * b[k];
    return (((acc[0] + acc[4]) + (acc[2] + acc[6])) + ((acc[1] + acc[5]) + (acc[3] + acc[7]))) + tail;
}

void axpy(double s, const double* __restrict x, double* __restrict y, std::size_t n) {
    for (std::size_t j = 0; j < n; ++j) y[j] += s * x[j];
}

void gemm_nt(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols() == b.cols());
    const std::size_t m = a.rows(), n = b.rows(), k = a.cols();
    if (!(out.rows() == m && out.cols() == n)) out = Matrix(m, n);
    // b-row tiles stay cache-resident across the whole a sweep; four output
    // rows per pass so each b row is loaded once for four dots.
    constexpr std::size_t kBlockRows = 48;
    for (std::size_t j0 = 0; j0 < n; j0 += kBlockRows) {
        const std::size_t j1 = std::min(j0 + kBlockRows, n);
        std::size_t i = 0;
        for (; i + 4 <= m; i += 4) {
            const double* a0 = a.row(i);
            const double* a1 = a.row(i + 1);
            const double* a2 = a.row(i + 2);
            const double* a3 = a.row(i + 3);
            double* o0 = out.row(i);
            double* o1 = out.row(i + 1);
            double* o2 = out.row(i + 2);
            double* o3 = out.row(i + 3);
            for (std::size_t j = j0; j < j1; ++j) {
                const double* br = b.row(j);
                o0[j] = dot(a0, br, k);
                o1[j] = dot(a1, br, k);
                o2[j] = dot(a2, br, k);
                o3[j] = dot(a3, br, k);
            }
        }
        for (; i < m; ++i) {
            const double* ar = a.row(i);
            double* orow = out.row(i);
            for (std::size_t j = j0; j < j1; ++j) orow[j] = dot(ar, b.row(j), k);
        }
    }
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.cols() == b.rows());
    const std::size_t m = a.rows(), n = b.cols(), kk = a.cols();
    if (!(out.rows() == m && out.cols() == n)) out = Matrix(m, n);
    out.fill(0.0);
    // k-blocked so a tile of b rows is reused across every output row; the
    // per-element accumulation order over k stays ascending.
    constexpr std::size_t kBlock = 64;
    for (std::size_t k0 = 0; k0 < kk; k0 += kBlock) {
        const std::size_t k1 = std::min(k0 + kBlock, kk);
        for (std::size_t i = 0; i < m; ++i) {
            double* __restrict orow = out.row(i);
            const double* arow = a.row(i);
            std::size_t k = k0;
            for (; k + 4 <= k1; k += 4) {
                const double a0 = arow[k], a1 = arow[k + 1], a2 = arow[k + 2], a3 = arow[k + 3];
                const double* __restrict b0 = b.row(k);
                const double* __restrict b1 = b.row(k + 1);
                const double* __restrict b2 = b.row(k + 2);
                const double* __restrict b3 = b.row(k + 3);
                for (std::size_t j = 0; j < n; ++j) {
                    orow[j] += ((a0 * b0[j] + a1 * b1[j]) + (a2 * b2[j] + a3 * b3[j]));
                }
            }
            for (; k < k1; ++k) axpy(arow[k], b.row(k), orow, n);
        }
    }
}

void gemm_tn(const Matrix& a, const Matrix& b, Matrix& out) {
    assert(a.rows() == b.rows());
    const std::size_t m = a.cols(), n = b.cols(), rows = a.rows();
    if (!(out.rows() == m && out.cols() == n)) out = Matrix(m, n);
    out.fill(0.0);
    std::size_t r = 0;
    for (; r + 4 <= rows; r += 4) {
        const double* a0 = a.row(r);
        const double* a1 = a.row(r + 1);
        const double* a2 = a.row(r + 2);
        const double* a3 = a.row(r + 3);
        const double* b0 = b.row(r);
        const double* b1 = b.row(r + 1);
        const double* b2 = b.row(r + 2);
        const double* b3 = b.row(r + 3);
        for (std::size_t o = 0; o < m; ++o) {
            double* __restrict orow = out.row(o);
            const double s0 = a0[o], s1 = a1[o], s2 = a2[o], s3 = a3[o];
            for (std::size_t j = 0; j < n; ++j) {
                orow[j] += ((s0 * b0[j] + s1 * b1[j]) + (s2 * b2[j] + s3 * b3[j]));
            }
        }
    }
    for (; r < rows; ++r) {
        const double* arow = a.row(r);
        const double* brow = b.row(r);
        for (std::size_t o = 0; o < m; ++o) axpy(arow[o], brow, out.row(o), n);
    }
}

Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    Matrix out;
    gemm_nt(a, b, out);
    return out;
}

Matrix matmul_nn(const Matrix& a, const Matrix& b) {
    Matrix out;
    gemm_nn(a, b, out);
    return out;
}

Matrix matmul_tn(const Matrix& a, const Matrix& b) {
    Matrix out;
    gemm_tn(a, b, out);
    return out;
}

bool all_finite(const Matrix& m) {
    const double* p = m.data();
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (!std::isfinite(p[i])) return false;
    }
    return true;
}

bool all_finite(const std::vector<double>& v) {
    for (double x : v) {
        if (!std::isfinite(x)) return false;
    }
    return true;
}

}  // namespace scr

#pragma once

// Hot numeric kernels. Each kernel exists twice: `serial` is the reference
// implementation kept for testing, `parallel` splits independent output rows
// across OpenMP threads. Every output element is accumulated in the same
// order in both variants, so results are bitwise identical for any thread
// count. The unqualified functions dispatch to the parallel variant when the
// library is built with OpenMP.

#include <cstddef>

namespace dfm::kernels {

struct ConstMat {
    const double* data;
    std::size_t rows;
    std::size_t cols;
};

struct Mat {
    double* data;
    std::size_t rows;
    std::size_t cols;
};

/// Uniform (x, y) bucketing of a 3-column point set. Cells are stored in
/// row-major order (iy * nx + ix); `items[cell_start[c] .. cell_start[c+1])`
/// holds ascending point indices for cell c.
struct XyGridView {
    double x0 = 0.0;
    double y0 = 0.0;
    double cell = 1.0;
    std::size_t nx = 1;
    std::size_t ny = 1;
    const std::size_t* cell_start = nullptr;
    const std::size_t* items = nullptr;
    const double* points = nullptr;
    std::size_t n_points = 0;
};

struct LandKernelParams {
    double sigma;
    double eps;
    /// Points farther than this (in x,y) from the query are skipped.
    double cutoff;
};

#define DFM_KERNEL_DECLS                                                                     \
    /* C[m,n] = A[m,k] * B[k,n] */                                                           \
    void gemm_nn(ConstMat a, ConstMat b, Mat c);                                             \
    /* C[m,n] = A[m,k] * B[n,k]^T */                                                         \
    void gemm_nt(ConstMat a, ConstMat b, Mat c);                                             \
    /* C[m,n] = A[k,m]^T * B[k,n] */                                                         \
    void gemm_tn(ConstMat a, ConstMat b, Mat c);                                             \
    /* C[i,j] = |A_i - B_j|^2 */                                                             \
    void pairwise_sq_dist(ConstMat a, ConstMat b, Mat c);                                    \
    /* C[i,j] = |A_i - B_j| */                                                               \
    void pairwise_dist(ConstMat a, ConstMat b, Mat c);                                       \
    /* Diagonal LAND metric at each row of z (3 columns). */                                 \
    void land_diag(const XyGridView& grid, const LandKernelParams& p, ConstMat z, Mat g);   \
    /* value[b] = dz_b^T G(z_b) dz_b; gradients optional (nullptr to skip). */              \
    void land_quadratic(const XyGridView& grid, const LandKernelParams& p, ConstMat z,       \
                        ConstMat dz, double* value, double* grad_z, double* grad_dz);        \
    /* Index of the horizontally nearest grid point per query row; ties -> lowest index. */ \
    void nearest_xy(const XyGridView& grid, ConstMat queries, std::size_t* out);

namespace serial {
DFM_KERNEL_DECLS
}

namespace parallel {
DFM_KERNEL_DECLS
}

DFM_KERNEL_DECLS

#undef DFM_KERNEL_DECLS

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
int max_threads();

} // namespace dfm::kernels

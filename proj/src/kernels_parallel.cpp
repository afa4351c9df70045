#include "dfm/kernels.hpp"

#include "kernel_rows.hpp"

#include <cstdint>

#ifdef DFM_WITH_OPENMP
#include <omp.h>
#endif

namespace dfm::kernels {

namespace {

// Below this many multiply-adds a kernel runs on the calling thread.
constexpr std::size_t kParallelWork = 1 << 15;

template <class Body>
void for_rows(std::size_t rows, std::size_t work_per_row, Body&& body) {
#ifdef DFM_WITH_OPENMP
    const auto n = static_cast<std::int64_t>(rows);
    if (rows * work_per_row >= kParallelWork && omp_get_max_threads() > 1) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
        return;
    }
#else
    (void)work_per_row;
#endif
    for (std::size_t i = 0; i < rows; ++i) body(i);
}

} // namespace

int max_threads() {
#ifdef DFM_WITH_OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace parallel {

void gemm_nn(ConstMat a, ConstMat b, Mat c) {
    for_rows(c.rows, a.cols * c.cols, [&](std::size_t i) { detail::gemm_nn_row(a, b, c, i); });
}

void gemm_nt(ConstMat a, ConstMat b, Mat c) {
    for_rows(c.rows, a.cols * c.cols, [&](std::size_t i) { detail::gemm_nt_row(a, b, c, i); });
}

void gemm_tn(ConstMat a, ConstMat b, Mat c) {
    for_rows(c.rows, a.rows * c.cols, [&](std::size_t i) { detail::gemm_tn_row(a, b, c, i); });
}

void pairwise_sq_dist(ConstMat a, ConstMat b, Mat c) {
    for_rows(a.rows, b.rows * a.cols, [&](std::size_t i) { detail::pairwise_sq_dist_row(a, b, c, i); });
}

void pairwise_dist(ConstMat a, ConstMat b, Mat c) {
    for_rows(a.rows, b.rows * a.cols, [&](std::size_t i) { detail::pairwise_dist_row(a, b, c, i); });
}

void land_diag(const XyGridView& grid, const LandKernelParams& p, ConstMat z, Mat g) {
    for_rows(z.rows, kParallelWork, [&](std::size_t i) { detail::land_diag_row(grid, p, z, g, i); });
}

void land_quadratic(const XyGridView& grid, const LandKernelParams& p, ConstMat z, ConstMat dz,
                    double* value, double* grad_z, double* grad_dz) {
    for_rows(z.rows, kParallelWork, [&](std::size_t i) {
        detail::land_quadratic_row(grid, p, z, dz, value, grad_z, grad_dz, i);
    });
}

void nearest_xy(const XyGridView& grid, ConstMat queries, std::size_t* out) {
    for_rows(queries.rows, 64, [&](std::size_t i) {
        out[i] = detail::nearest_xy_row(grid, queries.data + i * queries.cols);
    });
}

} // namespace parallel

void gemm_nn(ConstMat a, ConstMat b, Mat c) { parallel::gemm_nn(a, b, c); }
void gemm_nt(ConstMat a, ConstMat b, Mat c) { parallel::gemm_nt(a, b, c); }
void gemm_tn(ConstMat a, ConstMat b, Mat c) { parallel::gemm_tn(a, b, c); }
void pairwise_sq_dist(ConstMat a, ConstMat b, Mat c) { parallel::pairwise_sq_dist(a, b, c); }
void pairwise_dist(ConstMat a, ConstMat b, Mat c) { parallel::pairwise_dist(a, b, c); }
void land_diag(const XyGridView& grid, const LandKernelParams& p, ConstMat z, Mat g) {
    parallel::land_diag(grid, p, z, g);
}
void land_quadratic(const XyGridView& grid, const LandKernelParams& p, ConstMat z, ConstMat dz,
                    double* value, double* grad_z, double* grad_dz) {
    parallel::land_quadratic(grid, p, z, dz, value, grad_z, grad_dz);
}
void nearest_xy(const XyGridView& grid, ConstMat queries, std::size_t* out) {
    parallel::nearest_xy(grid, queries, out);
}

} // namespace dfm::kernels

#include "dfm/kernels.hpp"

#include "kernel_rows.hpp"

namespace dfm::kernels::serial {

void gemm_nn(ConstMat a, ConstMat b, Mat c) {
    for (std::size_t i = 0; i < c.rows; ++i) detail::gemm_nn_row(a, b, c, i);
}

void gemm_nt(ConstMat a, ConstMat b, Mat c) {
    for (std::size_t i = 0; i < c.rows; ++i) detail::gemm_nt_row(a, b, c, i);
}

void gemm_tn(ConstMat a, ConstMat b, Mat c) {
    for (std::size_t i = 0; i < c.rows; ++i) detail::gemm_tn_row(a, b, c, i);
}

void pairwise_sq_dist(ConstMat a, ConstMat b, Mat c) {
    for (std::size_t i = 0; i < a.rows; ++i) detail::pairwise_sq_dist_row(a, b, c, i);
}

void pairwise_dist(ConstMat a, ConstMat b, Mat c) {
    for (std::size_t i = 0; i < a.rows; ++i) detail::pairwise_dist_row(a, b, c, i);
}

void land_diag(const XyGridView& grid, const LandKernelParams& p, ConstMat z, Mat g) {
    for (std::size_t i = 0; i < z.rows; ++i) detail::land_diag_row(grid, p, z, g, i);
}

void land_quadratic(const XyGridView& grid, const LandKernelParams& p, ConstMat z, ConstMat dz,
                    double* value, double* grad_z, double* grad_dz) {
    for (std::size_t i = 0; i < z.rows; ++i) {
        detail::land_quadratic_row(grid, p, z, dz, value, grad_z, grad_dz, i);
    }
}

void nearest_xy(const XyGridView& grid, ConstMat queries, std::size_t* out) {
    for (std::size_t i = 0; i < queries.rows; ++i) {
        out[i] = detail::nearest_xy_row(grid, queries.data + i * queries.cols);
    }
}

} // namespace dfm::kernels::serial

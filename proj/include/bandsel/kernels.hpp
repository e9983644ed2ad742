#pragma once

// Low-level NHWC kernels for dense and 2-D convolution layers.
//
// Two implementations share every signature: `kernels::` is the OpenMP
// version used by the layers, `kernels::serial::` is a direct loop-nest
// reference kept for tests and benchmarks. The parallel kernels partition
// work by output element only, so results never depend on the thread count.

#include <cstddef>
#include <span>

namespace bandsel::kernels {

/// Shape bookkeeping for a strided, zero-padded cross-correlation
/// input [batch, in_h, in_w, in_c] -> output [batch, out_h, out_w, out_c]
/// with kernel [kh, kw, in_c, out_c].
struct ConvGeometry {
    std::size_t batch = 1;
    std::size_t in_h = 1, in_w = 1, in_c = 1;
    std::size_t out_h = 1, out_w = 1, out_c = 1;
    std::size_t kh = 1, kw = 1;
    std::size_t stride = 1;
    std::size_t pad_top = 0, pad_left = 0;

    std::size_t input_size() const { return batch * in_h * in_w * in_c; }
    std::size_t output_size() const { return batch * out_h * out_w * out_c; }
    std::size_t kernel_size() const { return kh * kw * in_c * out_c; }
};

/// "same" padding: out = ceil(in / stride), padding split with the extra row/col at the bottom/right.
ConvGeometry same_geometry(std::size_t batch, std::size_t in_h, std::size_t in_w, std::size_t in_c,
                           std::size_t out_c, std::size_t kh, std::size_t kw, std::size_t stride);

// y[n, o] = sum_i x[n, i] * w[i, o] + b[o]
void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> b,
                   std::span<double> y, std::size_t batch, std::size_t in_dim, std::size_t out_dim);
// gx = gy * w^T (overwrites gx)
void dense_backward_input(std::span<const double> gy, std::span<const double> w, std::span<double> gx,
                          std::size_t batch, std::size_t in_dim, std::size_t out_dim);
// gw += x^T * gy, gb += column sums of gy
void dense_backward_params(std::span<const double> x, std::span<const double> gy, std::span<double> gw,
                           std::span<double> gb, std::size_t batch, std::size_t in_dim, std::size_t out_dim);

// Cross-correlation plus optional bias (empty span = no bias); overwrites y.
void conv_forward(std::span<const double> x, std::span<const double> k, std::span<const double> b,
                  std::span<double> y, const ConvGeometry& g);
// Adjoint of conv_forward w.r.t. its input; overwrites gx.
void conv_backward_input(std::span<const double> gy, std::span<const double> k, std::span<double> gx,
                         const ConvGeometry& g);
// gk += d<y, gy>/dk; gb (if non-empty) += per-channel sums of gy.
void conv_backward_kernel(std::span<const double> x, std::span<const double> gy, std::span<double> gk,
                          std::span<double> gb, const ConvGeometry& g);

// Per-channel spatial mean: [batch, h, w, c] -> [batch, c].
void global_mean_pool(std::span<const double> x, std::span<double> y, std::size_t batch, std::size_t h,
                      std::size_t w, std::size_t c);

namespace serial {

void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> b,
                   std::span<double> y, std::size_t batch, std::size_t in_dim, std::size_t out_dim);
void dense_backward_input(std::span<const double> gy, std::span<const double> w, std::span<double> gx,
                          std::size_t batch, std::size_t in_dim, std::size_t out_dim);
void dense_backward_params(std::span<const double> x, std::span<const double> gy, std::span<double> gw,
                           std::span<double> gb, std::size_t batch, std::size_t in_dim, std::size_t out_dim);
void conv_forward(std::span<const double> x, std::span<const double> k, std::span<const double> b,
                  std::span<double> y, const ConvGeometry& g);
void conv_backward_input(std::span<const double> gy, std::span<const double> k, std::span<double> gx,
                         const ConvGeometry& g);
void conv_backward_kernel(std::span<const double> x, std::span<const double> gy, std::span<double> gk,
                          std::span<double> gb, const ConvGeometry& g);
void global_mean_pool(std::span<const double> x, std::span<double> y, std::size_t batch, std::size_t h,
                      std::size_t w, std::size_t c);

}  // namespace serial

/// Number of OpenMP threads the kernels will use (1 without OpenMP).
int max_threads();
/// Caps kernel parallelism; n <= 0 leaves the runtime default.
void set_max_threads(int n);

}  // namespace bandsel::kernels

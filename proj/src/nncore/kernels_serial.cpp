// Straight loop-nest reference versions of the kernels in kernels.cpp.
// One output element per innermost reduction, no blocking, no threads.

#include "bandsel/kernels.hpp"

#include <cstdint>

namespace bandsel::kernels::serial {

namespace {

using idx = std::int64_t;

double input_at(std::span<const double> x, const ConvGeometry& g, std::size_t n, idx y, idx xx, std::size_t c)
{
    if (y < 0 || xx < 0 || y >= idx(g.in_h) || xx >= idx(g.in_w))
        return 0.0;
    return x[((n * g.in_h + std::size_t(y)) * g.in_w + std::size_t(xx)) * g.in_c + c];
}

}  // namespace

void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> b,
                   std::span<double> y, std::size_t batch, std::size_t in_dim, std::size_t out_dim)
{
    for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t o = 0; o < out_dim; ++o) {
            double s = b.empty() ? 0.0 : b[o];
            for (std::size_t i = 0; i < in_dim; ++i)
                s += x[n * in_dim + i] * w[i * out_dim + o];
            y[n * out_dim + o] = s;
        }
}

void dense_backward_input(std::span<const double> gy, std::span<const double> w, std::span<double> gx,
                          std::size_t batch, std::size_t in_dim, std::size_t out_dim)
{
    for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t i = 0; i < in_dim; ++i) {
            double s = 0.0;
            for (std::size_t o = 0; o < out_dim; ++o)
                s += gy[n * out_dim + o] * w[i * out_dim + o];
            gx[n * in_dim + i] = s;
        }
}

void dense_backward_params(std::span<const double> x, std::span<const double> gy, std::span<double> gw,
                           std::span<double> gb, std::size_t batch, std::size_t in_dim, std::size_t out_dim)
{
    for (std::size_t i = 0; i < in_dim; ++i)
        for (std::size_t o = 0; o < out_dim; ++o) {
            double s = 0.0;
            for (std::size_t n = 0; n < batch; ++n)
                s += x[n * in_dim + i] * gy[n * out_dim + o];
            gw[i * out_dim + o] += s;
        }
    if (!gb.empty())
        for (std::size_t o = 0; o < out_dim; ++o) {
            double s = 0.0;
            for (std::size_t n = 0; n < batch; ++n)
                s += gy[n * out_dim + o];
            gb[o] += s;
        }
}

void conv_forward(std::span<const double> x, std::span<const double> k, std::span<const double> b,
                  std::span<double> y, const ConvGeometry& g)
{
    for (std::size_t n = 0; n < g.batch; ++n)
        for (std::size_t oy = 0; oy < g.out_h; ++oy)
            for (std::size_t ox = 0; ox < g.out_w; ++ox)
                for (std::size_t co = 0; co < g.out_c; ++co) {
                    double s = b.empty() ? 0.0 : b[co];
                    for (std::size_t ky = 0; ky < g.kh; ++ky)
                        for (std::size_t kx = 0; kx < g.kw; ++kx)
                            for (std::size_t ci = 0; ci < g.in_c; ++ci) {
                                const idx iy = idx(oy * g.stride + ky) - idx(g.pad_top);
                                const idx ix = idx(ox * g.stride + kx) - idx(g.pad_left);
                                s += input_at(x, g, n, iy, ix, ci) *
                                     k[((ky * g.kw + kx) * g.in_c + ci) * g.out_c + co];
                            }
                    y[((n * g.out_h + oy) * g.out_w + ox) * g.out_c + co] = s;
                }
}

void conv_backward_input(std::span<const double> gy, std::span<const double> k, std::span<double> gx,
                         const ConvGeometry& g)
{
    for (double& v : gx)
        v = 0.0;
    // Scatter form: every output gradient pushes back through its receptive field.
    for (std::size_t n = 0; n < g.batch; ++n)
        for (std::size_t oy = 0; oy < g.out_h; ++oy)
            for (std::size_t ox = 0; ox < g.out_w; ++ox)
                for (std::size_t co = 0; co < g.out_c; ++co) {
                    const double gv = gy[((n * g.out_h + oy) * g.out_w + ox) * g.out_c + co];
                    for (std::size_t ky = 0; ky < g.kh; ++ky)
                        for (std::size_t kx = 0; kx < g.kw; ++kx) {
                            const idx iy = idx(oy * g.stride + ky) - idx(g.pad_top);
                            const idx ix = idx(ox * g.stride + kx) - idx(g.pad_left);
                            if (iy < 0 || ix < 0 || iy >= idx(g.in_h) || ix >= idx(g.in_w))
                                continue;
                            for (std::size_t ci = 0; ci < g.in_c; ++ci)
                                gx[((n * g.in_h + std::size_t(iy)) * g.in_w + std::size_t(ix)) * g.in_c + ci] +=
                                    gv * k[((ky * g.kw + kx) * g.in_c + ci) * g.out_c + co];
                        }
                }
}

void conv_backward_kernel(std::span<const double> x, std::span<const double> gy, std::span<double> gk,
                          std::span<double> gb, const ConvGeometry& g)
{
    for (std::size_t ky = 0; ky < g.kh; ++ky)
        for (std::size_t kx = 0; kx < g.kw; ++kx)
            for (std::size_t ci = 0; ci < g.in_c; ++ci)
                for (std::size_t co = 0; co < g.out_c; ++co) {
                    double s = 0.0;
                    for (std::size_t n = 0; n < g.batch; ++n)
                        for (std::size_t oy = 0; oy < g.out_h; ++oy)
                            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                                const idx iy = idx(oy * g.stride + ky) - idx(g.pad_top);
                                const idx ix = idx(ox * g.stride + kx) - idx(g.pad_left);
                                s += input_at(x, g, n, iy, ix, ci) *
                                     gy[((n * g.out_h + oy) * g.out_w + ox) * g.out_c + co];
                            }
                    gk[((ky * g.kw + kx) * g.in_c + ci) * g.out_c + co] += s;
                }
    if (!gb.empty())
        for (std::size_t co = 0; co < g.out_c; ++co) {
            double s = 0.0;
            for (std::size_t p = 0; p < g.batch * g.out_h * g.out_w; ++p)
                s += gy[p * g.out_c + co];
            gb[co] += s;
        }
}

void global_mean_pool(std::span<const double> x, std::span<double> y, std::size_t batch, std::size_t h,
                      std::size_t w, std::size_t c)
{
    for (std::size_t n = 0; n < batch; ++n)
        for (std::size_t ch = 0; ch < c; ++ch) {
            double s = 0.0;
            for (std::size_t p = 0; p < h * w; ++p)
                s += x[(n * h * w + p) * c + ch];
            y[n * c + ch] = s / double(h * w);
        }
}

}  // namespace bandsel::kernels::serial

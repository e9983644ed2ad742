#include "bandsel/kernels.hpp"

#include <algorithm>
#include <cstdint>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace bandsel::kernels {

namespace {

using idx = std::int64_t;

inline std::size_t pixel(const ConvGeometry& g, std::size_t n, std::size_t y, std::size_t x, bool input)
{
    return input ? ((n * g.in_h + y) * g.in_w + x) * g.in_c : ((n * g.out_h + y) * g.out_w + x) * g.out_c;
}

}  // namespace

ConvGeometry same_geometry(std::size_t batch, std::size_t in_h, std::size_t in_w, std::size_t in_c,
                           std::size_t out_c, std::size_t kh, std::size_t kw, std::size_t stride)
{
    ConvGeometry g;
    g.batch = batch;
    g.in_h = in_h;
    g.in_w = in_w;
    g.in_c = in_c;
    g.out_c = out_c;
    g.kh = kh;
    g.kw = kw;
    g.stride = stride;
    g.out_h = (in_h + stride - 1) / stride;
    g.out_w = (in_w + stride - 1) / stride;
    const idx pad_h = std::max<idx>(idx((g.out_h - 1) * stride + kh) - idx(in_h), 0);
    const idx pad_w = std::max<idx>(idx((g.out_w - 1) * stride + kw) - idx(in_w), 0);
    g.pad_top = std::size_t(pad_h / 2);
    g.pad_left = std::size_t(pad_w / 2);
    return g;
}

void dense_forward(std::span<const double> x, std::span<const double> w, std::span<const double> b,
                   std::span<double> y, std::size_t batch, std::size_t in_dim, std::size_t out_dim)
{
    const double* xp = x.data();
    const double* wp = w.data();
    double* yp = y.data();
#pragma omp parallel for schedule(static)
    for (idx n = 0; n < idx(batch); ++n) {
        double* yrow = yp + n * out_dim;
        if (b.empty())
            std::fill_n(yrow, out_dim, 0.0);
        else
            std::copy_n(b.data(), out_dim, yrow);
        const double* xrow = xp + n * in_dim;
        for (std::size_t i = 0; i < in_dim; ++i) {
            const double xv = xrow[i];
            const double* wrow = wp + i * out_dim;
            for (std::size_t o = 0; o < out_dim; ++o)
                yrow[o] += xv * wrow[o];
        }
    }
}

void dense_backward_input(std::span<const double> gy, std::span<const double> w, std::span<double> gx,
                          std::size_t batch, std::size_t in_dim, std::size_t out_dim)
{
    const double* gyp = gy.data();
    const double* wp = w.data();
    double* gxp = gx.data();
#pragma omp parallel for schedule(static)
    for (idx n = 0; n < idx(batch); ++n) {
        const double* grow = gyp + n * out_dim;
        for (std::size_t i = 0; i < in_dim; ++i) {
            const double* wrow = wp + i * out_dim;
            double acc = 0.0;
            for (std::size_t o = 0; o < out_dim; ++o)
                acc += grow[o] * wrow[o];
            gxp[n * in_dim + i] = acc;
        }
    }
}

void dense_backward_params(std::span<const double> x, std::span<const double> gy, std::span<double> gw,
                           std::span<double> gb, std::size_t batch, std::size_t in_dim, std::size_t out_dim)
{
    const double* xp = x.data();
    const double* gyp = gy.data();
    double* gwp = gw.data();
#pragma omp parallel for schedule(static)
    for (idx i = 0; i < idx(in_dim); ++i) {
        double* gwrow = gwp + i * out_dim;
        for (std::size_t n = 0; n < batch; ++n) {
            const double xv = xp[n * in_dim + i];
            if (xv == 0.0)
                continue;
            const double* grow = gyp + n * out_dim;
            for (std::size_t o = 0; o < out_dim; ++o)
                gwrow[o] += xv * grow[o];
        }
    }
    if (!gb.empty()) {
        for (std::size_t n = 0; n < batch; ++n)
            for (std::size_t o = 0; o < out_dim; ++o)
                gb[o] += gyp[n * out_dim + o];
    }
}

void conv_forward(std::span<const double> x, std::span<const double> k, std::span<const double> b,
                  std::span<double> y, const ConvGeometry& g)
{
    const idx s = idx(g.stride);
#pragma omp parallel for collapse(2) schedule(static)
    for (idx n = 0; n < idx(g.batch); ++n) {
        for (idx oy = 0; oy < idx(g.out_h); ++oy) {
            for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                double* yrow = y.data() + pixel(g, n, oy, ox, false);
                if (b.empty())
                    std::fill_n(yrow, g.out_c, 0.0);
                else
                    std::copy_n(b.data(), g.out_c, yrow);
                for (std::size_t ky = 0; ky < g.kh; ++ky) {
                    const idx iy = oy * s + idx(ky) - idx(g.pad_top);
                    if (iy < 0 || iy >= idx(g.in_h))
                        continue;
                    for (std::size_t kx = 0; kx < g.kw; ++kx) {
                        const idx ix = idx(ox) * s + idx(kx) - idx(g.pad_left);
                        if (ix < 0 || ix >= idx(g.in_w))
                            continue;
                        const double* xp = x.data() + pixel(g, n, iy, ix, true);
                        const double* kp = k.data() + (ky * g.kw + kx) * g.in_c * g.out_c;
                        for (std::size_t ci = 0; ci < g.in_c; ++ci) {
                            const double xv = xp[ci];
                            const double* kr = kp + ci * g.out_c;
                            for (std::size_t co = 0; co < g.out_c; ++co)
                                yrow[co] += xv * kr[co];
                        }
                    }
                }
            }
        }
    }
}

void conv_backward_input(std::span<const double> gy, std::span<const double> k, std::span<double> gx,
                         const ConvGeometry& g)
{
    const idx s = idx(g.stride);
#pragma omp parallel for collapse(2) schedule(static)
    for (idx n = 0; n < idx(g.batch); ++n) {
        for (idx iy = 0; iy < idx(g.in_h); ++iy) {
            for (std::size_t ix = 0; ix < g.in_w; ++ix) {
                double* gxp = gx.data() + pixel(g, n, iy, ix, true);
                std::fill_n(gxp, g.in_c, 0.0);
                for (std::size_t ky = 0; ky < g.kh; ++ky) {
                    const idx ty = iy + idx(g.pad_top) - idx(ky);
                    if (ty < 0 || ty % s != 0 || ty / s >= idx(g.out_h))
                        continue;
                    const std::size_t oy = std::size_t(ty / s);
                    for (std::size_t kx = 0; kx < g.kw; ++kx) {
                        const idx tx = idx(ix) + idx(g.pad_left) - idx(kx);
                        if (tx < 0 || tx % s != 0 || tx / s >= idx(g.out_w))
                            continue;
                        const std::size_t ox = std::size_t(tx / s);
                        const double* gyp = gy.data() + pixel(g, n, oy, ox, false);
                        const double* kp = k.data() + (ky * g.kw + kx) * g.in_c * g.out_c;
                        for (std::size_t ci = 0; ci < g.in_c; ++ci) {
                            const double* kr = kp + ci * g.out_c;
                            double acc = 0.0;
                            for (std::size_t co = 0; co < g.out_c; ++co)
                                acc += gyp[co] * kr[co];
                            gxp[ci] += acc;
                        }
                    }
                }
            }
        }
    }
}

void conv_backward_kernel(std::span<const double> x, std::span<const double> gy, std::span<double> gk,
                          std::span<double> gb, const ConvGeometry& g)
{
    const idx s = idx(g.stride);
#pragma omp parallel for collapse(2) schedule(static)
    for (idx ky = 0; ky < idx(g.kh); ++ky) {
        for (idx kx = 0; kx < idx(g.kw); ++kx) {
            double* gkp = gk.data() + (ky * g.kw + kx) * g.in_c * g.out_c;
            for (std::size_t n = 0; n < g.batch; ++n) {
                for (std::size_t oy = 0; oy < g.out_h; ++oy) {
                    const idx iy = idx(oy) * s + ky - idx(g.pad_top);
                    if (iy < 0 || iy >= idx(g.in_h))
                        continue;
                    for (std::size_t ox = 0; ox < g.out_w; ++ox) {
                        const idx ix = idx(ox) * s + kx - idx(g.pad_left);
                        if (ix < 0 || ix >= idx(g.in_w))
                            continue;
                        const double* xp = x.data() + pixel(g, n, iy, ix, true);
                        const double* gyp = gy.data() + pixel(g, n, oy, ox, false);
                        for (std::size_t ci = 0; ci < g.in_c; ++ci) {
                            const double xv = xp[ci];
                            if (xv == 0.0)
                                continue;
                            double* gkr = gkp + ci * g.out_c;
                            for (std::size_t co = 0; co < g.out_c; ++co)
                                gkr[co] += xv * gyp[co];
                        }
                    }
                }
            }
        }
    }
    if (!gb.empty()) {
        const std::size_t positions = g.batch * g.out_h * g.out_w;
        for (std::size_t p = 0; p < positions; ++p)
            for (std::size_t co = 0; co < g.out_c; ++co)
                gb[co] += gy[p * g.out_c + co];
    }
}

void global_mean_pool(std::span<const double> x, std::span<double> y, std::size_t batch, std::size_t h,
                      std::size_t w, std::size_t c)
{
    const std::size_t area = h * w;
#pragma omp parallel for schedule(static)
    for (idx n = 0; n < idx(batch); ++n) {
        double* yrow = y.data() + n * c;
        std::fill_n(yrow, c, 0.0);
        const double* xp = x.data() + n * area * c;
        for (std::size_t p = 0; p < area; ++p)
            for (std::size_t ch = 0; ch < c; ++ch)
                yrow[ch] += xp[p * c + ch];
        for (std::size_t ch = 0; ch < c; ++ch)
            yrow[ch] /= double(area);
    }
}

int max_threads()
{
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_max_threads(int n)
{
#ifdef _OPENMP
    if (n > 0)
        omp_set_num_threads(n);
#else
    (void)n;
#endif
}

}  // namespace bandsel::kernels

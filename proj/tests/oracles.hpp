#pragma once

// Deliberately naive reference implementations. Nothing here calls into the
// library's kernels; tests compare the real code against these loops.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <utility>
#include <vector>

namespace oracle {

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& g, double lo = -1.0, double hi = 1.0)
{
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (double& x : v)
        x = d(g);
    return v;
}

// y = x W + b, x [n x in], W [in x out]
inline std::vector<double> matmul_bias(const std::vector<double>& x, const std::vector<double>& w,
                                       const std::vector<double>& b, std::size_t n, std::size_t in, std::size_t out)
{
    std::vector<double> y(n * out, 0.0);
    for (std::size_t r = 0; r < n; ++r)
        for (std::size_t o = 0; o < out; ++o) {
            double s = b.empty() ? 0.0 : b[o];
            for (std::size_t i = 0; i < in; ++i)
                s += x[r * in + i] * w[i * out + o];
            y[r * out + o] = s;
        }
    return y;
}

// Zero-padded "same" cross-correlation, NHWC, kernel [kh, kw, cin, cout].
// Padding total = max((out-1)*stride + k - in, 0), extra on the bottom/right.
inline std::vector<double> conv2d(const std::vector<double>& x, const std::vector<double>& k,
                                  const std::vector<double>& bias, std::size_t n, std::size_t h, std::size_t w,
                                  std::size_t cin, std::size_t cout, std::size_t kh, std::size_t kw,
                                  std::size_t stride)
{
    const std::size_t oh = (h + stride - 1) / stride, ow = (w + stride - 1) / stride;
    const long pad_h = std::max<long>(long((oh - 1) * stride + kh) - long(h), 0) / 2;
    const long pad_w = std::max<long>(long((ow - 1) * stride + kw) - long(w), 0) / 2;
    std::vector<double> y(n * oh * ow * cout, 0.0);
    for (std::size_t b = 0; b < n; ++b)
        for (std::size_t oy = 0; oy < oh; ++oy)
            for (std::size_t ox = 0; ox < ow; ++ox)
                for (std::size_t co = 0; co < cout; ++co) {
                    double s = bias.empty() ? 0.0 : bias[co];
                    for (std::size_t ky = 0; ky < kh; ++ky)
                        for (std::size_t kx = 0; kx < kw; ++kx)
                            for (std::size_t ci = 0; ci < cin; ++ci) {
                                const long iy = long(oy * stride + ky) - pad_h;
                                const long ix = long(ox * stride + kx) - pad_w;
                                if (iy < 0 || ix < 0 || iy >= long(h) || ix >= long(w))
                                    continue;
                                s += x[((b * h + iy) * w + ix) * cin + ci] * k[((ky * kw + kx) * cin + ci) * cout + co];
                            }
                    y[((b * oh + oy) * ow + ox) * cout + co] = s;
                }
    return y;
}

inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }

// Plain scalar Adam with bias correction.
struct ScalarAdam {
    double b1 = 0.9, b2 = 0.999, eps = 1e-8, m = 0.0, v = 0.0;
    int t = 0;
    double step(double theta, double g, double lr)
    {
        ++t;
        m = b1 * m + (1 - b1) * g;
        v = b2 * v + (1 - b2) * g * g;
        const double mh = m / (1 - std::pow(b1, t));
        const double vh = v / (1 - std::pow(b2, t));
        return theta - lr * mh / (std::sqrt(vh) + eps);
    }
};

// Central difference of f at x[i].
inline double central_difference(const std::function<double()>& f, double& xi, double h)
{
    const double saved = xi;
    xi = saved + h;
    const double fp = f();
    xi = saved - h;
    const double fm = f();
    xi = saved;
    return (fp - fm) / (2.0 * h);
}

inline double relative_error(double a, double b, double floor = 1e-6)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

// Worst relative error between analytic gradients and central differences of f.
// Each entry is (pointer to the variable, analytic derivative).
inline double max_gradient_error(const std::vector<std::pair<double*, double>>& entries,
                                 const std::function<double()>& f, double h = 1e-4, double floor = 1e-6)
{
    double worst = 0.0;
    for (const auto& [x, analytic] : entries)
        worst = std::max(worst, relative_error(analytic, central_difference(f, *x, h), floor));
    return worst;
}

// Histogram by direct rounding of every value.
inline std::vector<std::uint64_t> histogram(const std::vector<double>& values, std::size_t bins)
{
    std::vector<std::uint64_t> c(bins, 0);
    for (double v : values) {
        long idx = std::lround(std::floor(v * double(bins - 1) + 0.5));
        idx = std::clamp<long>(idx, 0, long(bins) - 1);
        ++c[std::size_t(idx)];
    }
    return c;
}

inline double entropy(const std::vector<std::uint64_t>& counts)
{
    double total = 0.0;
    for (auto c : counts)
        total += double(c);
    double h = 0.0;
    for (auto c : counts)
        if (c) {
            const double p = double(c) / total;
            h -= p * std::log(p);
        }
    return h;
}

// KL(p||q) with pseudo-count smoothing, written as two separate sums.
inline double kl(const std::vector<std::uint64_t>& p, const std::vector<std::uint64_t>& q, double eps)
{
    double tp = 0.0, tq = 0.0;
    for (auto c : p)
        tp += double(c);
    for (auto c : q)
        tq += double(c);
    const double n = double(p.size());
    double cross = 0.0, self = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double pi = (double(p[i]) + eps) / (tp + n * eps);
        const double qi = (double(q[i]) + eps) / (tq + n * eps);
        self += pi * std::log(pi);
        cross += pi * std::log(qi);
    }
    return self - cross;
}

inline double skl(const std::vector<std::uint64_t>& p, const std::vector<std::uint64_t>& q, double eps)
{
    return kl(p, q, eps) + kl(q, p, eps);
}

// Mean over all ordered pairs i != j (each unordered pair appears twice).
inline double msd(const std::vector<std::vector<std::uint64_t>>& hists, double eps)
{
    const std::size_t k = hists.size();
    double s = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (i != j)
                s += skl(hists[i], hists[j], eps);
    return s / double(k * (k - 1));
}

inline std::vector<std::vector<std::uint64_t>> confusion(const std::vector<std::uint32_t>& truth,
                                                         const std::vector<std::uint32_t>& pred, std::size_t classes)
{
    std::vector<std::vector<std::uint64_t>> m(classes, std::vector<std::uint64_t>(classes, 0));
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++m[truth[i]][pred[i]];
    return m;
}

// Brute-force k-NN: sort every (distance, index) pair, vote, smallest label on ties.
inline std::vector<std::uint32_t> knn(const std::vector<double>& train_x, const std::vector<std::uint32_t>& train_y,
                                      const std::vector<double>& test_x, std::size_t dims, std::size_t k)
{
    const std::size_t n_train = train_y.size(), n_test = test_x.size() / dims;
    std::vector<std::uint32_t> out;
    for (std::size_t t = 0; t < n_test; ++t) {
        std::vector<std::pair<double, std::size_t>> d;
        for (std::size_t i = 0; i < n_train; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < dims; ++j) {
                const double diff = test_x[t * dims + j] - train_x[i * dims + j];
                s += diff * diff;
            }
            d.emplace_back(s, i);
        }
        std::sort(d.begin(), d.end());
        std::map<std::uint32_t, int> votes;
        for (std::size_t i = 0; i < std::min(k, n_train); ++i)
            ++votes[train_y[d[i].second]];
        std::uint32_t best = 0;
        int best_votes = -1;
        for (auto [label, v] : votes)
            if (v > best_votes) {
                best = label;
                best_votes = v;
            }
        out.push_back(best);
    }
    return out;
}

// Every top-left corner (y, x) at which an a x a window with stride t fits.
inline std::vector<std::pair<std::size_t, std::size_t>> window_offsets(std::size_t rows, std::size_t cols,
                                                                        std::size_t a, std::size_t t)
{
    std::vector<std::pair<std::size_t, std::size_t>> out;
    for (std::size_t y = 0; y < rows; ++y)
        for (std::size_t x = 0; x < cols; ++x)
            if (y % t == 0 && x % t == 0 && y + a <= rows && x + a <= cols)
                out.emplace_back(y, x);
    return out;
}

}  // namespace oracle

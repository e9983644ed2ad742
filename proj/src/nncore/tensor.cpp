#include "bandsel/tensor.hpp"

#include "bandsel/errors.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <sstream>

namespace bandsel {

std::size_t shape_size(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape)
{
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i)
            os << 'x';
        os << shape[i];
    }
    os << ']';
    return os.str();
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shape_size(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data))
{
    if (shape_size(shape_) != data_.size())
        throw DimensionError("tensor shape " + shape_string(shape_) + " does not match " +
                             std::to_string(data_.size()) + " values");
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows)
{
    const std::size_t n = rows.size();
    const std::size_t m = n ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(n * m);
    for (const auto& r : rows) {
        if (r.size() != m)
            throw DimensionError("ragged rows in Tensor::from_rows");
        data.insert(data.end(), r.begin(), r.end());
    }
    return Tensor({n, m}, std::move(data));
}

Tensor Tensor::reshaped(Shape shape) const
{
    Tensor t = *this;
    t.reshape(std::move(shape));
    return t;
}

void Tensor::reshape(Shape shape)
{
    if (shape_size(shape) != data_.size())
        throw DimensionError("cannot reshape " + shape_string(shape_) + " to " + shape_string(shape));
    shape_ = std::move(shape);
}

void Tensor::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const
{
    if (shape_.empty() || begin > end || end > shape_[0])
        throw DimensionError("row slice out of range for " + shape_string(shape_));
    const std::size_t stride = row_stride(*this);
    Shape s = shape_;
    s[0] = end - begin;
    return Tensor(std::move(s), std::vector<double>(data_.begin() + begin * stride, data_.begin() + end * stride));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> rows) const
{
    if (shape_.empty())
        throw DimensionError("gather_rows on a scalar tensor");
    const std::size_t stride = row_stride(*this);
    Shape s = shape_;
    s[0] = rows.size();
    Tensor out(std::move(s));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= shape_[0])
            throw DimensionError("gather_rows index " + std::to_string(rows[i]) + " out of range");
        std::copy_n(data_.begin() + rows[i] * stride, stride, out.data() + i * stride);
    }
    return out;
}

bool Tensor::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

std::size_t row_stride(const Tensor& t)
{
    if (t.rank() == 0 || t.dim(0) == 0)
        return shape_size(t.shape());
    return t.size() / t.dim(0);
}

double dot(const Tensor& a, const Tensor& b)
{
    if (a.size() != b.size())
        throw DimensionError("dot of " + shape_string(a.shape()) + " and " + shape_string(b.shape()));
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i)
        s += a[i] * b[i];
    return s;
}

}  // namespace bandsel

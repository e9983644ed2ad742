#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace bandsel {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major array of doubles with an explicit shape.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);

    const Shape& shape() const { return shape_; }
    std::size_t rank() const { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> values() { return data_; }
    std::span<const double> values() const { return data_; }
    const std::vector<double>& vec() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }
    double& at(std::size_t n, std::size_t y, std::size_t x, std::size_t c)
    {
        return data_[((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }
    double at(std::size_t n, std::size_t y, std::size_t x, std::size_t c) const
    {
        return data_[((n * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }

    /// Same data, new shape; throws DimensionError if the element count differs.
    Tensor reshaped(Shape shape) const;
    void reshape(Shape shape);

    void fill(double v);
    /// Rows [begin, end) along axis 0, copied.
    Tensor slice_rows(std::size_t begin, std::size_t end) const;
    /// Rows selected by index along axis 0, copied.
    Tensor gather_rows(std::span<const std::size_t> rows) const;

    bool all_finite() const;

    friend bool operator==(const Tensor& a, const Tensor& b) = default;

private:
    Shape shape_;
    std::vector<double> data_;
};

/// Size of one sample (product of all dims past axis 0).
std::size_t row_stride(const Tensor& t);

double dot(const Tensor& a, const Tensor& b);

}  // namespace bandsel

#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace dfm {

/// Dense row-major array of doubles of rank 1 or 2.
///
/// Rank-1 tensors behave as a single row (rows() == 1). Every vector
/// quantity in the library (samples, states, parameters) is stored as a
/// matrix with one sample per row.
class Tensor {
public:
    Tensor() = default;
    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0);
    Tensor(std::vector<std::size_t> shape, std::vector<double> data);

    static Tensor scalar(double value);
    static Tensor row(std::initializer_list<double> values);
    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows);
    static Tensor zeros_like(const Tensor& other);

    const std::vector<std::size_t>& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t rows() const noexcept;
    std::size_t cols() const noexcept;
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols() + c]; }
    double operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols() + c]; }
    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    std::span<double> row_span(std::size_t r) noexcept { return {data_.data() + r * cols(), cols()}; }
    std::span<const double> row_span(std::size_t r) const noexcept {
        return {data_.data() + r * cols(), cols()};
    }
    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }

    /// Value of a one-element tensor.
    double item() const;
    bool same_shape(const Tensor& other) const noexcept { return shape_ == other.shape_; }
    bool all_finite() const noexcept;
    void fill(double value) noexcept;

    /// Rows [begin, end) as a new tensor.
    Tensor slice_rows(std::size_t begin, std::size_t end) const;
    /// Rows picked by index, in the given order.
    Tensor gather_rows(std::span<const std::size_t> index) const;

    std::string shape_string() const;

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Stack equally wide row blocks vertically.
Tensor vstack(std::span<const Tensor> blocks);

} // namespace dfm

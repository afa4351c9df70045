#include "dfm/tensor.hpp"

#include "dfm/error.hpp"

#include <cmath>
#include <numeric>
#include <sstream>

namespace dfm {

Tensor::Tensor(std::size_t rows, std::size_t cols, double fill)
    : shape_{rows, cols}, data_(rows * cols, fill) {
    if (rows == 0 || cols == 0) {
        throw ShapeError("tensor dimensions must be positive, got " + shape_string());
    }
}

Tensor::Tensor(std::vector<std::size_t> shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
    if (shape_.empty() || shape_.size() > 2) {
        throw ShapeError("tensor rank must be 1 or 2, got shape " + shape_string());
    }
    std::size_t n = 1;
    for (auto d : shape_) {
        if (d == 0) {
            throw ShapeError("tensor dimensions must be positive, got " + shape_string());
        }
        n *= d;
    }
    if (n != data_.size()) {
        throw ShapeError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_string());
    }
}

Tensor Tensor::scalar(double value) { return Tensor(1, 1, value); }

Tensor Tensor::row(std::initializer_list<double> values) {
    return Tensor({1, values.size()}, std::vector<double>(values));
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    const std::size_t r = rows.size();
    const std::size_t c = r ? rows.begin()->size() : 0;
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& row : rows) {
        if (row.size() != c) {
            throw ShapeError("ragged rows in Tensor::from_rows");
        }
        data.insert(data.end(), row.begin(), row.end());
    }
    return Tensor({r, c}, std::move(data));
}

Tensor Tensor::zeros_like(const Tensor& other) {
    return Tensor(other.shape_, std::vector<double>(other.size(), 0.0));
}

std::size_t Tensor::rows() const noexcept {
    if (shape_.empty()) return 0;
    return shape_.size() == 1 ? 1 : shape_[0];
}

std::size_t Tensor::cols() const noexcept {
    if (shape_.empty()) return 0;
    return shape_.back();
}

double Tensor::item() const {
    if (data_.size() != 1) {
        throw ShapeError("item() on tensor of shape " + shape_string());
    }
    return data_[0];
}

bool Tensor::all_finite() const noexcept {
    for (double v : data_) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double value) noexcept {
    for (auto& v : data_) v = value;
}

Tensor Tensor::slice_rows(std::size_t begin, std::size_t end) const {
    if (begin >= end || end > rows()) {
        throw ShapeError("slice_rows out of range on " + shape_string());
    }
    const std::size_t c = cols();
    std::vector<double> out(data_.begin() + static_cast<std::ptrdiff_t>(begin * c),
                            data_.begin() + static_cast<std::ptrdiff_t>(end * c));
    return Tensor({end - begin, c}, std::move(out));
}

Tensor Tensor::gather_rows(std::span<const std::size_t> index) const {
    const std::size_t c = cols();
    Tensor out(index.size(), c);
    for (std::size_t i = 0; i < index.size(); ++i) {
        if (index[i] >= rows()) {
            throw ShapeError("gather_rows index out of range");
        }
        std::copy_n(data_.data() + index[i] * c, c, out.data() + i * c);
    }
    return out;
}

std::string Tensor::shape_string() const {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ',';
        os << shape_[i];
    }
    os << ']';
    return os.str();
}

Tensor vstack(std::span<const Tensor> blocks) {
    if (blocks.empty()) {
        throw ShapeError("vstack of zero blocks");
    }
    const std::size_t c = blocks[0].cols();
    std::size_t r = 0;
    for (const auto& b : blocks) {
        if (b.cols() != c) {
            throw ShapeError("vstack column mismatch: " + blocks[0].shape_string() + " vs " +
                             b.shape_string());
        }
        r += b.rows();
    }
    std::vector<double> data;
    data.reserve(r * c);
    for (const auto& b : blocks) {
        data.insert(data.end(), b.values().begin(), b.values().end());
    }
    return Tensor({r, c}, std::move(data));
}

} // namespace dfm

#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "ccl/matrix.hpp"

namespace ccl {

/// T x n values plus a same-shape mask marking cells that were set by a
/// hard intervention.
struct Series {
    Matrix values;
    std::vector<std::uint8_t> do_mask;

    Series() = default;
    Series(std::size_t rows, std::size_t cols) : values(rows, cols), do_mask(rows * cols, 0) {}
    explicit Series(Matrix v) : values(std::move(v)), do_mask(values.rows() * values.cols(), 0) {}

    std::size_t rows() const noexcept { return values.rows(); }
    std::size_t cols() const noexcept { return values.cols(); }

    bool is_do(std::size_t t, std::size_t j) const { return do_mask[t * cols() + j] != 0; }
    void set_do(std::size_t t, std::size_t j, bool v) { do_mask[t * cols() + j] = v ? 1 : 0; }

    void append_row(std::span<const double> row, std::span<const std::uint8_t> mask) {
        values.append_row(row);
        do_mask.insert(do_mask.end(), mask.begin(), mask.end());
    }

    bool any_interventional() const {
        for (auto m : do_mask)
            if (m) return true;
        return false;
    }

    friend bool operator==(const Series&, const Series&) = default;
};

}  // namespace ccl

#pragma once

#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace iscc {

using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;

/// Dense row-major matrix, just enough for device-by-subcarrier grids.
template <typename T>
class Grid {
public:
    Grid() : rows_(0), cols_(0) {}
    Grid(int rows, int cols, T fill = T{})
        : rows_(rows), cols_(cols), data_(static_cast<size_t>(rows) * cols, fill) {
        if (rows < 0 || cols < 0) throw std::invalid_argument("Grid: negative shape");
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    size_t size() const { return data_.size(); }

    T& operator()(int r, int c) { return data_[static_cast<size_t>(r) * cols_ + c]; }
    const T& operator()(int r, int c) const { return data_[static_cast<size_t>(r) * cols_ + c]; }

    std::span<T> row(int r) { return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)}; }
    std::span<const T> row(int r) const {
        return {data_.data() + static_cast<size_t>(r) * cols_, static_cast<size_t>(cols_)};
    }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }

    bool operator==(const Grid&) const = default;

private:
    int rows_, cols_;
    std::vector<T> data_;
};

using CGrid = Grid<cplx>;
using RGrid = Grid<double>;

/// Configuration or precondition violations detected while building a system description.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Sensing-accuracy floor exceeds the transmit power cap for some device.
class InfeasibleBudgetError : public std::runtime_error {
public:
    InfeasibleBudgetError(const std::string& what, int device)
        : std::runtime_error(what), device_(device) {}
    int device() const { return device_; }

private:
    int device_;
};

}  // namespace iscc

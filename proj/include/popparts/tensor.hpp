// Copyright (C) 2026 The popparts authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cassert>
#include <cstddef>
#include <string>
#include <vector>

namespace popparts {

// Dense row-major tensor of doubles, rank 1..4. Computation happens in
// double; the on-disk container stores f32.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> dims, double fill = 0.0)
        : dims_(std::move(dims)) {
        std::size_t n = 1;
        for (std::size_t d : dims_) n *= d;
        data_.assign(n, fill);
    }

    const std::vector<std::size_t>& dims() const { return dims_; }
    std::size_t rank() const { return dims_.size(); }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }
    bool same_shape(const Tensor& o) const { return dims_ == o.dims_; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }

    double operator[](std::size_t i) const { return data_[i]; }
    double& operator[](std::size_t i) { return data_[i]; }

    double& operator()(std::size_t i, std::size_t j) {
        assert(rank() == 2);
        return data_[i * dims_[1] + j];
    }
    double operator()(std::size_t i, std::size_t j) const {
        assert(rank() == 2);
        return data_[i * dims_[1] + j];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k) {
        assert(rank() == 3);
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k) const {
        assert(rank() == 3);
        return data_[(i * dims_[1] + j) * dims_[2] + k];
    }
    double& operator()(std::size_t i, std::size_t j, std::size_t k,
                       std::size_t l) {
        assert(rank() == 4);
        return data_[((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l];
    }
    double operator()(std::size_t i, std::size_t j, std::size_t k,
                      std::size_t l) const {
        assert(rank() == 4);
        return data_[((i * dims_[1] + j) * dims_[2] + k) * dims_[3] + l];
    }

    void fill(double v) { data_.assign(data_.size(), v); }

    std::string shape_str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < dims_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(dims_[i]);
        }
        return s + ")";
    }

    bool operator==(const Tensor& o) const {
        return dims_ == o.dims_ && data_ == o.data_;
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<double> data_;
};

}  // namespace popparts

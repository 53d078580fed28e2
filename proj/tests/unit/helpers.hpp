#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <random>

#include <doctest.h>

#include "fpkproj/error.hpp"

namespace testing {

template <class F>
std::optional<fpkproj::ErrorKind> thrown_kind(F&& f) {
    try {
        f();
    } catch (const fpkproj::Error& e) {
        return e.kind();
    }
    return std::nullopt;
}

inline double normal_pdf(double x, double mean = 0.0, double var = 1.0) {
    const double d = x - mean;
    return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * std::numbers::pi * var);
}

inline std::mt19937 rng(unsigned seed = 20240611u) { return std::mt19937(seed); }

inline double uniform(std::mt19937& g, double lo, double hi) {
    return std::uniform_real_distribution<double>(lo, hi)(g);
}

}  // namespace testing

#define CHECK_KIND(expr, k) CHECK(testing::thrown_kind([&] { (void)(expr); }) == std::optional(k))

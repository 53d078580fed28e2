#pragma once

#include <optional>
#include <utility>
#include <vector>

#include "fpkproj/quadrature.hpp"

namespace fpkproj {

enum class Representation {
    Polynomial,
    HermiteCombination,
    CosineCombination,
    TabulatedSpline,
    Gaussian,
    Analytic,
};

/// A scalar function of x carrying its first two derivatives.
///
/// Polynomial and Hermite representations also keep their monomial
/// coefficients, which the exponential family uses to decide integrability
/// of exp(θ'c). Derivatives may be absent for `Analytic` functions; asking
/// for them then raises DerivativeUnavailable.
class DifferentiableFn {
public:
    DifferentiableFn(Representation rep, ScalarFn value, ScalarFn d1 = {}, ScalarFn d2 = {},
                     std::optional<std::vector<double>> monomials = std::nullopt);

    /// Σ coeffs[k] x^k.
    static DifferentiableFn polynomial(std::vector<double> coeffs);
    static DifferentiableFn monomial(int degree);
    /// Probabilists' Hermite polynomial He_k(x / scale).
    static DifferentiableFn hermite(int k, double scale = 1.0);
    /// Σ weights[k] He_k(x / scale).
    static DifferentiableFn hermite_series(const std::vector<double>& weights, double scale = 1.0);
    /// constant + Σ amplitude_j cos(k_j x).
    static DifferentiableFn cosine_series(double constant, std::vector<std::pair<int, double>> terms);
    static DifferentiableFn gaussian_pdf(double mean, double variance);
    /// Natural cubic spline through (xs, ys); xs strictly ascending, size >= 3.
    static DifferentiableFn tabulated_spline(std::vector<double> xs, std::vector<double> ys);
    static DifferentiableFn constant(double c);

    double operator()(double x) const { return value_(x); }
    double d1(double x) const;
    double d2(double x) const;

    bool has_derivatives() const noexcept { return static_cast<bool>(d1_) && static_cast<bool>(d2_); }
    Representation representation() const noexcept { return rep_; }
    const std::optional<std::vector<double>>& monomials() const noexcept { return monomials_; }

    const ScalarFn& value_fn() const noexcept { return value_; }

    friend DifferentiableFn operator+(const DifferentiableFn& a, const DifferentiableFn& b);
    friend DifferentiableFn operator-(const DifferentiableFn& a, const DifferentiableFn& b);
    friend DifferentiableFn operator*(double s, const DifferentiableFn& a);

private:
    Representation rep_;
    ScalarFn value_;
    ScalarFn d1_;
    ScalarFn d2_;
    std::optional<std::vector<double>> monomials_;
};

/// Monomial coefficients of He_k.
std::vector<double> hermite_coefficients(int k);

}  // namespace fpkproj

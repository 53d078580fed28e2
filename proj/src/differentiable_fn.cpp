#include "fpkproj/differentiable_fn.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <numbers>

#include "fpkproj/error.hpp"

namespace fpkproj {

DifferentiableFn::DifferentiableFn(Representation rep, ScalarFn value, ScalarFn d1, ScalarFn d2,
                                   std::optional<std::vector<double>> monomials)
    : rep_(rep),
      value_(std::move(value)),
      d1_(std::move(d1)),
      d2_(std::move(d2)),
      monomials_(std::move(monomials)) {
    if (!value_) throw Error(ErrorKind::InvalidArgument, "differentiable function needs a value");
}

double DifferentiableFn::d1(double x) const {
    if (!d1_) throw Error(ErrorKind::DerivativeUnavailable, "first derivative not available");
    return d1_(x);
}

double DifferentiableFn::d2(double x) const {
    if (!d2_) throw Error(ErrorKind::DerivativeUnavailable, "second derivative not available");
    return d2_(x);
}

namespace {

struct PolyEval {
    double v, d1, d2;
};

PolyEval horner(const std::vector<double>& c, double x) {
    double v = 0.0, d1 = 0.0, d2 = 0.0;
    for (auto it = c.rbegin(); it != c.rend(); ++it) {
        d2 = d2 * x + 2.0 * d1;
        d1 = d1 * x + v;
        v = v * x + *it;
    }
    return {v, d1, d2};
}

std::vector<double> trimmed(std::vector<double> c) {
    while (c.size() > 1 && c.back() == 0.0) c.pop_back();
    if (c.empty()) c.push_back(0.0);
    return c;
}

DifferentiableFn make_polynomial(Representation rep, std::vector<double> coeffs) {
    auto c = std::make_shared<const std::vector<double>>(trimmed(std::move(coeffs)));
    return DifferentiableFn(
        rep, [c](double x) { return horner(*c, x).v; }, [c](double x) { return horner(*c, x).d1; },
        [c](double x) { return horner(*c, x).d2; }, *c);
}

ScalarFn combine(const ScalarFn& a, const ScalarFn& b, double sa, double sb) {
    if (!a || !b) return {};
    return [a, b, sa, sb](double x) { return sa * a(x) + sb * b(x); };
}

DifferentiableFn linear_combination(const DifferentiableFn& a, const DifferentiableFn& b, double sa,
                                    double sb) {
    std::optional<std::vector<double>> mono;
    if (a.monomials() && b.monomials()) {
        const auto& ca = *a.monomials();
        const auto& cb = *b.monomials();
        std::vector<double> c(std::max(ca.size(), cb.size()), 0.0);
        for (std::size_t i = 0; i < ca.size(); ++i) c[i] += sa * ca[i];
        for (std::size_t i = 0; i < cb.size(); ++i) c[i] += sb * cb[i];
        return make_polynomial(Representation::Polynomial, std::move(c));
    }
    const auto rep = a.representation() == b.representation() ? a.representation() : Representation::Analytic;
    ScalarFn d1a, d2a, d1b, d2b;
    if (a.has_derivatives()) {
        d1a = [a](double x) { return a.d1(x); };
        d2a = [a](double x) { return a.d2(x); };
    }
    if (b.has_derivatives()) {
        d1b = [b](double x) { return b.d1(x); };
        d2b = [b](double x) { return b.d2(x); };
    }
    return DifferentiableFn(rep, combine(a.value_fn(), b.value_fn(), sa, sb), combine(d1a, d1b, sa, sb),
                            combine(d2a, d2b, sa, sb), mono);
}

}  // namespace

DifferentiableFn DifferentiableFn::polynomial(std::vector<double> coeffs) {
    return make_polynomial(Representation::Polynomial, std::move(coeffs));
}

DifferentiableFn DifferentiableFn::monomial(int degree) {
    if (degree < 0) throw Error(ErrorKind::InvalidArgument, "monomial degree must be >= 0");
    std::vector<double> c(static_cast<std::size_t>(degree) + 1, 0.0);
    c.back() = 1.0;
    return polynomial(std::move(c));
}

DifferentiableFn DifferentiableFn::constant(double value) { return polynomial({value}); }

std::vector<double> hermite_coefficients(int k) {
    if (k < 0) throw Error(ErrorKind::InvalidArgument, "Hermite index must be >= 0");
    // He_{j+1} = x He_j - j He_{j-1}
    std::vector<double> prev{1.0};
    if (k == 0) return prev;
    std::vector<double> cur{0.0, 1.0};
    for (int j = 1; j < k; ++j) {
        std::vector<double> next(cur.size() + 1, 0.0);
        for (std::size_t i = 0; i < cur.size(); ++i) next[i + 1] += cur[i];
        for (std::size_t i = 0; i < prev.size(); ++i) next[i] -= static_cast<double>(j) * prev[i];
        prev = std::move(cur);
        cur = std::move(next);
    }
    return cur;
}

DifferentiableFn DifferentiableFn::hermite_series(const std::vector<double>& weights, double scale) {
    if (!(scale > 0.0)) throw Error(ErrorKind::InvalidArgument, "Hermite scale must be positive");
    std::vector<double> c;
    for (std::size_t k = 0; k < weights.size(); ++k) {
        if (weights[k] == 0.0) continue;
        const auto hk = hermite_coefficients(static_cast<int>(k));
        if (c.size() < hk.size()) c.resize(hk.size(), 0.0);
        for (std::size_t j = 0; j < hk.size(); ++j) c[j] += weights[k] * hk[j] / std::pow(scale, static_cast<double>(j));
    }
    if (c.empty()) c.push_back(0.0);
    return make_polynomial(Representation::HermiteCombination, std::move(c));
}

DifferentiableFn DifferentiableFn::hermite(int k, double scale) {
    if (k < 0) throw Error(ErrorKind::InvalidArgument, "Hermite index must be >= 0");
    std::vector<double> w(static_cast<std::size_t>(k) + 1, 0.0);
    w.back() = 1.0;
    return hermite_series(w, scale);
}

DifferentiableFn DifferentiableFn::cosine_series(double constant, std::vector<std::pair<int, double>> terms) {
    auto t = std::make_shared<const std::vector<std::pair<int, double>>>(std::move(terms));
    return DifferentiableFn(
        Representation::CosineCombination,
        [constant, t](double x) {
            double s = constant;
            for (auto [k, amp] : *t) s += amp * std::cos(k * x);
            return s;
        },
        [t](double x) {
            double s = 0.0;
            for (auto [k, amp] : *t) s -= amp * k * std::sin(k * x);
            return s;
        },
        [t](double x) {
            double s = 0.0;
            for (auto [k, amp] : *t) s -= amp * k * k * std::cos(k * x);
            return s;
        });
}

DifferentiableFn DifferentiableFn::gaussian_pdf(double mean, double variance) {
    if (!(variance > 0.0)) throw Error(ErrorKind::InvalidArgument, "Gaussian variance must be positive");
    const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi * variance);
    auto pdf = [=](double x) {
        const double z = x - mean;
        return norm * std::exp(-0.5 * z * z / variance);
    };
    return DifferentiableFn(
        Representation::Gaussian, pdf, [=](double x) { return -(x - mean) / variance * pdf(x); },
        [=](double x) {
            const double z = (x - mean) / variance;
            return (z * z - 1.0 / variance) * pdf(x);
        });
}

DifferentiableFn DifferentiableFn::tabulated_spline(std::vector<double> xs, std::vector<double> ys) {
    const std::size_t n = xs.size();
    if (n < 3 || ys.size() != n) throw Error(ErrorKind::InvalidArgument, "spline needs >= 3 matching points");
    for (std::size_t i = 1; i < n; ++i) {
        if (!(xs[i] > xs[i - 1])) throw Error(ErrorKind::InvalidArgument, "spline abscissae must ascend");
    }
    // natural spline: second derivatives m with m_0 = m_{n-1} = 0
    std::vector<double> m(n, 0.0), c(n, 0.0), d(n, 0.0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = xs[i] - xs[i - 1], h1 = xs[i + 1] - xs[i];
        const double a = h0 / 6.0, b = (h0 + h1) / 3.0, cc = h1 / 6.0;
        const double r = (ys[i + 1] - ys[i]) / h1 - (ys[i] - ys[i - 1]) / h0;
        const double denom = b - a * c[i - 1];
        c[i] = cc / denom;
        d[i] = (r - a * d[i - 1]) / denom;
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m[i] = d[i] - c[i] * m[i + 1];
        if (i == 1) break;
    }
    struct Table {
        std::vector<double> x, y, m;
        std::size_t segment(double t) const {
            auto it = std::upper_bound(x.begin(), x.end(), t);
            std::size_t i = it == x.begin() ? 0 : static_cast<std::size_t>(it - x.begin()) - 1;
            return std::min(i, x.size() - 2);
        }
    };
    auto tab = std::make_shared<const Table>(Table{std::move(xs), std::move(ys), std::move(m)});
    return DifferentiableFn(
        Representation::TabulatedSpline,
        [tab](double t) {
            const auto i = tab->segment(t);
            const double h = tab->x[i + 1] - tab->x[i];
            const double A = (tab->x[i + 1] - t) / h, B = (t - tab->x[i]) / h;
            return A * tab->y[i] + B * tab->y[i + 1] +
                   ((A * A * A - A) * tab->m[i] + (B * B * B - B) * tab->m[i + 1]) * h * h / 6.0;
        },
        [tab](double t) {
            const auto i = tab->segment(t);
            const double h = tab->x[i + 1] - tab->x[i];
            const double A = (tab->x[i + 1] - t) / h, B = (t - tab->x[i]) / h;
            return (tab->y[i + 1] - tab->y[i]) / h +
                   (-(3.0 * A * A - 1.0) * tab->m[i] + (3.0 * B * B - 1.0) * tab->m[i + 1]) * h / 6.0;
        },
        [tab](double t) {
            const auto i = tab->segment(t);
            const double h = tab->x[i + 1] - tab->x[i];
            const double A = (tab->x[i + 1] - t) / h, B = (t - tab->x[i]) / h;
            return A * tab->m[i] + B * tab->m[i + 1];
        });
}

DifferentiableFn operator+(const DifferentiableFn& a, const DifferentiableFn& b) {
    return linear_combination(a, b, 1.0, 1.0);
}

DifferentiableFn operator-(const DifferentiableFn& a, const DifferentiableFn& b) {
    return linear_combination(a, b, 1.0, -1.0);
}

DifferentiableFn operator*(double s, const DifferentiableFn& a) {
    return linear_combination(a, DifferentiableFn::constant(0.0), s, 0.0);
}

}  // namespace fpkproj

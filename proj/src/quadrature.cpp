#include "fpkproj/quadrature.hpp"

#include <cmath>

#include "fpkproj/error.hpp"

namespace fpkproj {

Domain::Domain(double lo, double hi, DomainKind k) : lower(lo), upper(hi), kind(k) {
    if (!(std::isfinite(lo) && std::isfinite(hi)) || !(lo < hi)) {
        throw Error(ErrorKind::InvalidArgument, "domain requires finite lower < upper");
    }
}

Domain Domain::truncated_for(double largest_std, double centre) {
    if (!(largest_std > 0.0) || !std::isfinite(largest_std)) {
        throw Error(ErrorKind::InvalidArgument, "standard deviation estimate must be positive");
    }
    const double half = 12.0 * largest_std + std::abs(centre);
    return Domain(-half, half, DomainKind::UnboundedTruncated);
}

QuadratureRule::QuadratureRule(Domain domain, std::vector<double> nodes, std::vector<double> weights,
                               int order)
    : domain_(domain), nodes_(std::move(nodes)), weights_(std::move(weights)), order_(order) {
    if (nodes_.size() != weights_.size() || nodes_.size() < 2) {
        throw Error(ErrorKind::InvalidArgument, "quadrature needs >= 2 nodes and matching weights");
    }
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!(weights_[i] > 0.0)) throw Error(ErrorKind::InvalidArgument, "quadrature weights must be positive");
        if (i > 0 && !(nodes_[i] > nodes_[i - 1])) {
            throw Error(ErrorKind::InvalidArgument, "quadrature nodes must be strictly ascending");
        }
    }
    if (nodes_.front() < domain_.lower || nodes_.back() > domain_.upper) {
        throw Error(ErrorKind::InvalidArgument, "quadrature nodes outside domain");
    }
}

namespace {

std::vector<double> uniform_nodes(const Domain& domain, std::size_t count) {
    std::vector<double> x(count);
    const double h = domain.width() / static_cast<double>(count - 1);
    for (std::size_t i = 0; i < count; ++i) x[i] = domain.lower + h * static_cast<double>(i);
    x.back() = domain.upper;
    return x;
}

}  // namespace

QuadratureRule QuadratureRule::simpson(const Domain& domain, std::size_t intervals) {
    if (intervals < 2 || intervals % 2 != 0) {
        throw Error(ErrorKind::InvalidArgument, "Simpson rule needs an even number of intervals");
    }
    auto x = uniform_nodes(domain, intervals + 1);
    const double h = domain.width() / static_cast<double>(intervals);
    std::vector<double> w(intervals + 1);
    for (std::size_t i = 0; i <= intervals; ++i) {
        const double c = (i == 0 || i == intervals) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
        w[i] = c * h / 3.0;
    }
    return QuadratureRule(domain, std::move(x), std::move(w), 4);
}

QuadratureRule QuadratureRule::simpson_pow2(const Domain& domain, int k) {
    if (k < 1 || k > 24) throw Error(ErrorKind::InvalidArgument, "Simpson exponent out of range");
    return simpson(domain, std::size_t{1} << k);
}

QuadratureRule QuadratureRule::trapezoid(const Domain& domain, std::size_t nodes) {
    if (nodes < 2) throw Error(ErrorKind::InvalidArgument, "trapezoid rule needs >= 2 nodes");
    auto x = uniform_nodes(domain, nodes);
    const double h = domain.width() / static_cast<double>(nodes - 1);
    std::vector<double> w(nodes, h);
    w.front() = w.back() = 0.5 * h;
    return QuadratureRule(domain, std::move(x), std::move(w), 2);
}

std::vector<double> QuadratureRule::sample(const ScalarFn& f) const {
    std::vector<double> v(nodes_.size());
    for (std::size_t i = 0; i < nodes_.size(); ++i) v[i] = f(nodes_[i]);
    return v;
}

double integrate_values(std::span<const double> values, const QuadratureRule& rule) {
    if (values.size() != rule.size()) {
        throw Error(ErrorKind::InvalidArgument, "tabulated values do not match quadrature nodes");
    }
    const auto w = rule.weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (!std::isfinite(values[i])) throw NonFiniteIntegrand(i, rule.nodes()[i]);
        sum += w[i] * values[i];
    }
    return sum;
}

double integrate(const ScalarFn& f, const QuadratureRule& rule) {
    const auto x = rule.nodes();
    const auto w = rule.weights();
    double sum = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double v = f(x[i]);
        if (!std::isfinite(v)) throw NonFiniteIntegrand(i, x[i]);
        sum += w[i] * v;
    }
    return sum;
}

double inner_product(const ScalarFn& f, const ScalarFn& h, const QuadratureRule& rule) {
    return integrate([&](double x) { return f(x) * h(x); }, rule);
}

}  // namespace fpkproj

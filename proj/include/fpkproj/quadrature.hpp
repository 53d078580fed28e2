#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "fpkproj/error.hpp"

namespace fpkproj {

using ScalarFn = std::function<double(double)>;

enum class DomainKind { UnboundedTruncated, BoundedReflecting };

/// Integration range. For unbounded problems the bounds are truncation
/// points of the real line; for bounded ones they carry reflecting walls.
struct Domain {
    double lower = -12.0;
    double upper = 12.0;
    DomainKind kind = DomainKind::UnboundedTruncated;

    Domain() = default;
    Domain(double lo, double hi, DomainKind k = DomainKind::UnboundedTruncated);

    double width() const noexcept { return upper - lower; }
    bool contains(double x) const noexcept { return x >= lower && x <= upper; }

    /// [-12 s, 12 s] shifted outwards by |centre|, for a density whose largest
    /// standard deviation estimate is s.
    static Domain truncated_for(double largest_std, double centre = 0.0);
};

/// Nodes ascending inside the domain, strictly positive weights.
class QuadratureRule {
public:
    QuadratureRule(Domain domain, std::vector<double> nodes, std::vector<double> weights, int order);

    /// Composite Simpson on `intervals` (even) uniform sub-intervals.
    static QuadratureRule simpson(const Domain& domain, std::size_t intervals);
    /// Composite Simpson with 2^k + 1 nodes.
    static QuadratureRule simpson_pow2(const Domain& domain, int k = 12);
    /// Trapezoid rule on `nodes` uniform points (end points included).
    static QuadratureRule trapezoid(const Domain& domain, std::size_t nodes);

    const Domain& domain() const noexcept { return domain_; }
    std::span<const double> nodes() const noexcept { return nodes_; }
    std::span<const double> weights() const noexcept { return weights_; }
    std::size_t size() const noexcept { return nodes_.size(); }
    int order() const noexcept { return order_; }

    /// f evaluated at every node.
    std::vector<double> sample(const ScalarFn& f) const;

private:
    Domain domain_;
    std::vector<double> nodes_;
    std::vector<double> weights_;
    int order_;
};

/// Σ w_i f(x_i). Throws NonFiniteIntegrand naming the first bad node.
double integrate(const ScalarFn& f, const QuadratureRule& rule);

/// Same sum over values already tabulated at the rule's nodes.
double integrate_values(std::span<const double> values, const QuadratureRule& rule);

double inner_product(const ScalarFn& f, const ScalarFn& h, const QuadratureRule& rule);

}  // namespace fpkproj

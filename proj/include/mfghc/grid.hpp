#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numbers>
#include <span>
#include <string>
#include <vector>

#include "mfghc/errors.hpp"

namespace mfghc {

/// A bounded interval (a,b) with Neumann conditions, or a ball of radius R in
/// R^d reduced to the radial coordinate.
struct DomainSpec {
    enum class Kind { Interval, RadialBall };

    Kind kind = Kind::Interval;
    double a = 0.0;
    double b = 1.0;
    double radius = 1.0;
    int dim = 1;

    static DomainSpec interval(double a, double b)
    {
        if (!(b - a > 0.0) || !std::isfinite(a) || !std::isfinite(b))
            throw DomainError("interval domain requires finite a < b");
        return {Kind::Interval, a, b, 0.0, 1};
    }

    static DomainSpec radial_ball(double radius, int dim)
    {
        if (!(radius > 0.0) || !std::isfinite(radius)) throw DomainError("radial ball requires finite R > 0");
        if (dim < 1) throw DomainError("radial ball requires dimension >= 1");
        return {Kind::RadialBall, 0.0, radius, radius, dim};
    }

    bool is_radial() const { return kind == Kind::RadialBall; }
    double left() const { return is_radial() ? 0.0 : a; }
    double right() const { return is_radial() ? radius : b; }

    /// Surface area of the unit sphere in R^d; 1 for intervals.
    double angular_factor() const
    {
        if (!is_radial()) return 1.0;
        const double half_d = 0.5 * dim;
        return 2.0 * std::pow(std::numbers::pi, half_d) / std::tgamma(half_d);
    }

    /// Volume weight w(x) of the reduced 1D integral, including the angular factor.
    double weight(double x) const
    {
        if (!is_radial()) return 1.0;
        return angular_factor() * (dim == 1 ? 1.0 : std::pow(x, dim - 1));
    }

    /// |Omega|.
    double volume() const
    {
        if (!is_radial()) return b - a;
        return angular_factor() * std::pow(radius, dim) / dim;
    }

    std::string describe() const
    {
        if (!is_radial()) return "interval(" + std::to_string(a) + "," + std::to_string(b) + ")";
        return "radial_ball(R=" + std::to_string(radius) + ",d=" + std::to_string(dim) + ")";
    }

    friend bool operator==(const DomainSpec&, const DomainSpec&) = default;
};

/// Uniform node set on a domain.  Nodal integrals use dual-cell weights
/// (cells [x_i - h/2, x_i + h/2] clipped to the domain, integrated exactly
/// against the radial weight), which reduce to the trapezoidal rule on
/// intervals.  Midpoint integrals use the midpoint rule.
class Grid {
public:
    Grid(DomainSpec domain, std::size_t n) : domain_(domain), n_(n)
    {
        if (n < 3) throw DomainError("grid needs at least 3 nodes");
        h_ = (domain_.right() - domain_.left()) / static_cast<double>(n - 1);
    }

    const DomainSpec& domain() const { return domain_; }
    std::size_t size() const { return n_; }
    std::size_t cells() const { return n_ - 1; }
    double spacing() const { return h_; }

    double node(std::size_t i) const
    {
        if (i + 1 == n_) return domain_.right();
        return domain_.left() + static_cast<double>(i) * h_;
    }
    double midpoint(std::size_t k) const { return domain_.left() + (static_cast<double>(k) + 0.5) * h_; }

    std::vector<double> nodes() const
    {
        std::vector<double> x(n_);
        for (std::size_t i = 0; i < n_; ++i) x[i] = node(i);
        return x;
    }

    /// Measure of the dual cell around node i.
    double node_weight(std::size_t i) const
    {
        const double lo = i == 0 ? node(0) : node(i) - 0.5 * h_;
        const double hi = i + 1 == n_ ? node(i) : node(i) + 0.5 * h_;
        if (!domain_.is_radial() || domain_.dim == 1) return domain_.angular_factor() * (hi - lo);
        const int d = domain_.dim;
        return domain_.angular_factor() * (std::pow(hi, d) - std::pow(lo, d)) / d;
    }

    /// Midpoint-rule weight of cell k, i.e. w(x_{k+1/2}) h.
    double midpoint_weight(std::size_t k) const { return domain_.weight(midpoint(k)) * h_; }

    /// The same weight without the cell width: w(x_{k+1/2}).
    double flux_weight(std::size_t k) const { return domain_.weight(midpoint(k)); }

    friend bool operator==(const Grid& l, const Grid& r) { return l.domain_ == r.domain_ && l.n_ == r.n_; }

private:
    DomainSpec domain_;
    std::size_t n_;
    double h_;
};

/// Values of a scalar field either at the grid nodes or at the n-1 cell midpoints.
class GridFunction {
public:
    enum class Location { Nodes, Midpoints };

    GridFunction(Grid grid, std::vector<double> values, Location where = Location::Nodes)
        : grid_(std::move(grid)), where_(where), values_(std::move(values))
    {
        const std::size_t want = where_ == Location::Nodes ? grid_.size() : grid_.cells();
        if (values_.size() != want)
            throw ShapeError("grid function has " + std::to_string(values_.size()) + " values, grid expects " +
                             std::to_string(want));
    }

    static GridFunction constant(const Grid& grid, double c) { return {grid, std::vector<double>(grid.size(), c)}; }

    static GridFunction sample(const Grid& grid, const std::function<double(double)>& fn)
    {
        std::vector<double> v(grid.size());
        for (std::size_t i = 0; i < v.size(); ++i) v[i] = fn(grid.node(i));
        return {grid, std::move(v)};
    }

    const Grid& grid() const { return grid_; }
    Location location() const { return where_; }
    bool at_nodes() const { return where_ == Location::Nodes; }
    std::size_t size() const { return values_.size(); }

    double operator[](std::size_t i) const { return values_[i]; }
    double& operator[](std::size_t i) { return values_[i]; }
    std::span<const double> values() const { return values_; }
    std::vector<double>& mutable_values() { return values_; }

    double position(std::size_t i) const { return at_nodes() ? grid_.node(i) : grid_.midpoint(i); }

    double min() const;
    double max() const;
    double sup_norm() const;

private:
    Grid grid_;
    Location where_;
    std::vector<double> values_;
};

inline double GridFunction::min() const
{
    double v = values_.front();
    for (double x : values_) v = std::min(v, x);
    return v;
}

inline double GridFunction::max() const
{
    double v = values_.front();
    for (double x : values_) v = std::max(v, x);
    return v;
}

inline double GridFunction::sup_norm() const
{
    double v = 0.0;
    for (double x : values_) v = std::max(v, std::abs(x));
    return v;
}

inline void require_same_grid(const GridFunction& f, const GridFunction& g, const char* what)
{
    if (!(f.grid() == g.grid()) || f.location() != g.location())
        throw ShapeError(std::string(what) + ": grid functions live on different grids");
}

/// Integral over the domain with its volume weight.
inline double integrate(const GridFunction& g)
{
    const Grid& grid = g.grid();
    double s = 0.0;
    if (g.at_nodes()) {
        for (std::size_t i = 0; i < g.size(); ++i) s += grid.node_weight(i) * g[i];
    } else {
        for (std::size_t k = 0; k < g.size(); ++k) s += grid.midpoint_weight(k) * g[k];
    }
    return s;
}

/// Forward differences placed at cell midpoints; exact for quadratics.
inline GridFunction differentiate(const GridFunction& g)
{
    if (!g.at_nodes()) throw ShapeError("differentiate: expects nodal values");
    const double h = g.grid().spacing();
    std::vector<double> d(g.size() - 1);
    for (std::size_t k = 0; k + 1 < g.size(); ++k) d[k] = (g[k + 1] - g[k]) / h;
    return {g.grid(), std::move(d), GridFunction::Location::Midpoints};
}

/// Central differences at interior nodes, second-order one-sided stencils at the ends.
inline GridFunction differentiate_nodal(const GridFunction& g)
{
    if (!g.at_nodes()) throw ShapeError("differentiate_nodal: expects nodal values");
    const double h = g.grid().spacing();
    const std::size_t n = g.size();
    std::vector<double> d(n);
    d[0] = (-3.0 * g[0] + 4.0 * g[1] - g[2]) / (2.0 * h);
    for (std::size_t i = 1; i + 1 < n; ++i) d[i] = (g[i + 1] - g[i - 1]) / (2.0 * h);
    d[n - 1] = (3.0 * g[n - 1] - 4.0 * g[n - 2] + g[n - 3]) / (2.0 * h);
    return {g.grid(), std::move(d)};
}

/// Arithmetic means of neighbouring nodal values.
inline GridFunction midpoint_average(const GridFunction& g)
{
    if (!g.at_nodes()) throw ShapeError("midpoint_average: expects nodal values");
    std::vector<double> a(g.size() - 1);
    for (std::size_t k = 0; k + 1 < g.size(); ++k) a[k] = 0.5 * (g[k] + g[k + 1]);
    return {g.grid(), std::move(a), GridFunction::Location::Midpoints};
}

}  // namespace mfghc

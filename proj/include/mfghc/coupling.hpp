#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <utility>

#include "mfghc/errors.hpp"

namespace mfghc {

/// Running cost f(x, m) felt by an agent at x when the population density is m.
/// `primitive` is an antiderivative in m, `derivative` is df/dm.
struct Coupling {
    using Fn = std::function<double(double x, double m)>;

    std::string name;
    Fn eval;
    Fn primitive;
    Fn derivative;
    bool monotone = false;

    double operator()(double x, double m) const { return eval(x, m); }

    static Coupling zero()
    {
        return {"zero", [](double, double) { return 0.0; }, [](double, double) { return 0.0; },
                [](double, double) { return 0.0; }, true};
    }

    /// f = c m.
    static Coupling linear(double c = 1.0)
    {
        return {"linear", [c](double, double m) { return c * m; }, [c](double, double m) { return 0.5 * c * m * m; },
                [c](double, double) { return c; }, c >= 0.0};
    }

    /// f = c m^q with q > 0.
    static Coupling power(double c, double q)
    {
        if (!(q > 0.0)) throw DomainError("power coupling requires a positive exponent");
        return {"power", [c, q](double, double m) { return c * std::pow(m, q); },
                [c, q](double, double m) { return c * std::pow(m, q + 1.0) / (q + 1.0); },
                [c, q](double, double m) { return c * q * std::pow(m, q - 1.0); }, c >= 0.0};
    }

    /// f = c m + V(x).
    static Coupling linear_plus_potential(double c, std::function<double(double)> potential)
    {
        auto v = std::move(potential);
        return {"linear-plus-potential", [c, v](double x, double m) { return c * m + v(x); },
                [c, v](double x, double m) { return 0.5 * c * m * m + v(x) * m; },
                [c](double, double) { return c; }, c >= 0.0};
    }

    /// f(x, m) = g(x) independent of m.
    static Coupling potential_only(std::function<double(double)> potential)
    {
        auto v = std::move(potential);
        return {"potential", [v](double x, double) { return v(x); }, [v](double x, double m) { return v(x) * m; },
                [](double, double) { return 0.0; }, true};
    }
};

}  // namespace mfghc

#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "mfghc/errors.hpp"

namespace mfghc {

/// Knobs shared by the r-Laplace descent and the coupled Newton oracle.
struct SolverConfig {
    std::size_t n = 257;
    /// Regularization levels for |Dphi|, strictly decreasing.
    std::vector<double> eps_schedule{1e-2, 1e-4, 1e-6, 1e-8};
    /// First trial step of the preconditioned-gradient fallback.
    double step0 = 0.1;
    std::size_t max_iters = 50000;
    /// Sup-norm of the projected gradient at which a stage stops.
    double grad_tol = 1e-10;
    double positivity_floor = 1e-12;
    /// Coupled solver: residual sup-norm at which Newton stops.
    double newton_tol = 1e-11;
    std::size_t newton_max_iters = 200;

    void validate() const
    {
        if (n < 17) throw ConfigError("solver needs n >= 17 grid nodes");
        if (eps_schedule.empty()) throw ConfigError("eps schedule must not be empty");
        for (std::size_t i = 0; i < eps_schedule.size(); ++i) {
            if (!(eps_schedule[i] > 0.0)) throw ConfigError("eps schedule entries must be positive");
            if (i > 0 && !(eps_schedule[i] < eps_schedule[i - 1]))
                throw ConfigError("eps schedule must be strictly decreasing");
        }
        if (!(step0 > 0.0)) throw ConfigError("step0 must be positive");
        if (!(grad_tol > 0.0) || !(newton_tol > 0.0)) throw ConfigError("tolerances must be positive");
        if (max_iters == 0 || newton_max_iters == 0) throw ConfigError("iteration limits must be positive");
        if (!(positivity_floor >= 0.0)) throw ConfigError("positivity floor must be nonnegative");
    }

    double final_eps() const { return eps_schedule.back(); }
};

/// History of one solve.  For the descent solver a stage is one
/// regularization level; for the Newton oracle a stage is one continuation step.
struct SolveTrace {
    struct Stage {
        double eps = 0.0;
        /// Continuation parameter in [0,1]; 1 means the target problem.
        double theta = 1.0;
        std::vector<double> energy;
        std::vector<double> lambda;
        std::vector<double> residual;
        std::size_t iterations = 0;
        std::size_t gradient_fallbacks = 0;
    };

    std::vector<Stage> stages;
    double final_residual = 0.0;
    bool converged = false;
    bool uniqueness_guaranteed = true;
    bool first_order_only = false;
    /// Some stage stopped at the rounding floor of the residual rather than at the
    /// requested tolerance; `rounding_floor` is the largest such floor.
    bool rounding_limited = false;
    double rounding_floor = 0.0;
    std::string message;

    std::size_t total_iterations() const
    {
        std::size_t s = 0;
        for (const auto& st : stages) s += st.iterations;
        return s;
    }
};

/// A solver stopped without meeting its tolerance; carries the trace.
class SolverError : public Error {
public:
    SolverError(const std::string& what, SolveTrace trace) : Error(what), trace_(std::move(trace)) {}
    const SolveTrace& trace() const { return trace_; }

private:
    SolveTrace trace_;
};

class NonConvergenceError : public SolverError {
public:
    using SolverError::SolverError;
};

class PositivityFailure : public SolverError {
public:
    using SolverError::SolverError;
};

class SingularJacobianError : public SolverError {
public:
    using SolverError::SolverError;
};

}  // namespace mfghc

/*
* Copyright (C) 2026 The agestrat authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*/
#ifndef AGESTRAT_SENSITIVITY_HPP
#define AGESTRAT_SENSITIVITY_HPP

#include "agestrat/error.hpp"
#include "agestrat/model.hpp"
#include "agestrat/parallel.hpp"
#include "agestrat/solver.hpp"

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace agestrat
{

/// Inverse CDF of the triangular distribution on [a, b] with mode c.
inline double triangular_icdf(double a, double c, double b, double u)
{
    if (!(a < b) || !(a <= c && c <= b) || !(u >= 0.0 && u <= 1.0)) {
        throw Error(ErrorCode::invalid_parameter, "triangular distribution needs a <= c <= b, a < b and u in [0, 1]");
    }
    const double width = b - a;
    const double split = (c - a) / width;
    if (u < split) {
        return a + std::sqrt(u * width * (c - a));
    }
    return b - std::sqrt((1.0 - u) * width * (b - c));
}

enum class Distribution {
    triangular,
    uniform,
};

/// One sampled dimension. All `targets` receive the same value, which is how
/// ties such as beta11 = beta12 are expressed.
struct PlanColumn {
    std::string label;
    std::vector<std::string> targets;
    double lower = 0.0;
    double upper = 1.0;
    double mode = 0.0;
    Distribution distribution = Distribution::triangular;

    double icdf(double u) const
    {
        if (distribution == Distribution::uniform) {
            return lower + u * (upper - lower);
        }
        return triangular_icdf(lower, mode, upper, u);
    }
};

struct SamplingPlan {
    std::vector<PlanColumn> columns;
    std::size_t samples = 3000;
    std::uint64_t seed = 1;
};

inline std::vector<std::string> check_plan(const SamplingPlan& plan)
{
    std::vector<std::string> problems;
    if (plan.columns.empty()) {
        problems.push_back("sampling plan has no columns");
    }
    if (plan.samples < 2) {
        problems.push_back("sampling plan needs at least 2 samples");
    }
    for (const auto& col : plan.columns) {
        if (!(col.lower < col.upper)) {
            problems.push_back("column '" + col.label + "' needs lower < upper");
        }
        if (col.distribution == Distribution::triangular && !(col.mode >= col.lower && col.mode <= col.upper)) {
            problems.push_back("mode of column '" + col.label + "' lies outside its bounds");
        }
        if (col.targets.empty()) {
            problems.push_back("column '" + col.label + "' has no target parameters");
        }
        for (const auto& target : col.targets) {
            if (!is_parameter_name(target)) {
                problems.push_back("column '" + col.label + "' targets unknown parameter '" + target + "'");
            }
        }
    }
    return problems;
}

inline void validate(const SamplingPlan& plan)
{
    auto problems = check_plan(plan);
    if (!problems.empty()) {
        std::string message = "invalid sampling plan:";
        for (const auto& p : problems) {
            message += " " + p + ";";
        }
        throw Error(ErrorCode::invalid_parameter, message);
    }
}

/// Ten tied dimensions with triangular distributions peaking at the fitted
/// Ontario values.
inline SamplingPlan ontario_sampling_plan(std::size_t samples = 3000, std::uint64_t seed = 1)
{
    const auto p = ontario_parameters();
    SamplingPlan plan;
    plan.samples = samples;
    plan.seed = seed;
    auto tri = [](std::string label, std::vector<std::string> targets, double lo, double hi, double mode) {
        return PlanColumn{std::move(label), std::move(targets), lo, hi, mode, Distribution::triangular};
    };
    plan.columns = {
        tri("beta11", {"beta11", "beta12"}, 0.0, 1e-5, p.beta11),
        tri("beta13", {"beta13", "beta14"}, 0.0, 1e-5, p.beta13),
        tri("beta11v", {"beta11v", "beta12v"}, 0.0, 1e-5, p.beta11v),
        tri("beta13v", {"beta13v", "beta14v"}, 0.0, 1e-5, p.beta13v),
        tri("epsilon", {"epsilon"}, 0.0, 1.0, p.epsilon),
        tri("beta21", {"beta21", "beta22"}, 0.0, 1e-5, p.beta21),
        tri("beta23", {"beta23", "beta24"}, 0.0, 1e-5, p.beta23),
        tri("omega", {"omega"}, 0.0, 0.3, p.omega),
        tri("tau1", {"tau1"}, 0.0, 0.3, p.tau1),
        tri("tau2", {"tau2"}, 0.0, 0.3, p.tau2),
    };
    return plan;
}

/// Stratified probabilities: column j holds one draw from each of the n
/// strata [k/n, (k+1)/n), in an independent random order.
inline Eigen::MatrixXd lhs_unit(std::size_t n, std::size_t dims, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> jitter(0.0, 1.0);
    Eigen::MatrixXd u(n, dims);
    std::vector<std::size_t> strata(n);
    for (std::size_t j = 0; j < dims; ++j) {
        std::iota(strata.begin(), strata.end(), std::size_t{0});
        std::shuffle(strata.begin(), strata.end(), rng);
        for (std::size_t i = 0; i < n; ++i) {
            const double v = (static_cast<double>(strata[i]) + jitter(rng)) / static_cast<double>(n);
            u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = std::min(v, 1.0);
        }
    }
    return u;
}

/// Latin hypercube design, one column per plan column (tie groups share a column).
inline Eigen::MatrixXd lhs_sample(const SamplingPlan& plan)
{
    validate(plan);
    std::mt19937_64 rng(plan.seed);
    Eigen::MatrixXd design = lhs_unit(plan.samples, plan.columns.size(), rng);
    for (Eigen::Index j = 0; j < design.cols(); ++j) {
        const auto& col = plan.columns[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < design.rows(); ++i) {
            design(i, j) = col.icdf(design(i, j));
        }
    }
    return design;
}

inline ParameterSet apply_design_row(const ParameterSet& base, const SamplingPlan& plan, std::span<const double> row)
{
    ParameterSet p = base;
    for (std::size_t j = 0; j < plan.columns.size(); ++j) {
        for (const auto& target : plan.columns[j].targets) {
            set_parameter(p, target, row[j], false);
        }
    }
    return p;
}

/// Ranks starting at 1; ties share their average rank.
inline Eigen::VectorXd rank_transform(const Eigen::VectorXd& x)
{
    const auto n = static_cast<std::size_t>(x.size());
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return x[static_cast<Eigen::Index>(a)] < x[static_cast<Eigen::Index>(b)];
    });
    Eigen::VectorXd ranks(x.size());
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j + 1 < n && x[static_cast<Eigen::Index>(order[j + 1])] == x[static_cast<Eigen::Index>(order[i])]) {
            ++j;
        }
        const double avg = 0.5 * static_cast<double>(i + j) + 1.0;
        for (std::size_t k = i; k <= j; ++k) {
            ranks[static_cast<Eigen::Index>(order[k])] = avg;
        }
        i = j + 1;
    }
    return ranks;
}

namespace detail
{

/// Residual of y after least-squares projection on the columns of z.
inline Eigen::VectorXd regression_residual(const Eigen::MatrixXd& z, const Eigen::VectorXd& y)
{
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(z);
    return y - z * qr.solve(y);
}

inline Eigen::MatrixXd others_with_intercept(const Eigen::MatrixXd& ranks, Eigen::Index skip)
{
    Eigen::MatrixXd z(ranks.rows(), ranks.cols());
    z.col(0).setOnes();
    Eigen::Index c = 1;
    for (Eigen::Index j = 0; j < ranks.cols(); ++j) {
        if (j != skip) {
            z.col(c++) = ranks.col(j);
        }
    }
    return z;
}

} // namespace detail

/// Partial rank correlation of every design column with the outcome.
inline std::vector<double> prcc(const Eigen::MatrixXd& design, const Eigen::VectorXd& outcome,
                                std::span<const std::string> labels = {})
{
    const Eigen::Index n = design.rows();
    const Eigen::Index p = design.cols();
    auto label = [&](Eigen::Index j) {
        return static_cast<std::size_t>(j) < labels.size() ? labels[static_cast<std::size_t>(j)]
                                                            : "column " + std::to_string(j);
    };
    if (outcome.size() != n) {
        throw Error(ErrorCode::invalid_parameter, "outcome length differs from the design row count");
    }
    if (p == 0 || n < p + 3) {
        throw Error(ErrorCode::degenerate_design, "PRCC needs at least three more samples than parameters");
    }

    Eigen::MatrixXd ranks(n, p);
    for (Eigen::Index j = 0; j < p; ++j) {
        ranks.col(j) = rank_transform(design.col(j));
        if ((ranks.col(j).array() == ranks(0, j)).all()) {
            throw Error(ErrorCode::degenerate_design, "constant column " + label(j));
        }
    }
    const Eigen::VectorXd outcome_ranks = rank_transform(outcome);
    if ((outcome_ranks.array() == outcome_ranks[0]).all()) {
        throw Error(ErrorCode::degenerate_design, "constant outcome");
    }

    // a column explained by the others leaves a vanishing residual
    const double scale = std::sqrt(static_cast<double>(n)) * static_cast<double>(n);
    std::vector<Eigen::VectorXd> column_residuals;
    std::vector<Eigen::Index> collinear;
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto z = detail::others_with_intercept(ranks, j);
        column_residuals.push_back(detail::regression_residual(z, ranks.col(j)));
        if (column_residuals.back().norm() <= 1e-9 * scale) {
            collinear.push_back(j);
        }
    }
    if (!collinear.empty()) {
        std::string names;
        for (auto j : collinear) {
            names += (names.empty() ? "" : ", ") + label(j);
        }
        throw Error(ErrorCode::degenerate_design, "collinear parameter columns: " + names);
    }

    std::vector<double> out;
    for (Eigen::Index j = 0; j < p; ++j) {
        const auto z = detail::others_with_intercept(ranks, j);
        const Eigen::VectorXd ry = detail::regression_residual(z, outcome_ranks);
        const auto& rx = column_residuals[static_cast<std::size_t>(j)];
        const double denom = std::sqrt(rx.squaredNorm() * ry.squaredNorm());
        const double r = denom > 0.0 ? rx.dot(ry) / denom : 0.0;
        out.push_back(std::clamp(r, -1.0, 1.0));
    }
    return out;
}

/// |PRCC| below this value is indistinguishable from zero at level `alpha`
/// (t approximation with n - 2 - (p - 1) degrees of freedom).
inline double prcc_null_threshold(std::size_t n, std::size_t p, double alpha = 0.05)
{
    const double dof = static_cast<double>(n) - 2.0 - (static_cast<double>(p) - 1.0);
    if (!(dof > 0.0)) {
        throw Error(ErrorCode::invalid_parameter, "not enough samples for a PRCC significance threshold");
    }
    boost::math::students_t dist(dof);
    const double t = boost::math::quantile(boost::math::complement(dist, alpha / 2.0));
    return t / std::sqrt(dof + t * t);
}

struct CumulativeInfections {
    double group1 = 0.0;
    double group2 = 0.0;
    double total = 0.0;
};

/// Reported inflow accumulated over [0, horizon].
inline CumulativeInfections cumulative_infections(const ParameterSet& params, const StateVector& initial,
                                                  double horizon, const SolverConfig& solver = {})
{
    const auto traj = integrate(initial, params, horizon, solver);
    CumulativeInfections c;
    c.group1 = traj.reported(1).back() - traj.reported(1).front();
    c.group2 = traj.reported(2).back() - traj.reported(2).front();
    c.total = c.group1 + c.group2;
    return c;
}

inline constexpr std::array<const char*, 3> outcome_names = {"group1", "group2", "total"};

struct SensitivityResult {
    std::vector<std::string> labels;
    Eigen::MatrixXd design; ///< successful samples only
    Eigen::MatrixXd outcomes; ///< columns: group1, group2, total
    Eigen::MatrixXd coefficients; ///< PRCC, parameter x outcome
    std::vector<std::size_t> failed_samples;
    double null_threshold = 0.0;
};

struct SensitivityOptions {
    double horizon = 86.0;
    SolverConfig solver;
    std::size_t workers = 1;
    double max_failure_fraction = 0.01;
};

inline SensitivityResult run_sensitivity(const SamplingPlan& plan, const ParameterSet& base,
                                         const StateVector& initial, const SensitivityOptions& options = {})
{
    const Eigen::MatrixXd full = lhs_sample(plan);
    const auto n = static_cast<std::size_t>(full.rows());
    std::vector<CumulativeInfections> values(n);
    std::vector<char> ok(n, 0);
    parallel_for(n, options.workers, [&](std::size_t i) {
        std::vector<double> row(static_cast<std::size_t>(full.cols()));
        for (Eigen::Index j = 0; j < full.cols(); ++j) {
            row[static_cast<std::size_t>(j)] = full(static_cast<Eigen::Index>(i), j);
        }
        try {
            values[i] = cumulative_infections(apply_design_row(base, plan, row), initial, options.horizon,
                                              options.solver);
            ok[i] = 1;
        }
        catch (const Error&) {
            ok[i] = 0;
        }
    });

    SensitivityResult result;
    for (const auto& col : plan.columns) {
        result.labels.push_back(col.label);
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (!ok[i]) {
            result.failed_samples.push_back(i);
        }
    }
    if (static_cast<double>(result.failed_samples.size()) > options.max_failure_fraction * static_cast<double>(n)) {
        throw Error(ErrorCode::too_many_failures, std::to_string(result.failed_samples.size()) + " of " +
                                                      std::to_string(n) + " simulations failed to integrate");
    }
    const auto kept = static_cast<Eigen::Index>(n - result.failed_samples.size());
    result.design.resize(kept, full.cols());
    result.outcomes.resize(kept, 3);
    Eigen::Index r = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (!ok[i]) {
            continue;
        }
        result.design.row(r) = full.row(static_cast<Eigen::Index>(i));
        result.outcomes(r, 0) = values[i].group1;
        result.outcomes(r, 1) = values[i].group2;
        result.outcomes(r, 2) = values[i].total;
        ++r;
    }
    result.coefficients.resize(full.cols(), 3);
    for (Eigen::Index k = 0; k < 3; ++k) {
        const auto coeffs = prcc(result.design, result.outcomes.col(k), result.labels);
        for (Eigen::Index j = 0; j < full.cols(); ++j) {
            result.coefficients(j, k) = coeffs[static_cast<std::size_t>(j)];
        }
    }
    result.null_threshold = prcc_null_threshold(static_cast<std::size_t>(kept), plan.columns.size());
    return result;
}

} // namespace agestrat

#endif // AGESTRAT_SENSITIVITY_HPP

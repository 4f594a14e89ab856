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
#ifndef AGESTRAT_INFERENCE_HPP
#define AGESTRAT_INFERENCE_HPP

#include "agestrat/error.hpp"
#include "agestrat/model.hpp"
#include "agestrat/solver.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace agestrat
{

// =================================================================================================
//     Fit specification
// =================================================================================================

enum class LikelihoodKind {
    poisson,
    negative_binomial,
};

struct LikelihoodConfig {
    LikelihoodKind kind = LikelihoodKind::poisson;
    double dispersion = 10.0; ///< negative binomial size parameter
    double floor = 1e-10; ///< lower bound on model incidence
};

struct UniformPrior {
    double lower = 0.0;
    double upper = 1.0;

    bool contains(double x) const
    {
        return x >= lower && x <= upper;
    }
    double width() const
    {
        return upper - lower;
    }
};

/// A fitted quantity: a parameter name such as "beta11", or an initial
/// condition written as the compartment name plus "_0" (e.g. "a1_0").
struct FreeQuantity {
    std::string name;
    UniformPrior prior;
    double start = 0.0;
    double proposal_sd = 0.0; ///< natural units; 0 selects 1% of |start| (or of the prior width)
};

/// Compartment addressed by an initial-condition name, if it is one.
inline std::optional<Compartment> initial_condition_target(std::string_view name)
{
    if (name.size() < 3 || name.substr(name.size() - 2) != "_0") {
        return std::nullopt;
    }
    return compartment_from_name(name.substr(0, name.size() - 2));
}

struct FitSpec {
    ParameterSet params;
    StateVector initial;
    std::vector<FreeQuantity> free;
    bool tie_contact_rates = true;
    LikelihoodConfig likelihood;
    SolverConfig solver;

    std::vector<std::string> names() const
    {
        std::vector<std::string> out;
        for (const auto& q : free) {
            out.push_back(q.name);
        }
        return out;
    }

    std::vector<double> start() const
    {
        std::vector<double> out;
        for (const auto& q : free) {
            out.push_back(q.start);
        }
        return out;
    }

    /// Fixed values overlaid with a free-quantity assignment.
    std::pair<ParameterSet, StateVector> apply(std::span<const double> values) const
    {
        ParameterSet p = params;
        StateVector s = initial;
        for (std::size_t i = 0; i < free.size(); ++i) {
            if (auto c = initial_condition_target(free[i].name)) {
                s[*c] = values[i];
            }
            else {
                set_parameter(p, free[i].name, values[i], tie_contact_rates);
            }
        }
        return {p, s};
    }

    double log_prior(std::span<const double> values) const
    {
        double lp = 0.0;
        for (std::size_t i = 0; i < free.size(); ++i) {
            if (!free[i].prior.contains(values[i])) {
                return -std::numeric_limits<double>::infinity();
            }
            lp -= std::log(free[i].prior.width());
        }
        return lp;
    }
};

inline std::vector<std::string> check_fit_spec(const FitSpec& fit)
{
    std::vector<std::string> problems;
    if (fit.free.empty()) {
        problems.push_back("no free quantities");
    }
    std::set<std::string> seen;
    for (const auto& q : fit.free) {
        if (!is_parameter_name(q.name) && !initial_condition_target(q.name)) {
            problems.push_back("unknown free quantity '" + q.name + "'");
        }
        if (!seen.insert(q.name).second) {
            problems.push_back("duplicate free quantity '" + q.name + "'");
        }
        if (!(q.prior.lower < q.prior.upper)) {
            problems.push_back("prior of '" + q.name + "' needs lower < upper");
        }
        else if (!q.prior.contains(q.start)) {
            problems.push_back("start value of '" + q.name + "' lies outside its prior");
        }
        if (q.proposal_sd < 0.0) {
            problems.push_back("proposal_sd of '" + q.name + "' is negative");
        }
    }
    if (fit.likelihood.kind == LikelihoodKind::negative_binomial && !(fit.likelihood.dispersion > 0.0)) {
        problems.push_back("negative binomial dispersion must be positive");
    }
    if (!(fit.likelihood.floor > 0.0)) {
        problems.push_back("likelihood floor must be positive");
    }
    return problems;
}

inline void validate(const FitSpec& fit)
{
    auto problems = check_fit_spec(fit);
    if (!problems.empty()) {
        std::string message = "invalid fit specification:";
        for (const auto& problem : problems) {
            message += " " + problem + ";";
        }
        throw Error(ErrorCode::invalid_parameter, message);
    }
}

/// Free quantities fitted for Ontario: ten rates plus six initial conditions.
/// Priors are bounded uniforms; contact rates span [0, 1e-5].
inline std::vector<FreeQuantity> ontario_free_quantities(bool pin_exposed = false)
{
    const auto p = ontario_parameters();
    const auto s = ontario_initial_state();
    using C = Compartment;
    std::vector<FreeQuantity> free = {
        {"beta11", {0.0, 1e-5}, p.beta11, 0.0},
        {"beta13", {0.0, 1e-5}, p.beta13, 0.0},
        {"omega", {0.0, 0.3}, p.omega, 0.0},
        {"beta11v", {0.0, 1e-5}, p.beta11v, 0.0},
        {"beta13v", {0.0, 1e-5}, p.beta13v, 0.0},
        {"epsilon", {0.0, 1.0}, p.epsilon, 0.0},
        {"delta1", {0.0, 1e-3}, p.delta1, 0.0},
        {"beta21", {0.0, 1e-5}, p.beta21, 0.0},
        {"beta23", {0.0, 1e-5}, p.beta23, 0.0},
        {"delta2", {0.0, 1e-3}, p.delta2, 0.0},
        {"a1_0", {0.0, 5000.0}, s[C::A1], 0.0},
        {"u1_0", {0.0, 5000.0}, s[C::U1], 0.0},
        {"a2_0", {0.0, 2000.0}, s[C::A2], 0.0},
        {"u2_0", {0.0, 2000.0}, s[C::U2], 0.0},
    };
    if (!pin_exposed) {
        free.push_back({"e1_0", {0.0, 5000.0}, s[C::E1], 0.0});
        free.push_back({"e2_0", {0.0, 2000.0}, s[C::E2], 0.0});
    }
    return free;
}

inline FitSpec ontario_fit_spec(bool pin_exposed = false)
{
    FitSpec fit;
    fit.params = ontario_parameters();
    fit.initial = ontario_initial_state();
    fit.free = ontario_free_quantities(pin_exposed);
    return fit;
}

// =================================================================================================
//     Likelihood
// =================================================================================================

inline double poisson_log_pmf(double k, double mean)
{
    return k * std::log(mean) - mean - std::lgamma(k + 1.0);
}

inline double negative_binomial_log_pmf(double k, double mean, double size)
{
    return std::lgamma(k + size) - std::lgamma(size) - std::lgamma(k + 1.0) + size * std::log(size / (size + mean)) +
           k * std::log(mean / (size + mean));
}

inline double count_log_likelihood(std::span<const double> observed, std::span<const double> model,
                                   const LikelihoodConfig& config)
{
    if (observed.size() != model.size()) {
        throw Error(ErrorCode::invalid_parameter, "observed and model series differ in length");
    }
    double ll = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double mean = std::max(model[i], config.floor);
        ll += config.kind == LikelihoodKind::poisson ? poisson_log_pmf(observed[i], mean)
                                                     : negative_binomial_log_pmf(observed[i], mean, config.dispersion);
    }
    return ll;
}

/// Model daily incidence of both groups for `days` days starting at `first_day`.
inline std::pair<IncidenceSeries, IncidenceSeries> simulate_incidence(const ParameterSet& params,
                                                                      const StateVector& initial, int first_day,
                                                                      int days, const SolverConfig& solver = {})
{
    auto traj = integrate(initial, params, static_cast<double>(days), solver, static_cast<double>(first_day));
    return {daily_incidence(traj, 1), daily_incidence(traj, 2)};
}

/// Joint log-likelihood of both groups' observed daily incidence. Any
/// integration failure yields -infinity.
inline double log_likelihood(std::span<const double> values, const IncidenceSeries& group1,
                             const IncidenceSeries& group2, const FitSpec& fit)
{
    if (group1.size() != group2.size() || group1.first_day != group2.first_day || group1.size() == 0) {
        throw Error(ErrorCode::invalid_parameter, "the two observed series must cover the same nonempty window");
    }
    if (values.size() != fit.free.size()) {
        throw Error(ErrorCode::invalid_parameter, "assignment size does not match the free quantities");
    }
    try {
        const auto [params, initial] = fit.apply(values);
        const auto [model1, model2] = simulate_incidence(params, initial, group1.first_day,
                                                         static_cast<int>(group1.size()), fit.solver);
        return count_log_likelihood(group1.counts, model1.counts, fit.likelihood) +
               count_log_likelihood(group2.counts, model2.counts, fit.likelihood);
    }
    catch (const Error&) {
        return -std::numeric_limits<double>::infinity();
    }
}

inline double log_posterior(std::span<const double> values, const IncidenceSeries& group1,
                            const IncidenceSeries& group2, const FitSpec& fit)
{
    const double lp = fit.log_prior(values);
    if (!std::isfinite(lp)) {
        return lp;
    }
    return lp + log_likelihood(values, group1, group2, fit);
}

// =================================================================================================
//     Adaptive Metropolis-Hastings
// =================================================================================================

struct CovarianceSnapshot {
    std::size_t iteration = 0;
    std::vector<double> covariance; ///< row-major d x d, natural units
};

/// Sampled values (one row per iteration), log posterior and acceptance flags.
struct Chain {
    std::vector<std::string> names;
    std::vector<std::vector<double>> samples;
    std::vector<double> log_posterior;
    std::vector<bool> accepted;
    std::vector<CovarianceSnapshot> snapshots;

    std::size_t size() const
    {
        return samples.size();
    }
    std::size_t dimension() const
    {
        return names.size();
    }

    std::vector<double> column(std::size_t j, std::size_t from = 0) const
    {
        std::vector<double> out;
        for (std::size_t i = from; i < samples.size(); ++i) {
            out.push_back(samples[i][j]);
        }
        return out;
    }

    /// Samples from index `from` on.
    Chain tail(std::size_t from) const
    {
        Chain out;
        out.names = names;
        from = std::min(from, samples.size());
        out.samples.assign(samples.begin() + static_cast<std::ptrdiff_t>(from), samples.end());
        out.log_posterior.assign(log_posterior.begin() + static_cast<std::ptrdiff_t>(from), log_posterior.end());
        out.accepted.assign(accepted.begin() + static_cast<std::ptrdiff_t>(from), accepted.end());
        return out;
    }

    double acceptance_rate(std::size_t from = 0) const
    {
        if (from >= accepted.size()) {
            return 0.0;
        }
        const auto n = std::count(accepted.begin() + static_cast<std::ptrdiff_t>(from), accepted.end(), true);
        return static_cast<double>(n) / static_cast<double>(accepted.size() - from);
    }
};

struct AdaptiveMhOptions {
    std::size_t adaptation_start = 500; ///< iterations with the fixed initial proposal
    bool adapt = true;
    double scale_factor = 2.38 * 2.38; ///< divided by the dimension
    double regularization = 1e-10; ///< added to the diagonal, in scaled coordinates
    std::size_t collapse_window = 1000;
    double collapse_acceptance = 0.001;
    std::size_t snapshot_every = 1000;
};

/// Adaptive random-walk Metropolis (Haario et al.). Sampling happens in
/// coordinates divided by `scale`, so the diagonal regularization is
/// meaningful for quantities of very different magnitude.
template <class LogDensity>
Chain run_adaptive_mh(LogDensity&& log_density, std::vector<double> start, std::span<const double> scale,
                      std::span<const double> initial_sd, std::vector<std::string> names, std::size_t iterations,
                      std::uint64_t seed, const AdaptiveMhOptions& options = {})
{
    const std::size_t d = start.size();
    if (d == 0 || scale.size() != d || initial_sd.size() != d || names.size() != d) {
        throw Error(ErrorCode::invalid_parameter, "sampler inputs must share one nonzero dimension");
    }
    for (std::size_t j = 0; j < d; ++j) {
        if (!(scale[j] > 0.0) || !(initial_sd[j] > 0.0)) {
            throw Error(ErrorCode::invalid_parameter, "scales and initial proposal widths must be positive");
        }
    }

    using Vector = Eigen::VectorXd;
    using Matrix = Eigen::MatrixXd;
    Vector scale_vec(d);
    Vector z(d);
    Matrix proposal = Matrix::Zero(d, d);
    for (std::size_t j = 0; j < d; ++j) {
        scale_vec[j] = scale[j];
        z[j] = start[j] / scale[j];
        const double sd = initial_sd[j] / scale[j];
        proposal(j, j) = sd * sd;
    }
    Matrix chol = proposal.llt().matrixL();

    auto to_natural = [&](const Vector& zz) {
        std::vector<double> x(d);
        for (std::size_t j = 0; j < d; ++j) {
            x[j] = zz[j] * scale_vec[j];
        }
        return x;
    };

    std::vector<double> x = to_natural(z);
    double current = log_density(std::span<const double>(x));
    if (!std::isfinite(current)) {
        throw Error(ErrorCode::invalid_parameter, "starting point has zero posterior density");
    }

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    Chain chain;
    chain.names = std::move(names);
    chain.samples.reserve(iterations);
    chain.log_posterior.reserve(iterations);
    chain.accepted.reserve(iterations);

    // running mean and scatter of the scaled samples (Welford)
    Vector mean = z;
    Matrix scatter = Matrix::Zero(d, d);
    std::size_t count = 1;
    std::size_t window_accepts = 0;

    auto snapshot = [&](std::size_t iteration) {
        CovarianceSnapshot snap;
        snap.iteration = iteration;
        snap.covariance.resize(d * d);
        for (std::size_t r = 0; r < d; ++r) {
            for (std::size_t c = 0; c < d; ++c) {
                snap.covariance[r * d + c] = proposal(r, c) * scale_vec[r] * scale_vec[c];
            }
        }
        chain.snapshots.push_back(std::move(snap));
    };
    snapshot(0);

    for (std::size_t iter = 0; iter < iterations; ++iter) {
        Vector xi(d);
        for (std::size_t j = 0; j < d; ++j) {
            xi[j] = normal(rng);
        }
        const Vector candidate = z + chol * xi;
        const auto cand_x = to_natural(candidate);
        const double cand_lp = log_density(std::span<const double>(cand_x));
        const double u = uniform(rng);
        bool accept = false;
        if (std::isfinite(cand_lp) && std::log(u) < cand_lp - current) {
            z = candidate;
            x = cand_x;
            current = cand_lp;
            accept = true;
            ++window_accepts;
        }
        chain.samples.push_back(x);
        chain.log_posterior.push_back(current);
        chain.accepted.push_back(accept);

        ++count;
        const Vector delta = z - mean;
        mean += delta / static_cast<double>(count);
        scatter += delta * (z - mean).transpose();

        if (options.adapt && iter + 1 >= options.adaptation_start) {
            Matrix cov = scatter / static_cast<double>(count - 1);
            cov.diagonal().array() += options.regularization;
            Matrix next = options.scale_factor / static_cast<double>(d) * cov;
            Eigen::LLT<Matrix> llt(next);
            if (llt.info() == Eigen::Success) {
                proposal = next;
                chol = llt.matrixL();
            }
        }
        if (options.snapshot_every > 0 && (iter + 1) % options.snapshot_every == 0) {
            snapshot(iter + 1);
        }
        if (options.collapse_window > 0 && (iter + 1) % options.collapse_window == 0) {
            const double rate = static_cast<double>(window_accepts) / static_cast<double>(options.collapse_window);
            if (rate < options.collapse_acceptance) {
                throw Error(ErrorCode::adaptation_collapse,
                            "acceptance rate " + std::to_string(rate) + " over iterations " +
                                std::to_string(iter + 1 - options.collapse_window) + ".." + std::to_string(iter + 1) +
                                "; revise the priors or the initial proposal scale");
            }
            window_accepts = 0;
        }
    }
    return chain;
}

/// Calibrates the free quantities of `fit` to the two observed series.
inline Chain run_adaptive_mh(const FitSpec& fit, const IncidenceSeries& group1, const IncidenceSeries& group2,
                             std::size_t iterations, std::size_t burn_in, std::uint64_t seed,
                             const AdaptiveMhOptions& options = {})
{
    validate(fit);
    if (!(iterations > burn_in)) {
        throw Error(ErrorCode::invalid_parameter, "iterations must exceed burn-in");
    }
    std::vector<double> scale, sd;
    for (const auto& q : fit.free) {
        scale.push_back(q.prior.width());
        double width = q.proposal_sd;
        if (width <= 0.0) {
            width = q.start != 0.0 ? 0.01 * std::abs(q.start) : 0.01 * q.prior.width();
        }
        sd.push_back(width);
    }
    auto density = [&](std::span<const double> values) {
        return log_posterior(values, group1, group2, fit);
    };
    return run_adaptive_mh(density, fit.start(), scale, sd, fit.names(), iterations, seed, options);
}

// =================================================================================================
//     Diagnostics and summaries
// =================================================================================================

/// Variance of the sample mean with a Newey-West (Bartlett) long-run variance,
/// bandwidth floor(n^(1/3)). Returns 0 for a constant window.
inline double newey_west_mean_variance(std::span<const double> x)
{
    const std::size_t n = x.size();
    double mean = 0.0;
    for (double v : x) {
        mean += v;
    }
    mean /= static_cast<double>(n);
    auto autocov = [&](std::size_t lag) {
        double sum = 0.0;
        for (std::size_t t = 0; t + lag < n; ++t) {
            sum += (x[t] - mean) * (x[t + lag] - mean);
        }
        return sum / static_cast<double>(n);
    };
    const double gamma0 = autocov(0);
    if (gamma0 <= 0.0) {
        return 0.0;
    }
    const auto bandwidth = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n))));
    double long_run = gamma0;
    for (std::size_t lag = 1; lag <= bandwidth && lag < n; ++lag) {
        const double weight = 1.0 - static_cast<double>(lag) / static_cast<double>(bandwidth + 1);
        long_run += 2.0 * weight * autocov(lag);
    }
    return std::max(long_run, 0.0) / static_cast<double>(n);
}

/// Geweke z-score comparing the first `frac_a` and the last `frac_b` of a series.
inline double geweke_z(std::span<const double> x, double frac_a = 0.1, double frac_b = 0.5)
{
    if (!(frac_a > 0.0) || !(frac_b > 0.0) || frac_a + frac_b > 1.0) {
        throw Error(ErrorCode::invalid_parameter, "Geweke window fractions must be positive and sum to at most 1");
    }
    const auto n_a = static_cast<std::size_t>(std::floor(frac_a * static_cast<double>(x.size())));
    const auto n_b = static_cast<std::size_t>(std::floor(frac_b * static_cast<double>(x.size())));
    if (n_a < 50 || n_b < 50) {
        throw Error(ErrorCode::invalid_parameter, "Geweke windows need at least 50 samples each");
    }
    const auto first = x.subspan(0, n_a);
    const auto last = x.subspan(x.size() - n_b, n_b);
    const double var_a = newey_west_mean_variance(first);
    const double var_b = newey_west_mean_variance(last);
    if (var_a <= 0.0 || var_b <= 0.0) {
        throw Error(ErrorCode::undefined_z, "zero-variance Geweke window");
    }
    auto mean = [](std::span<const double> v) {
        double s = 0.0;
        for (double e : v) {
            s += e;
        }
        return s / static_cast<double>(v.size());
    };
    return (mean(first) - mean(last)) / std::sqrt(var_a + var_b);
}

/// Per-quantity Geweke z-scores; empty where a window has zero variance.
inline std::vector<std::optional<double>> geweke(const Chain& chain, double frac_a = 0.1, double frac_b = 0.5)
{
    std::vector<std::optional<double>> out;
    for (std::size_t j = 0; j < chain.dimension(); ++j) {
        const auto column = chain.column(j);
        try {
            out.push_back(geweke_z(column, frac_a, frac_b));
        }
        catch (const Error& e) {
            if (e.code() != ErrorCode::undefined_z) {
                throw;
            }
            out.push_back(std::nullopt);
        }
    }
    return out;
}

struct PosteriorSummary {
    std::string name;
    double mean = 0.0;
    double sd = 0.0;
    double lower95 = 0.0;
    double upper95 = 0.0;
};

/// Linear-interpolation quantile of sorted data.
inline double sorted_quantile(std::span<const double> sorted, double q)
{
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = pos - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

inline std::vector<PosteriorSummary> summarize(const Chain& chain, std::size_t burn_in)
{
    if (!(chain.size() > burn_in)) {
        throw Error(ErrorCode::invalid_parameter, "chain must be longer than the burn-in");
    }
    std::vector<PosteriorSummary> out;
    for (std::size_t j = 0; j < chain.dimension(); ++j) {
        auto values = chain.column(j, burn_in);
        const auto n = static_cast<double>(values.size());
        PosteriorSummary s;
        s.name = chain.names[j];
        for (double v : values) {
            s.mean += v;
        }
        s.mean /= n;
        if (values.size() > 1) {
            double ss = 0.0;
            for (double v : values) {
                ss += (v - s.mean) * (v - s.mean);
            }
            s.sd = std::sqrt(ss / (n - 1.0));
        }
        std::sort(values.begin(), values.end());
        s.lower95 = sorted_quantile(values, 0.025);
        s.upper95 = sorted_quantile(values, 0.975);
        out.push_back(s);
    }
    return out;
}

/// Adds Poisson observation noise to a modelled series.
inline IncidenceSeries poisson_noise(const IncidenceSeries& series, std::mt19937_64& rng)
{
    IncidenceSeries out = series;
    for (auto& c : out.counts) {
        std::poisson_distribution<long long> draw(std::max(c, 1e-12));
        c = static_cast<double>(draw(rng));
    }
    return out;
}

} // namespace agestrat

#endif // AGESTRAT_INFERENCE_HPP

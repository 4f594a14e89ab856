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
#ifndef AGESTRAT_SOLVER_HPP
#define AGESTRAT_SOLVER_HPP

#include "agestrat/error.hpp"
#include "agestrat/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <utility>
#include <vector>

namespace agestrat
{

enum class Method {
    rk4, ///< classic fixed-step fourth order
    dopri45, ///< adaptive Dormand-Prince 5(4)
};

struct SolverConfig {
    Method method = Method::dopri45;
    double step = 0.05; ///< fixed step (rk4 only), days
    double rel_tol = 1e-8;
    double abs_tol = 1e-6;
    double output_spacing = 1.0; ///< days
    double min_step = 1e-10;
    std::size_t max_steps = 1000000;
};

inline void validate(const SolverConfig& config)
{
    if (!(config.step > 0.0) || !(config.rel_tol > 0.0) || !(config.abs_tol > 0.0) || !(config.min_step > 0.0) ||
        !(config.output_spacing > 0.0) || config.max_steps == 0) {
        throw Error(ErrorCode::invalid_parameter, "solver step sizes, tolerances and output spacing must be positive");
    }
}

template <std::size_t N>
using OdeVector = std::array<double, N>;

namespace detail
{

template <std::size_t N>
OdeVector<N> axpy(const OdeVector<N>& y, double h, std::initializer_list<std::pair<double, const OdeVector<N>*>> terms)
{
    OdeVector<N> out = y;
    for (const auto& [coeff, k] : terms) {
        if (coeff == 0.0) {
            continue;
        }
        for (std::size_t i = 0; i < N; ++i) {
            out[i] += h * coeff * (*k)[i];
        }
    }
    return out;
}

template <std::size_t N, class System>
OdeVector<N> rk4_step(System& f, const OdeVector<N>& y, double h)
{
    const auto k1 = f(y);
    const auto k2 = f(axpy<N>(y, h, {{0.5, &k1}}));
    const auto k3 = f(axpy<N>(y, h, {{0.5, &k2}}));
    const auto k4 = f(axpy<N>(y, h, {{1.0, &k3}}));
    OdeVector<N> out;
    for (std::size_t i = 0; i < N; ++i) {
        out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    return out;
}

/// One Dormand-Prince step; returns the fifth-order solution and writes the
/// scaled RMS error norm.
template <std::size_t N, class System>
OdeVector<N> dopri_step(System& f, const OdeVector<N>& y, double h, const SolverConfig& cfg, double& error_norm)
{
    constexpr double a21 = 1.0 / 5.0;
    constexpr double a31 = 3.0 / 40.0, a32 = 9.0 / 40.0;
    constexpr double a41 = 44.0 / 45.0, a42 = -56.0 / 15.0, a43 = 32.0 / 9.0;
    constexpr double a51 = 19372.0 / 6561.0, a52 = -25360.0 / 2187.0, a53 = 64448.0 / 6561.0, a54 = -212.0 / 729.0;
    constexpr double a61 = 9017.0 / 3168.0, a62 = -355.0 / 33.0, a63 = 46732.0 / 5247.0, a64 = 49.0 / 176.0,
                     a65 = -5103.0 / 18656.0;
    constexpr double b1 = 35.0 / 384.0, b3 = 500.0 / 1113.0, b4 = 125.0 / 192.0, b5 = -2187.0 / 6784.0,
                     b6 = 11.0 / 84.0;
    constexpr double e1 = 71.0 / 57600.0, e3 = -71.0 / 16695.0, e4 = 71.0 / 1920.0, e5 = -17253.0 / 339200.0,
                     e6 = 22.0 / 525.0, e7 = -1.0 / 40.0;

    const auto k1 = f(y);
    const auto k2 = f(axpy<N>(y, h, {{a21, &k1}}));
    const auto k3 = f(axpy<N>(y, h, {{a31, &k1}, {a32, &k2}}));
    const auto k4 = f(axpy<N>(y, h, {{a41, &k1}, {a42, &k2}, {a43, &k3}}));
    const auto k5 = f(axpy<N>(y, h, {{a51, &k1}, {a52, &k2}, {a53, &k3}, {a54, &k4}}));
    const auto k6 = f(axpy<N>(y, h, {{a61, &k1}, {a62, &k2}, {a63, &k3}, {a64, &k4}, {a65, &k5}}));
    const auto y_new = axpy<N>(y, h, {{b1, &k1}, {b3, &k3}, {b4, &k4}, {b5, &k5}, {b6, &k6}});
    const auto k7 = f(y_new);

    double sum = 0.0;
    for (std::size_t i = 0; i < N; ++i) {
        const double err = h * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);
        const double scale = cfg.abs_tol + cfg.rel_tol * std::max(std::abs(y[i]), std::abs(y_new[i]));
        sum += (err / scale) * (err / scale);
    }
    error_norm = std::sqrt(sum / static_cast<double>(N));
    return y_new;
}

template <std::size_t N>
bool all_finite(const OdeVector<N>& y)
{
    return std::all_of(y.begin(), y.end(), [](double v) {
        return std::isfinite(v);
    });
}

} // namespace detail

/// Advances `y` from `t` to `t_end` with the configured method. `step_hint`
/// carries the adaptive step size across calls. `on_step(t, y)` runs after
/// every accepted step and may throw to abort.
template <std::size_t N, class System, class StepCheck>
void advance(System&& f, OdeVector<N>& y, double& t, double t_end, const SolverConfig& cfg, double& step_hint,
             StepCheck&& on_step)
{
    std::size_t steps = 0;
    if (cfg.method == Method::rk4) {
        while (t < t_end) {
            double h = cfg.step;
            bool last = false;
            // land on t_end exactly; absorb a sliver left by round-off
            if (t + h >= t_end - 1e-12 * std::max(1.0, std::abs(t_end))) {
                h = t_end - t;
                last = true;
            }
            y = detail::rk4_step<N>(f, y, h);
            t = last ? t_end : t + h;
            if (!detail::all_finite<N>(y)) {
                throw IntegrationError(ErrorCode::integration_failure, t, "non-finite state");
            }
            on_step(t, y);
            if (++steps > cfg.max_steps) {
                throw IntegrationError(ErrorCode::integration_failure, t, "step limit exceeded");
            }
        }
        return;
    }

    double h = step_hint > 0.0 ? step_hint : std::min(0.1, t_end - t);
    while (t < t_end) {
        const bool last = t + h >= t_end;
        const double h_try = last ? t_end - t : h;
        double err = 0.0;
        auto y_new = detail::dopri_step<N>(f, y, h_try, cfg, err);
        if (!std::isfinite(err) || !detail::all_finite<N>(y_new)) {
            err = 1e10;
        }
        if (err <= 1.0) {
            y = y_new;
            t = last ? t_end : t + h_try;
            on_step(t, y);
            const double factor = err == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(err, -0.2), 0.2, 5.0);
            // a clipped final step says little about the natural step size
            if (!last || h_try * factor > h) {
                h = h_try * factor;
            }
        }
        else {
            h = h_try * std::clamp(0.9 * std::pow(err, -0.2), 0.1, 0.9);
        }
        if (h < cfg.min_step) {
            throw IntegrationError(ErrorCode::integration_failure, t, "step size underflow");
        }
        if (++steps > cfg.max_steps) {
            throw IntegrationError(ErrorCode::integration_failure, t, "step limit exceeded");
        }
    }
    step_hint = h;
}

/// Integrates a generic system from t0 to t1 and returns the final value.
template <std::size_t N, class System>
OdeVector<N> solve_ode(System&& f, OdeVector<N> y0, double t0, double t1, const SolverConfig& cfg)
{
    validate(cfg);
    double t = t0;
    double hint = 0.0;
    advance<N>(f, y0, t, t1, cfg, hint, [](double, const OdeVector<N>&) {});
    return y0;
}

/// Model state plus the two cumulative reported-inflow counters.
using AugmentedState = OdeVector<num_compartments + 2>;

/// Time-indexed model solution. Built by integrate(); immutable afterwards.
class Trajectory
{
public:
    Trajectory() = default;

    /// Validates the ordering invariants; used for hand-built trajectories.
    Trajectory(std::vector<double> times, std::vector<StateVector> states, std::vector<double> reported1,
               std::vector<double> reported2)
        : m_times(std::move(times))
        , m_states(std::move(states))
        , m_reported1(std::move(reported1))
        , m_reported2(std::move(reported2))
    {
        if (m_times.empty() || m_states.size() != m_times.size() || m_reported1.size() != m_times.size() ||
            m_reported2.size() != m_times.size()) {
            throw Error(ErrorCode::invalid_parameter, "trajectory columns must be nonempty and of equal length");
        }
        for (std::size_t i = 1; i < m_times.size(); ++i) {
            if (!(m_times[i] > m_times[i - 1])) {
                throw Error(ErrorCode::invalid_parameter, "trajectory times must be strictly increasing");
            }
            if (m_reported1[i] < m_reported1[i - 1] || m_reported2[i] < m_reported2[i - 1]) {
                throw Error(ErrorCode::invalid_parameter, "reported counters must be nondecreasing");
            }
        }
        m_resume = augment(m_states.back(), m_reported1.back(), m_reported2.back());
    }

    std::size_t size() const
    {
        return m_times.size();
    }
    const std::vector<double>& times() const
    {
        return m_times;
    }
    const std::vector<StateVector>& states() const
    {
        return m_states;
    }
    const std::vector<double>& reported(int group) const
    {
        return group == 1 ? m_reported1 : m_reported2;
    }
    double start_time() const
    {
        return m_times.front();
    }
    double end_time() const
    {
        return m_times.back();
    }
    const StateVector& final_state() const
    {
        return m_states.back();
    }

    static AugmentedState augment(const StateVector& s, double c1, double c2)
    {
        AugmentedState y{};
        std::copy(s.values.begin(), s.values.end(), y.begin());
        y[num_compartments] = c1;
        y[num_compartments + 1] = c2;
        return y;
    }

private:
    friend Trajectory integrate_segment(Trajectory, const AugmentedState&, double, const ParameterSet&, double,
                                        const SolverConfig&, double);
    friend Trajectory continue_trajectory(const Trajectory&, const ParameterSet&, double, const SolverConfig&);

    std::vector<double> m_times;
    std::vector<StateVector> m_states;
    std::vector<double> m_reported1;
    std::vector<double> m_reported2;
    // unclamped end state and step size, so that continuing a trajectory is
    // bit-identical to integrating in one go
    AugmentedState m_resume{};
    double m_step_hint = 0.0;
};

namespace detail
{

inline StateVector clamp_output(const AugmentedState& y, double t)
{
    StateVector s;
    std::copy(y.begin(), y.begin() + num_compartments, s.values.begin());
    const double total1 = std::max(s.group1_total(), 0.0);
    const double total2 = std::max(s.group2_total(), 0.0);
    for (std::size_t i = 0; i < num_compartments; ++i) {
        const double total = i < num_group1_compartments ? total1 : total2;
        if (s.values[i] < -1e-6 * total) {
            throw IntegrationError(ErrorCode::instability, t,
                                   "compartment " + std::string(compartment_names[i]) + " went negative");
        }
        s.values[i] = std::max(s.values[i], 0.0);
    }
    return s;
}

inline void check_excursion(const AugmentedState& y, double t)
{
    double total1 = 0.0, total2 = 0.0;
    for (std::size_t i = 0; i < num_compartments; ++i) {
        (i < num_group1_compartments ? total1 : total2) += y[i];
    }
    for (std::size_t i = 0; i < num_compartments; ++i) {
        const double total = i < num_group1_compartments ? total1 : total2;
        if (y[i] < -1e-6 * std::max(total, 0.0)) {
            throw IntegrationError(ErrorCode::instability, t,
                                   "compartment " + std::string(compartment_names[i]) + " went negative");
        }
    }
}

inline auto augmented_system(const ParameterSet& params)
{
    return [&params](const AugmentedState& y) {
        StateVector s;
        std::copy(y.begin(), y.begin() + num_compartments, s.values.begin());
        const auto d = rhs(s, params);
        const auto inflow = reported_inflow(s, params);
        AugmentedState out;
        std::copy(d.values.begin(), d.values.end(), out.begin());
        out[num_compartments] = inflow[0];
        out[num_compartments + 1] = inflow[1];
        return out;
    };
}

} // namespace detail

/// Appends output points t0 + k * spacing (k = 1..) up to t0 + horizon.
inline Trajectory integrate_segment(Trajectory traj, const AugmentedState& start, double t0, const ParameterSet& params,
                                    double horizon, const SolverConfig& config, double step_hint)
{
    validate(config);
    validate(params);
    if (!(horizon > 0.0)) {
        throw Error(ErrorCode::invalid_parameter, "horizon must be positive");
    }
    const double ratio = horizon / config.output_spacing;
    const auto intervals = static_cast<std::size_t>(std::llround(ratio));
    if (intervals == 0 || std::abs(ratio - static_cast<double>(intervals)) > 1e-9 * std::max(1.0, ratio)) {
        throw Error(ErrorCode::invalid_parameter, "output spacing must divide the horizon");
    }

    auto system = detail::augmented_system(params);
    AugmentedState y = start;
    double t = t0;
    for (std::size_t k = 1; k <= intervals; ++k) {
        const double t_out = k == intervals ? t0 + horizon : t0 + static_cast<double>(k) * config.output_spacing;
        advance<num_compartments + 2>(system, y, t, t_out, config, step_hint, [](double ts, const AugmentedState& ys) {
            detail::check_excursion(ys, ts);
        });
        traj.m_times.push_back(t_out);
        traj.m_states.push_back(detail::clamp_output(y, t_out));
        traj.m_reported1.push_back(std::max(y[num_compartments], traj.m_reported1.back()));
        traj.m_reported2.push_back(std::max(y[num_compartments + 1], traj.m_reported2.back()));
    }
    traj.m_resume = y;
    traj.m_step_hint = step_hint;
    return traj;
}

/// Solves the model plus the reported-inflow counters C1, C2 (starting at 0)
/// over [t0, t0 + horizon].
inline Trajectory integrate(const StateVector& initial, const ParameterSet& params, double horizon,
                            const SolverConfig& config = {}, double t0 = 0.0)
{
    validate(initial);
    Trajectory traj({t0}, {initial}, {0.0}, {0.0});
    return integrate_segment(std::move(traj), Trajectory::augment(initial, 0.0, 0.0), t0, params, horizon, config,
                             0.0);
}

/// Extends `base` by `horizon` days under (possibly different) parameters.
inline Trajectory continue_trajectory(const Trajectory& base, const ParameterSet& params, double horizon,
                                      const SolverConfig& config = {})
{
    return integrate_segment(base, base.m_resume, base.end_time(), params, horizon, config, base.m_step_hint);
}

/// Reported cases per calendar day. Entry i covers [first_day + i, first_day + i + 1).
struct IncidenceSeries {
    int first_day = 0;
    std::vector<double> counts;

    std::size_t size() const
    {
        return counts.size();
    }
    double total() const
    {
        double sum = 0.0;
        for (double c : counts) {
            sum += c;
        }
        return sum;
    }
    bool operator==(const IncidenceSeries&) const = default;
};

inline IncidenceSeries daily_incidence(const Trajectory& traj, int group)
{
    if (group != 1 && group != 2) {
        throw Error(ErrorCode::invalid_parameter, "group must be 1 or 2");
    }
    const auto& times = traj.times();
    const auto& counter = traj.reported(group);
    const double first = std::ceil(times.front() - 1e-9);
    const double last = std::floor(times.back() + 1e-9);

    std::vector<double> at_day;
    std::size_t idx = 0;
    for (double day = first; day <= last; day += 1.0) {
        while (idx < times.size() && times[idx] < day - 1e-9) {
            ++idx;
        }
        if (idx == times.size() || std::abs(times[idx] - day) > 1e-9) {
            throw Error(ErrorCode::grid_mismatch, "trajectory has no output point at day " + std::to_string(day));
        }
        at_day.push_back(counter[idx]);
    }

    IncidenceSeries series;
    series.first_day = static_cast<int>(first);
    for (std::size_t k = 1; k < at_day.size(); ++k) {
        series.counts.push_back(std::max(at_day[k] - at_day[k - 1], 0.0));
    }
    return series;
}

} // namespace agestrat

#endif // AGESTRAT_SOLVER_HPP

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
#ifndef AGESTRAT_SCENARIOS_HPP
#define AGESTRAT_SCENARIOS_HPP

#include "agestrat/error.hpp"
#include "agestrat/model.hpp"
#include "agestrat/parallel.hpp"
#include "agestrat/repro.hpp"
#include "agestrat/solver.hpp"

#include <algorithm>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace agestrat
{

struct WaveDetection {
    bool future_wave = false;
    double peak = 0.0;
    int peak_day = 0; ///< index into the series
    int trough_day = -1; ///< local minimum preceding the new wave, -1 if none
};

/// Flags a new wave: a decline to a local minimum followed by a rise of more
/// than `threshold` times the peak reached before the decline. The reported
/// peak is the maximum after the minimum when flagged, else the overall peak.
inline WaveDetection detect_wave(std::span<const double> series, double threshold = 0.05)
{
    if (series.size() < 3) {
        throw Error(ErrorCode::invalid_parameter, "wave detection needs at least 3 days");
    }
    WaveDetection out;
    double peak = series[0];
    double trough = series[0];
    std::size_t trough_day = 0;
    for (std::size_t t = 1; t < series.size(); ++t) {
        const double x = series[t];
        if (trough < peak && x - trough > threshold * peak) {
            out.future_wave = true;
            out.trough_day = static_cast<int>(trough_day);
            break;
        }
        if (x >= peak) {
            peak = x;
            trough = x;
            trough_day = t;
        }
        else if (x < trough) {
            trough = x;
            trough_day = t;
        }
    }
    const std::size_t from = out.future_wave ? static_cast<std::size_t>(out.trough_day) : 0;
    const auto it = std::max_element(series.begin() + static_cast<std::ptrdiff_t>(from), series.end());
    out.peak = *it;
    out.peak_day = static_cast<int>(it - series.begin());
    return out;
}

enum class GridKind {
    multiplier, ///< grid entries scale the base value
    absolute,
};

/// Sweeps one contact rate: the base parameters drive the fit window, then
/// the swept value applies for `horizon` further days.
struct SweepSpec {
    ParameterSet base;
    StateVector initial;
    std::string parameter = "beta11";
    bool tied = true;
    std::vector<double> grid = {1.0, 2.0, 5.0, 10.0, 20.0};
    GridKind kind = GridKind::multiplier;
    double fit_window = 86.0;
    double horizon = 150.0;
    double wave_threshold = 0.05;
    SolverConfig solver;
};

inline std::vector<std::string> check_sweep(const SweepSpec& spec)
{
    std::vector<std::string> problems;
    if (!is_parameter_name(spec.parameter)) {
        problems.push_back("unknown sweep parameter '" + spec.parameter + "'");
    }
    if (spec.grid.empty()) {
        problems.push_back("sweep grid is empty");
    }
    for (double g : spec.grid) {
        if (!(g >= 0.0) || !std::isfinite(g)) {
            problems.push_back("sweep grid values must be finite and nonnegative");
            break;
        }
    }
    if (!(spec.horizon > 0.0)) {
        problems.push_back("sweep horizon must be positive");
    }
    if (!(spec.fit_window > 0.0)) {
        problems.push_back("fit window must be positive");
    }
    return problems;
}

struct GroupWave {
    double peak = 0.0; ///< maximum daily incidence after the fit window
    int peak_day = 0; ///< absolute day index of that maximum
    double final_cumulative = 0.0;
    bool future_wave = false; ///< new rise after the fit-window peak
};

struct SweepPoint {
    double grid_entry = 0.0;
    double value = 0.0; ///< parameter value actually used
    std::optional<Trajectory> trajectory;
    IncidenceSeries incidence1;
    IncidenceSeries incidence2;
    GroupWave group1;
    GroupWave group2;
    std::string error; ///< nonempty when the integration failed
};

namespace detail
{

inline GroupWave summarize_group(const IncidenceSeries& series, const Trajectory& traj, int group,
                                 std::size_t projection_start, double threshold)
{
    GroupWave w;
    const auto& c = series.counts;
    if (projection_start < c.size()) {
        const auto it = std::max_element(c.begin() + static_cast<std::ptrdiff_t>(projection_start), c.end());
        w.peak = *it;
        w.peak_day = series.first_day + static_cast<int>(it - c.begin());
    }
    w.final_cumulative = traj.reported(group).back() - traj.reported(group).front();
    // Start from the peak of the fit window so the early transient is not
    // mistaken for a second wave.
    const auto fit_end = std::min(projection_start, c.size());
    const auto from = fit_end > 0 ? static_cast<std::size_t>(
                                        std::max_element(c.begin(), c.begin() + static_cast<std::ptrdiff_t>(fit_end)) -
                                        c.begin())
                                  : 0;
    if (c.size() - from >= 3) {
        w.future_wave = detect_wave(std::span<const double>(c).subspan(from), threshold).future_wave;
    }
    return w;
}

} // namespace detail

/// Simulates the fit window under `fit_params` and continues under `future_params`.
inline Trajectory project(const StateVector& initial, const ParameterSet& fit_params,
                          const ParameterSet& future_params, double fit_window, double horizon,
                          const SolverConfig& solver = {})
{
    const auto fitted = integrate(initial, fit_params, fit_window, solver);
    return continue_trajectory(fitted, future_params, horizon, solver);
}

inline std::vector<SweepPoint> run_sweep(const SweepSpec& spec, std::size_t workers = 1)
{
    auto problems = check_sweep(spec);
    if (!problems.empty()) {
        std::string message = "invalid sweep:";
        for (const auto& p : problems) {
            message += " " + p + ";";
        }
        throw Error(ErrorCode::invalid_parameter, message);
    }
    const auto fitted = integrate(spec.initial, spec.base, spec.fit_window, spec.solver);
    const double base_value = get_parameter(spec.base, spec.parameter);
    const auto projection_start = static_cast<std::size_t>(std::llround(spec.fit_window));

    std::vector<SweepPoint> points(spec.grid.size());
    parallel_for(points.size(), workers, [&](std::size_t i) {
        SweepPoint& pt = points[i];
        pt.grid_entry = spec.grid[i];
        pt.value = spec.kind == GridKind::multiplier ? spec.grid[i] * base_value : spec.grid[i];
        ParameterSet future = spec.base;
        set_parameter(future, spec.parameter, pt.value, spec.tied);
        try {
            auto traj = continue_trajectory(fitted, future, spec.horizon, spec.solver);
            pt.incidence1 = daily_incidence(traj, 1);
            pt.incidence2 = daily_incidence(traj, 2);
            pt.group1 = detail::summarize_group(pt.incidence1, traj, 1, projection_start, spec.wave_threshold);
            pt.group2 = detail::summarize_group(pt.incidence2, traj, 2, projection_start, spec.wave_threshold);
            pt.trajectory = std::move(traj);
        }
        catch (const Error& e) {
            pt.error = e.what();
        }
    });
    return points;
}

/// Multiplier of `parameter` at which R_t at the end of the fit window
/// reaches `target`, by bisection on [lo, hi]. Empty when R_t does not cross
/// the target on the bracket (e.g. rates that vanish from R_0).
inline std::optional<double> threshold_multiplier(const SweepSpec& spec, double lo, double hi, double target = 1.0,
                                                  double tolerance = 1e-8,
                                                  SusceptibleConvention convention = SusceptibleConvention::unvaccinated)
{
    const auto fitted = integrate(spec.initial, spec.base, spec.fit_window, spec.solver);
    const double ratio = susceptible_total(fitted.final_state(), convention) /
                         susceptible_total(fitted.states().front(), convention);
    const double base_value = get_parameter(spec.base, spec.parameter);
    auto rt_minus_target = [&](double m) {
        ParameterSet p = spec.base;
        set_parameter(p, spec.parameter, m * base_value, spec.tied);
        return ratio * r0_closed_form(p) - target;
    };
    double f_lo = rt_minus_target(lo);
    const double f_hi = rt_minus_target(hi);
    if (f_lo == 0.0) {
        return lo;
    }
    if (f_lo * f_hi > 0.0) {
        return std::nullopt;
    }
    while (hi - lo > tolerance * std::max(1.0, hi)) {
        const double mid = 0.5 * (lo + hi);
        const double f_mid = rt_minus_target(mid);
        if ((f_mid < 0.0) == (f_lo < 0.0)) {
            lo = mid;
            f_lo = f_mid;
        }
        else {
            hi = mid;
        }
    }
    return 0.5 * (lo + hi);
}

} // namespace agestrat

#endif // AGESTRAT_SCENARIOS_HPP

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
#ifndef AGESTRAT_CLI_HPP
#define AGESTRAT_CLI_HPP

#include "agestrat/config.hpp"
#include "agestrat/error.hpp"
#include "agestrat/inference.hpp"
#include "agestrat/io.hpp"
#include "agestrat/repro.hpp"
#include "agestrat/scenarios.hpp"
#include "agestrat/sensitivity.hpp"
#include "agestrat/solver.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>

namespace agestrat
{

inline constexpr std::array<std::string_view, 7> subcommands = {"simulate", "fit", "r0", "rt",
                                                                "sweep", "sensitivity", "report"};

namespace detail
{

inline std::ofstream open_output(const std::filesystem::path& dir, const std::string& name)
{
    std::ofstream out(dir / name);
    if (!out) {
        throw Error(ErrorCode::config_error, "cannot write '" + (dir / name).string() + "'");
    }
    return out;
}

inline CaseData load_cases(const RunConfig& cfg)
{
    if (!cfg.cases_path) {
        throw Error(ErrorCode::config_error, "this subcommand needs data.cases");
    }
    return ingest_cases(*cfg.cases_path, cfg.start_date, cfg.fit_window);
}

inline std::size_t peak_index(const IncidenceSeries& s)
{
    return static_cast<std::size_t>(std::max_element(s.counts.begin(), s.counts.end()) - s.counts.begin());
}

inline void run_simulate(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& out)
{
    const auto traj = integrate(cfg.initial, cfg.params, cfg.simulate_horizon, cfg.solver);
    const auto inc1 = daily_incidence(traj, 1);
    const auto inc2 = daily_incidence(traj, 2);
    {
        auto f = open_output(dir, "trajectory.csv");
        write_trajectory(f, traj);
    }
    {
        auto f = open_output(dir, "incidence.csv");
        write_incidence(f, inc1, inc2, cfg.start_date);
    }
    const auto p1 = peak_index(inc1), p2 = peak_index(inc2);
    out << "group1_peak_day=" << inc1.first_day + static_cast<int>(p1) << " group1_peak=" << format_double(inc1.counts[p1])
        << '\n';
    out << "group2_peak_day=" << inc2.first_day + static_cast<int>(p2) << " group2_peak=" << format_double(inc2.counts[p2])
        << '\n';
}

/// Geweke scores of the post-burn-in samples; all empty when the retained
/// chain is too short for the two windows.
inline std::vector<std::optional<double>> retained_geweke(const Chain& chain, const RunConfig& cfg, std::ostream& out)
{
    const auto retained = chain.tail(cfg.fit.burn_in);
    try {
        return geweke(retained, cfg.fit.geweke_first, cfg.fit.geweke_last);
    }
    catch (const Error& e) {
        if (e.code() != ErrorCode::invalid_parameter) {
            throw;
        }
        out << "note: Geweke diagnostic skipped: " << e.what() << '\n';
        return std::vector<std::optional<double>>(chain.dimension());
    }
}

inline void run_fit(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& out)
{
    const auto data = load_cases(cfg);
    {
        auto f = open_output(dir, "data_quality.csv");
        write_quality_report(f, data.quality);
    }
    AdaptiveMhOptions options;
    options.adaptation_start = cfg.fit.adaptation_start;
    const auto chain =
        run_adaptive_mh(cfg.fit_spec(), data.group1, data.group2, cfg.fit.iterations, cfg.fit.burn_in, cfg.fit.seed,
                        options);
    {
        auto f = open_output(dir, "chain.csv");
        write_chain(f, chain);
    }
    const auto z = retained_geweke(chain, cfg, out);
    {
        auto f = open_output(dir, "geweke.csv");
        f << "quantity,z\n";
        for (std::size_t j = 0; j < z.size(); ++j) {
            f << chain.names[j] << ',' << (z[j] ? format_double(*z[j]) : std::string("NA")) << '\n';
        }
    }
    const auto summary = summarize(chain, cfg.fit.burn_in);
    {
        auto f = open_output(dir, "posterior_summary.csv");
        f << "quantity,mean,sd,lower95,upper95\n";
        for (const auto& s : summary) {
            f << s.name << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ','
              << format_double(s.lower95) << ',' << format_double(s.upper95) << '\n';
        }
    }
    out << "iterations=" << chain.size() << " burn_in=" << cfg.fit.burn_in
        << " acceptance=" << format_double(chain.acceptance_rate()) << '\n';
    for (const auto& s : summary) {
        out << s.name << " mean=" << format_double(s.mean) << " lower95=" << format_double(s.lower95)
            << " upper95=" << format_double(s.upper95) << '\n';
    }
}

inline void run_r0(const RunConfig& cfg, std::ostream& out)
{
    out << "r0_closed_form=" << format_double(r0_closed_form(cfg.params)) << '\n';
    out << "r0_spectral_radius=" << format_double(ngm_spectral_radius(cfg.params)) << '\n';
}

inline void run_rt(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& out)
{
    const auto traj = integrate(cfg.initial, cfg.params, cfg.fit_window, cfg.solver);
    const auto a = rt_curve(cfg.params, traj, SusceptibleConvention::unvaccinated);
    const auto b = rt_curve(cfg.params, traj, SusceptibleConvention::with_vaccinated);
    {
        auto f = open_output(dir, "rt_curve.csv");
        f << "time,rt_unvaccinated,rt_with_vaccinated\n";
        for (std::size_t i = 0; i < a.size(); ++i) {
            f << format_double(a[i].time) << ',' << format_double(a[i].rt) << ',' << format_double(b[i].rt) << '\n';
        }
    }
    out << "r0=" << format_double(r0_closed_form(cfg.params)) << '\n';
    out << "rt_unvaccinated=" << format_double(a.back().rt) << '\n';
    out << "rt_with_vaccinated=" << format_double(b.back().rt) << '\n';
    out << "rt_time=" << format_double(a.back().time) << '\n';
}

inline void run_sweep_command(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& out)
{
    const auto spec = cfg.sweep_spec();
    const auto points = run_sweep(spec, cfg.workers);
    auto summary = open_output(dir, "sweep_summary.csv");
    summary << "grid_entry,value,group1_peak,group1_peak_day,group1_future_wave,group2_peak,group2_peak_day,"
               "group2_future_wave,group1_cumulative,group2_cumulative,error\n";
    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto& pt = points[i];
        if (pt.error.empty()) {
            auto f = open_output(dir, "sweep_" + spec.parameter + "_" + std::to_string(i) + ".csv");
            write_incidence(f, pt.incidence1, pt.incidence2, cfg.start_date);
        }
        summary << format_double(pt.grid_entry) << ',' << format_double(pt.value) << ','
                << format_double(pt.group1.peak) << ',' << pt.group1.peak_day << ',' << pt.group1.future_wave << ','
                << format_double(pt.group2.peak) << ',' << pt.group2.peak_day << ',' << pt.group2.future_wave << ','
                << format_double(pt.group1.final_cumulative) << ',' << format_double(pt.group2.final_cumulative)
                << ',' << '"' << pt.error << '"' << '\n';
        out << spec.parameter << " x" << format_double(pt.grid_entry) << ": group1_peak=" << format_double(pt.group1.peak)
            << " group2_peak=" << format_double(pt.group2.peak) << " group2_future_wave=" << pt.group2.future_wave
            << (pt.error.empty() ? "" : " error=" + pt.error) << '\n';
    }
    nlohmann::json meta = {
        {"parameter", spec.parameter},
        {"tied", spec.tied},
        {"grid", spec.grid},
        {"kind", spec.kind == GridKind::multiplier ? "multiplier" : "absolute"},
        {"fit_window_days", spec.fit_window},
        {"horizon_days", spec.horizon},
        {"wave_threshold", spec.wave_threshold},
        {"notes",
         {"the default grid {1,2,5,10,20} and the 150-day projection horizon are artifact choices",
          "the base parameters drive the fit window; the swept value applies afterwards",
          "peaks are measured over the projection window"}},
    };
    auto f = open_output(dir, "sweep_metadata.json");
    f << meta.dump(2) << '\n';
}

inline void run_sensitivity_command(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& out)
{
    SensitivityOptions options;
    options.horizon = cfg.sensitivity_horizon;
    options.solver = cfg.solver;
    options.workers = cfg.workers;
    const auto result = run_sensitivity(cfg.plan, cfg.params, cfg.initial, options);
    {
        auto f = open_output(dir, "sensitivity_samples.csv");
        for (const auto& l : result.labels) {
            f << l << ',';
        }
        f << "group1,group2,total\n";
        for (Eigen::Index i = 0; i < result.design.rows(); ++i) {
            for (Eigen::Index j = 0; j < result.design.cols(); ++j) {
                f << format_double(result.design(i, j)) << ',';
            }
            f << format_double(result.outcomes(i, 0)) << ',' << format_double(result.outcomes(i, 1)) << ','
              << format_double(result.outcomes(i, 2)) << '\n';
        }
    }
    auto f = open_output(dir, "prcc.csv");
    f << "parameter,outcome,coefficient\n";
    for (std::size_t j = 0; j < result.labels.size(); ++j) {
        for (std::size_t k = 0; k < outcome_names.size(); ++k) {
            const double c = result.coefficients(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k));
            f << result.labels[j] << ',' << outcome_names[k] << ',' << format_double(c) << '\n';
        }
        out << result.labels[j] << " prcc_total="
            << format_double(result.coefficients(static_cast<Eigen::Index>(j), 2)) << '\n';
    }
    out << "samples=" << result.design.rows() << " failed=" << result.failed_samples.size()
        << " null_threshold=" << format_double(result.null_threshold) << '\n';
}

inline void run_report(const RunConfig& cfg, const std::filesystem::path& dir, std::ostream& out)
{
    std::ostringstream text;
    text << "agestrat run report\n\n";
    text << "start date: " << format_date(cfg.start_date) << ", fit window: " << cfg.fit_window << " days\n";
    text << "R0 (closed form): " << format_double(r0_closed_form(cfg.params)) << '\n';
    text << "R0 (spectral radius): " << format_double(ngm_spectral_radius(cfg.params)) << '\n';

    const auto traj = integrate(cfg.initial, cfg.params, cfg.fit_window, cfg.solver);
    const auto a = rt_curve(cfg.params, traj, SusceptibleConvention::unvaccinated);
    const auto b = rt_curve(cfg.params, traj, SusceptibleConvention::with_vaccinated);
    text << "Rt at day " << format_double(a.back().time) << " with S1+S2: " << format_double(a.back().rt) << '\n';
    text << "Rt at day " << format_double(b.back().time) << " with S1+S2+V: " << format_double(b.back().rt) << '\n';

    const auto inc1 = daily_incidence(traj, 1);
    const auto inc2 = daily_incidence(traj, 2);
    const auto p1 = peak_index(inc1), p2 = peak_index(inc2);
    text << "older group peak: day " << inc1.first_day + static_cast<int>(p1) << " ("
         << format_date(date_of_day(cfg.start_date, inc1.first_day + static_cast<int>(p1))) << "), "
         << format_double(inc1.counts[p1]) << " cases/day\n";
    text << "younger group peak: day " << inc2.first_day + static_cast<int>(p2) << " ("
         << format_date(date_of_day(cfg.start_date, inc2.first_day + static_cast<int>(p2))) << "), "
         << format_double(inc2.counts[p2]) << " cases/day\n";
    text << "modelled reported cases over the window: older " << format_double(inc1.total()) << ", younger "
         << format_double(inc2.total()) << '\n';

    if (cfg.cases_path) {
        const auto data = load_cases(cfg);
        text << "\nobserved cases: older " << format_double(data.group1.total()) << ", younger "
             << format_double(data.group2.total()) << '\n';
        text << "missing days: older " << data.quality.missing_group1.size() << ", younger "
             << data.quality.missing_group2.size() << "; duplicate rows " << data.quality.duplicate_rows
             << "; rows outside window " << data.quality.rows_outside_window << '\n';
    }

    const auto chain_path = dir / "chain.csv";
    if (std::filesystem::exists(chain_path)) {
        std::ifstream in(chain_path);
        const auto chain = read_chain(in);
        if (chain.size() > cfg.fit.burn_in) {
            text << "\nposterior (" << chain.size() - cfg.fit.burn_in << " retained samples, acceptance "
                 << format_double(chain.acceptance_rate()) << "):\n";
            std::ostringstream ignored;
            const auto z = retained_geweke(chain, cfg, ignored);
            const auto summary = summarize(chain, cfg.fit.burn_in);
            for (std::size_t j = 0; j < summary.size(); ++j) {
                const auto& s = summary[j];
                text << "  " << s.name << ": mean " << format_double(s.mean) << ", 95% interval ["
                     << format_double(s.lower95) << ", " << format_double(s.upper95) << "], Geweke z "
                     << (z[j] ? format_double(*z[j]) : std::string("undefined")) << '\n';
            }
        }
    }

    auto f = open_output(dir, "report.txt");
    f << text.str();
    out << text.str();
}

/// One line, so the error stays machine-readable.
inline std::string single_line(std::string s)
{
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        if (s[i] == '\n') {
            while (i + 1 < s.size() && s[i + 1] == ' ') {
                ++i;
            }
            out += ' ';
        }
        else {
            out += s[i];
        }
    }
    return out;
}

} // namespace detail

/// Prints `error: code=<code> message=<text>` on one line.
inline void print_error(std::ostream& err, ErrorCode code, const std::string& message)
{
    err << "error: code=" << to_string(code) << " message=" << detail::single_line(message) << '\n';
}

/// Runs one subcommand, writing outputs under cfg.output_dir. Returns the
/// process exit status.
inline int dispatch(std::string_view subcommand, const RunConfig& cfg, std::ostream& out, std::ostream& err)
{
    try {
        if (std::find(subcommands.begin(), subcommands.end(), subcommand) == subcommands.end()) {
            throw Error(ErrorCode::config_error, "unknown subcommand '" + std::string(subcommand) +
                                                     "'; expected simulate, fit, r0, rt, sweep, sensitivity or report");
        }
        const std::filesystem::path dir(cfg.output_dir);
        std::filesystem::create_directories(dir);
        {
            auto f = detail::open_output(dir, "resolved_config.json");
            f << to_json(cfg).dump(2) << '\n';
        }
        if (subcommand == "simulate") {
            detail::run_simulate(cfg, dir, out);
        }
        else if (subcommand == "fit") {
            detail::run_fit(cfg, dir, out);
        }
        else if (subcommand == "r0") {
            detail::run_r0(cfg, out);
        }
        else if (subcommand == "rt") {
            detail::run_rt(cfg, dir, out);
        }
        else if (subcommand == "sweep") {
            detail::run_sweep_command(cfg, dir, out);
        }
        else if (subcommand == "sensitivity") {
            detail::run_sensitivity_command(cfg, dir, out);
        }
        else {
            detail::run_report(cfg, dir, out);
        }
        return 0;
    }
    catch (const Error& e) {
        print_error(err, e.code(), e.what());
    }
    catch (const std::filesystem::filesystem_error& e) {
        print_error(err, ErrorCode::config_error, e.what());
    }
    return 1;
}

} // namespace agestrat

#endif // AGESTRAT_CLI_HPP

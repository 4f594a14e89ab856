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
// Acceptance suite. Run with a criterion number (1-9) or no argument for all;
// prints one PASS/FAIL line per criterion and exits nonzero on any failure.
// Set AGESTRAT_PRCC_SAMPLES=500 for the reduced sensitivity run.

#include "agestrat/inference.hpp"
#include "agestrat/repro.hpp"
#include "agestrat/scenarios.hpp"
#include "agestrat/sensitivity.hpp"
#include "agestrat/solver.hpp"
#include "synthetic.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>

using namespace agestrat;

namespace
{

struct Outcome {
    bool pass = false;
    std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(double v, int digits = 6)
{
    std::ostringstream s;
    s.precision(digits);
    s << v;
    return s.str();
}

constexpr int fit_window = 86;

// ---------------------------------------------------------------------------

Outcome conservation()
{
    const auto start = Clock::now();
    const auto initial = ontario_initial_state();
    const auto traj = integrate(initial, ontario_parameters(), fit_window);
    const double elapsed = seconds_since(start);
    double worst = 0.0;
    for (const auto& s : traj.states()) {
        worst = std::max(worst, std::abs(s.group1_total() - initial.group1_total()) / initial.group1_total());
        worst = std::max(worst, std::abs(s.group2_total() - initial.group2_total()) / initial.group2_total());
    }
    return {worst <= 1e-9 && elapsed < 1.0,
            "max relative drift " + fmt(worst, 3) + " over " + std::to_string(traj.size()) + " output days, " +
                fmt(elapsed, 3) + " s"};
}

ParameterSet random_parameters(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> log_beta(-10.0, -6.5), rate(0.02, 1.0), unit(0.0, 1.0);
    ParameterSet p = ontario_parameters();
    for (const auto& f : parameter_fields) {
        const std::string_view n = f.name;
        if (n.substr(0, 4) == "beta") {
            p.*(f.member) = std::pow(10.0, log_beta(rng));
        }
        else if (n != "n1" && n != "n2" && n != "epsilon" && n != "rho1" && n != "rho2") {
            p.*(f.member) = rate(rng);
        }
    }
    p.epsilon = unit(rng);
    p.rho1 = 0.5 * unit(rng);
    p.rho2 = 0.5 * unit(rng);
    p.n1 = 1e5 + 2e7 * unit(rng);
    p.n2 = 1e5 + 2e7 * unit(rng);
    return p;
}

Outcome r0_agreement()
{
    const auto start = Clock::now();
    std::mt19937_64 rng(20211025);
    double worst = 0.0;
    double largest = 0.0;
    for (int i = 0; i < 1000; ++i) {
        const auto p = random_parameters(rng);
        const double closed = r0_closed_form(p);
        const double radius = ngm_spectral_radius(p);
        worst = std::max(worst, std::abs(closed - radius) / std::max(1.0, radius));
        largest = std::max(largest, radius);
    }
    const double elapsed = seconds_since(start);
    return {worst <= 1e-8 && elapsed < 10.0, "1000 parameter sets (R0 up to " + fmt(largest, 4) +
                                                 "), max relative gap " + fmt(worst, 3) + ", " + fmt(elapsed, 3) +
                                                 " s"};
}

Outcome rt_reproduction()
{
    const double target = 0.31727;
    const auto p = ontario_parameters();
    const auto traj = integrate(ontario_initial_state(), p, fit_window);
    // day 85 is Oct 25, the last day of the fit window
    const auto last_day = static_cast<std::size_t>(fit_window - 1);
    const auto unvaccinated = rt_curve(p, traj, SusceptibleConvention::unvaccinated);
    const auto with_vaccinated = rt_curve(p, traj, SusceptibleConvention::with_vaccinated);
    const double a = unvaccinated[last_day].rt, b = with_vaccinated[last_day].rt;
    bool below_one = true;
    for (std::size_t i = 0; i < unvaccinated.size(); ++i) {
        below_one = below_one && unvaccinated[i].rt < 1.0 && with_vaccinated[i].rt < 1.0;
    }
    const bool match_a = std::abs(a - target) <= 0.05, match_b = std::abs(b - target) <= 0.05;
    std::string which = match_a && match_b ? "both" : match_a ? "S1+S2" : match_b ? "S1+S2+V" : "neither";
    std::string detail = "R0 " + fmt(r0_closed_form(p)) + "; Rt(day 85) with S1+S2 = " + fmt(a) + ", with S1+S2+V = " +
                         fmt(b) + "; target 0.31727 +/- 0.05 matched by " + which +
                         (below_one ? "; Rt < 1 throughout the window" : "; Rt reaches 1 in the window");
    if (!match_a && !match_b) {
        detail += "\n  Rt curve (day, S1+S2, S1+S2+V):";
        for (std::size_t i = 0; i < unvaccinated.size(); ++i) {
            detail += "\n  " + fmt(unvaccinated[i].time) + ", " + fmt(unvaccinated[i].rt) + ", " +
                      fmt(with_vaccinated[i].rt);
        }
    }
    return {(match_a || match_b) && below_one, detail};
}

struct DieOut {
    bool monotone = true;
    double last_value = 0.0;
    int peak_day = 0;
    int first_below_one = -1;
};

DieOut die_out(const IncidenceSeries& inc, int check_day)
{
    DieOut d;
    const auto peak = std::max_element(inc.counts.begin(), inc.counts.end()) - inc.counts.begin();
    d.peak_day = static_cast<int>(peak);
    for (auto i = static_cast<std::size_t>(peak) + 1; i < inc.counts.size(); ++i) {
        d.monotone = d.monotone && inc.counts[i] <= inc.counts[i - 1];
    }
    for (std::size_t i = 0; i < inc.counts.size(); ++i) {
        if (static_cast<int>(i) > d.peak_day && inc.counts[i] < 1.0) {
            d.first_below_one = static_cast<int>(i);
            break;
        }
    }
    d.last_value = inc.counts[static_cast<std::size_t>(check_day) - 1];
    return d;
}

Outcome die_out_prediction()
{
    const auto start = Clock::now();
    const int horizon = 150;
    const auto traj = integrate(ontario_initial_state(), ontario_parameters(), horizon);
    const auto g1 = die_out(daily_incidence(traj, 1), horizon);
    const auto g2 = die_out(daily_incidence(traj, 2), horizon);
    const double elapsed = seconds_since(start);
    const bool pass = g1.monotone && g2.monotone && g1.last_value < 1.0 && g2.last_value < 1.0 && elapsed < 1.0;

    // the alternative reading: 150 days beyond the fit window
    const auto longer = integrate(ontario_initial_state(), ontario_parameters(), fit_window + horizon);
    const auto l1 = die_out(daily_incidence(longer, 1), fit_window + horizon);
    const auto l2 = die_out(daily_incidence(longer, 2), fit_window + horizon);
    auto below = [](int day) { return day < 0 ? std::string("never") : "from day " + std::to_string(day); };
    return {pass, "day 150 incidence older " + fmt(g1.last_value, 4) + ", younger " + fmt(g2.last_value, 4) +
                      "; monotone after peaks (day " + std::to_string(g1.peak_day) + ", " +
                      std::to_string(g2.peak_day) + "): " + (g1.monotone && g2.monotone ? "yes" : "no") +
                      "; below 1/day " + below(g1.first_below_one) + " (older), " + below(g2.first_below_one) +
                      " (younger); over fit window + 150 days: day 236 values " +
                      fmt(l1.last_value, 3) + ", " + fmt(l2.last_value, 3) + "; " + fmt(elapsed, 3) + " s"};
}

Outcome peak_ordering()
{
    const auto traj = integrate(ontario_initial_state(), ontario_parameters(), fit_window);
    const auto a = daily_incidence(traj, 1), b = daily_incidence(traj, 2);
    const auto p1 = std::max_element(a.counts.begin(), a.counts.end()) - a.counts.begin();
    const auto p2 = std::max_element(b.counts.begin(), b.counts.end()) - b.counts.begin();
    return {p2 >= p1, "older peak day " + std::to_string(p1) + " (" + fmt(a.counts[static_cast<std::size_t>(p1)], 5) +
                          "/day), younger peak day " + std::to_string(p2) + " (" +
                          fmt(b.counts[static_cast<std::size_t>(p2)], 5) + "/day)"};
}

Outcome scenarios()
{
    const auto start = Clock::now();
    SweepSpec spec;
    spec.base = ontario_parameters();
    spec.initial = ontario_initial_state();

    // (a)
    spec.parameter = "beta11";
    spec.grid = {1.0, 2.0, 5.0, 10.0, 20.0};
    const auto b11 = run_sweep(spec);
    bool a_ok = true;
    std::string peaks;
    for (std::size_t i = 0; i < b11.size(); ++i) {
        a_ok = a_ok && b11[i].error.empty() && (i == 0 || b11[i].group1.peak >= b11[i - 1].group1.peak);
        peaks += (i ? ", " : "") + fmt(b11[i].group1.peak, 5);
    }

    // (b)
    spec.grid = {10.0};
    const double peak11 = run_sweep(spec)[0].group1.peak;
    spec.parameter = "beta13";
    const double peak13 = run_sweep(spec)[0].group1.peak;
    const bool b_ok = peak13 > peak11;

    // (c) smallest multiplier on the grid giving a younger-group wave
    spec.parameter = "beta21";
    spec.grid = {1.0, 2.0, 5.0, 10.0, 20.0, 50.0, 100.0};
    const auto b21 = run_sweep(spec);
    bool c_ok = false;
    std::string c_detail = "no grid value produced a younger-group wave";
    for (const auto& pt : b21) {
        if (!pt.error.empty() || !pt.group2.future_wave) {
            continue;
        }
        const auto& older = pt.incidence1.counts;
        const auto peak = std::max_element(older.begin(), older.end()) - older.begin();
        bool monotone = true;
        for (auto i = static_cast<std::size_t>(peak) + 1; i < older.size(); ++i) {
            monotone = monotone && older[i] <= older[i - 1];
        }
        c_ok = monotone && !pt.group1.future_wave;
        c_detail = "beta21 x" + fmt(pt.grid_entry) + " gives a younger-group wave (peak " + fmt(pt.group2.peak, 5) +
                   " on day " + std::to_string(pt.group2.peak_day) + "), older group " +
                   (c_ok ? "declines monotonically" : "does not decline monotonically");
        break;
    }
    const double elapsed = seconds_since(start);
    return {a_ok && b_ok && c_ok && elapsed < 10.0,
            std::string("(a) ") + (a_ok ? "pass" : "fail") + ", beta11 x{1,2,5,10,20} older projection peaks " +
                peaks + "; (b) " + (b_ok ? "pass" : "fail") + ", x10 older peak beta13 " + fmt(peak13, 5) +
                " vs beta11 " + fmt(peak11, 5) + "; (c) " + (c_ok ? "pass" : "fail") + ", " + c_detail + "; " +
                fmt(elapsed, 3) + " s"};
}

Outcome prcc_reproduction()
{
    const auto start = Clock::now();
    std::size_t samples = 3000;
    if (const char* env = std::getenv("AGESTRAT_PRCC_SAMPLES")) {
        samples = static_cast<std::size_t>(std::stoul(env));
    }
    SensitivityOptions options;
    options.horizon = fit_window;
    options.workers = std::max(1u, std::thread::hardware_concurrency());
    const auto result = run_sensitivity(ontario_sampling_plan(samples, 1), ontario_parameters(),
                                        ontario_initial_state(), options);
    auto index = [&](const std::string& label) {
        return static_cast<Eigen::Index>(std::find(result.labels.begin(), result.labels.end(), label) -
                                         result.labels.begin());
    };
    const auto omega = index("omega"), tau1 = index("tau1"), tau2 = index("tau2");
    bool negative = true;
    std::string values;
    for (Eigen::Index k = 0; k < 3; ++k) {
        values += std::string(k ? "; " : "") + outcome_names[static_cast<std::size_t>(k)] + ": omega " +
                  fmt(result.coefficients(omega, k), 3) + ", tau1 " + fmt(result.coefficients(tau1, k), 3) +
                  ", tau2 " + fmt(result.coefficients(tau2, k), 3);
        for (auto j : {omega, tau1, tau2}) {
            negative = negative && result.coefficients(j, k) < 0.0;
        }
    }
    const double w = std::abs(result.coefficients(omega, 2)), t1 = std::abs(result.coefficients(tau1, 2)),
                 t2 = std::abs(result.coefficients(tau2, 2));
    const bool ordered = w > t1 && t1 > t2;
    const double elapsed = seconds_since(start);
    return {negative && ordered && elapsed < 300.0,
            "n = " + std::to_string(samples) + " (" + std::to_string(result.failed_samples.size()) + " failed); " +
                values + "; signs " + (negative ? "all negative" : "not all negative") + ", total-outcome order " +
                (ordered ? "holds" : "violated") + "; " + fmt(elapsed, 3) + " s"};
}

Outcome sampler_correctness()
{
    const auto start = Clock::now();
    const auto& names = fixtures::recovery_names();
    const int runs = 20;
    std::vector<int> covered;
    std::vector<std::string> order;
    for (int r = 0; r < runs; ++r) {
        const auto run = fixtures::recovery_run(static_cast<std::uint64_t>(100 + r), 2000);
        const auto summary = summarize(run.chain, 1000);
        if (covered.empty()) {
            covered.assign(summary.size(), 0);
            for (const auto& s : summary) {
                order.push_back(s.name);
            }
        }
        for (std::size_t j = 0; j < summary.size(); ++j) {
            covered[j] += summary[j].lower95 <= run.truth[j] && run.truth[j] <= summary[j].upper95;
        }
    }
    bool coverage_ok = covered.size() == names.size();
    std::string coverage;
    for (std::size_t j = 0; j < covered.size(); ++j) {
        coverage_ok = coverage_ok && covered[j] >= 18;
        coverage += (j ? ", " : "") + order[j] + " " + std::to_string(covered[j]) + "/20";
    }

    std::mt19937_64 rng(1960);
    std::normal_distribution<double> z;
    const int trials = 200;
    int small = 0;
    for (int t = 0; t < trials; ++t) {
        Chain chain;
        chain.names = {"x"};
        for (int i = 0; i < 3000; ++i) {
            chain.samples.push_back({z(rng)});
        }
        const auto score = geweke(chain);
        small += score[0] && std::abs(*score[0]) < 1.96;
    }
    const double geweke_rate = static_cast<double>(small) / trials;
    const bool geweke_ok = geweke_rate >= 0.9;
    return {coverage_ok && geweke_ok, "95% interval coverage over 20 runs: " + coverage + "; Geweke |z| < 1.96 in " +
                                          fmt(100.0 * geweke_rate, 4) + "% of i.i.d. trials; " +
                                          fmt(seconds_since(start), 3) + " s"};
}

Outcome numerical_integration()
{
    const auto initial = ontario_initial_state();
    const auto params = ontario_parameters();
    SolverConfig tight;
    tight.rel_tol = 1e-13;
    tight.abs_tol = 1e-10;
    const auto reference = integrate(initial, params, 20.0, tight).final_state();
    auto error = [&](double step) {
        SolverConfig cfg;
        cfg.method = Method::rk4;
        cfg.step = step;
        const auto s = integrate(initial, params, 20.0, cfg).final_state();
        double m = 0.0;
        for (std::size_t i = 0; i < num_compartments; ++i) {
            m = std::max(m, std::abs(s.values[i] - reference.values[i]));
        }
        return m;
    };
    const double factor = error(0.5) / error(0.25);

    SolverConfig cfg;
    const auto traj = integrate(initial, params, fit_window, cfg);
    double worst = 0.0;
    for (int g : {1, 2}) {
        const double sum = daily_incidence(traj, g).total();
        const double span = traj.reported(g).back() - traj.reported(g).front();
        worst = std::max(worst, std::abs(sum - span) / span);
    }
    const bool pass = factor >= 12.0 && worst <= cfg.rel_tol;
    return {pass, "RK4 error ratio on step halving " + fmt(factor, 4) + "; telescoping relative gap " + fmt(worst, 3) +
                      " (solver rel_tol " + fmt(cfg.rel_tol, 2) + ")"};
}

} // namespace

int main(int argc, char** argv)
{
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"conservation", conservation},
        {"R0 closed form vs spectral radius", r0_agreement},
        {"Rt reproduction", rt_reproduction},
        {"die-out by day 150", die_out_prediction},
        {"peak ordering", peak_ordering},
        {"scenario sweeps", scenarios},
        {"PRCC signs and ordering", prcc_reproduction},
        {"sampler correctness", sampler_correctness},
        {"numerical integration", numerical_integration},
    };
    std::vector<std::size_t> selected;
    if (argc > 1) {
        const int k = std::atoi(argv[1]);
        if (k < 1 || k > static_cast<int>(criteria.size())) {
            std::cerr << "criterion must be 1-" << criteria.size() << '\n';
            return 2;
        }
        selected.push_back(static_cast<std::size_t>(k - 1));
    }
    else {
        for (std::size_t i = 0; i < criteria.size(); ++i) {
            selected.push_back(i);
        }
    }
    bool all = true;
    for (auto i : selected) {
        Outcome o;
        try {
            o = criteria[i].second();
        }
        catch (const std::exception& e) {
            o = {false, std::string("error: ") + e.what()};
        }
        all = all && o.pass;
        std::cout << "criterion " << i + 1 << " [" << criteria[i].first << "]: " << (o.pass ? "PASS" : "FAIL") << " - "
                  << o.detail << std::endl;
    }
    return all ? 0 : 1;
}

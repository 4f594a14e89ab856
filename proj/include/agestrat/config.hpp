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
#ifndef AGESTRAT_CONFIG_HPP
#define AGESTRAT_CONFIG_HPP

#include "agestrat/error.hpp"
#include "agestrat/inference.hpp"
#include "agestrat/io.hpp"
#include "agestrat/model.hpp"
#include "agestrat/scenarios.hpp"
#include "agestrat/sensitivity.hpp"
#include "agestrat/solver.hpp"

#include "json.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace agestrat
{

struct FitSettings {
    std::size_t iterations = 10000;
    std::size_t burn_in = 7000;
    std::uint64_t seed = 1;
    std::size_t adaptation_start = 500;
    bool pin_exposed = false;
    std::vector<FreeQuantity> free = ontario_free_quantities();
    LikelihoodConfig likelihood;
    double geweke_first = 0.1;
    double geweke_last = 0.5;
};

struct SweepSettings {
    std::string parameter = "beta11";
    std::vector<double> grid = {1.0, 2.0, 5.0, 10.0, 20.0};
    GridKind kind = GridKind::multiplier;
    double horizon = 150.0;
    double wave_threshold = 0.05;
};

/// Everything a subcommand needs; every field has a default.
struct RunConfig {
    ParameterSet params = ontario_parameters();
    StateVector initial = ontario_initial_state();
    bool tie_contact_rates = true;
    Date start_date = Date{std::chrono::year{2021} / 8 / 1};
    int fit_window = 86;
    SolverConfig solver;
    std::optional<std::string> cases_path;
    double simulate_horizon = 86.0;
    FitSettings fit;
    SamplingPlan plan = ontario_sampling_plan();
    double sensitivity_horizon = 86.0;
    SweepSettings sweep;
    std::string output_dir = "out";
    std::size_t workers = 1;

    FitSpec fit_spec() const
    {
        FitSpec spec;
        spec.params = params;
        spec.initial = initial;
        spec.free = fit.free;
        spec.tie_contact_rates = tie_contact_rates;
        spec.likelihood = fit.likelihood;
        spec.solver = solver;
        return spec;
    }

    SweepSpec sweep_spec() const
    {
        SweepSpec spec;
        spec.base = params;
        spec.initial = initial;
        spec.parameter = sweep.parameter;
        spec.tied = tie_contact_rates;
        spec.grid = sweep.grid;
        spec.kind = sweep.kind;
        spec.fit_window = fit_window;
        spec.horizon = sweep.horizon;
        spec.wave_threshold = sweep.wave_threshold;
        spec.solver = solver;
        return spec;
    }
};

namespace detail
{

using json = nlohmann::json;

/// Collects every problem found while reading a config document.
class ConfigReader
{
public:
    explicit ConfigReader(std::filesystem::path base_dir)
        : m_base_dir(std::move(base_dir))
    {
    }

    std::vector<std::string> problems;

    bool expect_object(const json& j, const std::string& where)
    {
        if (!j.is_object()) {
            problems.push_back(where + " must be an object");
            return false;
        }
        return true;
    }

    void reject_unknown(const json& j, const std::string& where, const std::set<std::string>& allowed)
    {
        for (const auto& [key, _] : j.items()) {
            if (!allowed.count(key)) {
                problems.push_back("unknown key '" + where + key + "'");
            }
        }
    }

    template <class T>
    void read(const json& j, const char* key, T& out, const std::string& where)
    {
        if (!j.contains(key)) {
            return;
        }
        try {
            out = j.at(key).get<T>();
        }
        catch (const json::exception&) {
            problems.push_back("'" + where + key + "' has the wrong type");
        }
    }

    std::filesystem::path resolve(const std::string& path) const
    {
        std::filesystem::path p(path);
        return p.is_absolute() ? p : m_base_dir / p;
    }

private:
    std::filesystem::path m_base_dir;
};

inline Method parse_method(const std::string& s, ConfigReader& r)
{
    if (s == "rk4") {
        return Method::rk4;
    }
    if (s != "dopri45") {
        r.problems.push_back("solver.method must be 'rk4' or 'dopri45', got '" + s + "'");
    }
    return Method::dopri45;
}

} // namespace detail

/// Parses a JSON run configuration. Unknown keys and invalid values are all
/// reported together in one config_error.
inline RunConfig parse_config(const nlohmann::json& doc, const std::filesystem::path& base_dir = ".")
{
    RunConfig cfg;
    detail::ConfigReader r(base_dir);
    if (!r.expect_object(doc, "config")) {
        throw Error(ErrorCode::config_error, "config must be a JSON object");
    }
    r.reject_unknown(doc, "",
                     {"parameters", "initial_state", "tie_contact_rates", "start_date", "fit_window_days", "solver",
                      "data", "simulate", "fit", "sensitivity", "sweep", "output_dir", "workers"});

    r.read(doc, "tie_contact_rates", cfg.tie_contact_rates, "");
    r.read(doc, "fit_window_days", cfg.fit_window, "");
    r.read(doc, "output_dir", cfg.output_dir, "");
    r.read(doc, "workers", cfg.workers, "");
    cfg.simulate_horizon = cfg.fit_window;
    cfg.sensitivity_horizon = cfg.fit_window;
    if (cfg.fit_window <= 0) {
        r.problems.push_back("fit_window_days must be positive");
    }
    if (doc.contains("start_date")) {
        std::string text;
        r.read(doc, "start_date", text, "");
        if (auto d = parse_iso_date(text)) {
            cfg.start_date = *d;
        }
        else {
            r.problems.push_back("start_date must be an ISO-8601 date");
        }
    }

    if (doc.contains("parameters") && r.expect_object(doc["parameters"], "parameters")) {
        const auto& params = doc["parameters"];
        for (const auto& [key, value] : params.items()) {
            if (!is_parameter_name(key)) {
                r.problems.push_back("unknown key 'parameters." + key + "'");
                continue;
            }
            if (!value.is_number()) {
                r.problems.push_back("'parameters." + key + "' must be a number");
                continue;
            }
            const double v = value.get<double>();
            const auto partner = tied_partner(key);
            const bool partner_given = partner && params.contains(std::string(*partner));
            if (cfg.tie_contact_rates && partner_given && params[std::string(*partner)].is_number() &&
                params[std::string(*partner)].get<double>() != v) {
                r.problems.push_back("tied parameters '" + key + "' and '" + std::string(*partner) + "' differ");
            }
            set_parameter(cfg.params, key, v, cfg.tie_contact_rates && !partner_given);
        }
        for (const auto& p : check_parameters(cfg.params)) {
            r.problems.push_back("parameters: " + p);
        }
    }

    if (doc.contains("initial_state") && r.expect_object(doc["initial_state"], "initial_state")) {
        for (const auto& [key, value] : doc["initial_state"].items()) {
            auto c = compartment_from_name(key);
            if (!c) {
                r.problems.push_back("unknown key 'initial_state." + key + "'");
            }
            else if (!value.is_number()) {
                r.problems.push_back("'initial_state." + key + "' must be a number");
            }
            else {
                cfg.initial[*c] = value.get<double>();
            }
        }
        for (const auto& p : check_state(cfg.initial)) {
            r.problems.push_back("initial_state: " + p);
        }
    }

    if (doc.contains("solver") && r.expect_object(doc["solver"], "solver")) {
        const auto& s = doc["solver"];
        r.reject_unknown(s, "solver.", {"method", "step", "rel_tol", "abs_tol", "output_spacing", "max_steps"});
        std::string method = cfg.solver.method == Method::rk4 ? "rk4" : "dopri45";
        r.read(s, "method", method, "solver.");
        cfg.solver.method = detail::parse_method(method, r);
        r.read(s, "step", cfg.solver.step, "solver.");
        r.read(s, "rel_tol", cfg.solver.rel_tol, "solver.");
        r.read(s, "abs_tol", cfg.solver.abs_tol, "solver.");
        r.read(s, "output_spacing", cfg.solver.output_spacing, "solver.");
        r.read(s, "max_steps", cfg.solver.max_steps, "solver.");
        if (!(cfg.solver.step > 0.0) || !(cfg.solver.rel_tol > 0.0) || !(cfg.solver.abs_tol > 0.0) ||
            !(cfg.solver.output_spacing > 0.0)) {
            r.problems.push_back("solver step, tolerances and output_spacing must be positive");
        }
    }

    if (doc.contains("data") && r.expect_object(doc["data"], "data")) {
        const auto& d = doc["data"];
        r.reject_unknown(d, "data.", {"cases"});
        std::string path;
        r.read(d, "cases", path, "data.");
        if (!path.empty()) {
            const auto full = r.resolve(path);
            if (!std::filesystem::exists(full)) {
                r.problems.push_back("data.cases file '" + full.string() + "' does not exist");
            }
            cfg.cases_path = full.string();
        }
    }

    if (doc.contains("simulate") && r.expect_object(doc["simulate"], "simulate")) {
        const auto& s = doc["simulate"];
        r.reject_unknown(s, "simulate.", {"horizon_days"});
        r.read(s, "horizon_days", cfg.simulate_horizon, "simulate.");
        if (!(cfg.simulate_horizon > 0.0)) {
            r.problems.push_back("simulate.horizon_days must be positive");
        }
    }

    if (doc.contains("fit") && r.expect_object(doc["fit"], "fit")) {
        const auto& f = doc["fit"];
        r.reject_unknown(f, "fit.",
                         {"iterations", "burn_in", "seed", "adaptation_start", "pin_exposed", "free", "likelihood",
                          "dispersion", "geweke_first", "geweke_last"});
        r.read(f, "iterations", cfg.fit.iterations, "fit.");
        r.read(f, "burn_in", cfg.fit.burn_in, "fit.");
        r.read(f, "seed", cfg.fit.seed, "fit.");
        r.read(f, "adaptation_start", cfg.fit.adaptation_start, "fit.");
        r.read(f, "pin_exposed", cfg.fit.pin_exposed, "fit.");
        r.read(f, "dispersion", cfg.fit.likelihood.dispersion, "fit.");
        r.read(f, "geweke_first", cfg.fit.geweke_first, "fit.");
        r.read(f, "geweke_last", cfg.fit.geweke_last, "fit.");
        std::string likelihood = "poisson";
        r.read(f, "likelihood", likelihood, "fit.");
        if (likelihood == "negative_binomial") {
            cfg.fit.likelihood.kind = LikelihoodKind::negative_binomial;
        }
        else if (likelihood != "poisson") {
            r.problems.push_back("fit.likelihood must be 'poisson' or 'negative_binomial', got '" + likelihood + "'");
        }
        cfg.fit.free = ontario_free_quantities(cfg.fit.pin_exposed);
        if (f.contains("free")) {
            cfg.fit.free.clear();
            if (!f["free"].is_array()) {
                r.problems.push_back("fit.free must be an array");
            }
            else {
                for (const auto& q : f["free"]) {
                    if (!r.expect_object(q, "fit.free entry")) {
                        continue;
                    }
                    r.reject_unknown(q, "fit.free[].", {"name", "lower", "upper", "start", "proposal_sd"});
                    FreeQuantity fq;
                    r.read(q, "name", fq.name, "fit.free[].");
                    r.read(q, "lower", fq.prior.lower, "fit.free[].");
                    r.read(q, "upper", fq.prior.upper, "fit.free[].");
                    r.read(q, "proposal_sd", fq.proposal_sd, "fit.free[].");
                    // start defaults to the configured value of the quantity
                    if (auto c = initial_condition_target(fq.name)) {
                        fq.start = cfg.initial[*c];
                    }
                    else if (is_parameter_name(fq.name)) {
                        fq.start = get_parameter(cfg.params, fq.name);
                    }
                    r.read(q, "start", fq.start, "fit.free[].");
                    cfg.fit.free.push_back(fq);
                }
            }
        }
        else {
            // defaults start from the configured values
            for (auto& q : cfg.fit.free) {
                if (auto c = initial_condition_target(q.name)) {
                    q.start = cfg.initial[*c];
                }
                else {
                    q.start = get_parameter(cfg.params, q.name);
                }
            }
        }
        if (!(cfg.fit.iterations > cfg.fit.burn_in)) {
            r.problems.push_back("fit.iterations must exceed fit.burn_in");
        }
        for (const auto& p : check_fit_spec(cfg.fit_spec())) {
            r.problems.push_back("fit: " + p);
        }
    }

    if (doc.contains("sensitivity") && r.expect_object(doc["sensitivity"], "sensitivity")) {
        const auto& s = doc["sensitivity"];
        r.reject_unknown(s, "sensitivity.", {"samples", "seed", "horizon_days", "columns"});
        r.read(s, "samples", cfg.plan.samples, "sensitivity.");
        r.read(s, "seed", cfg.plan.seed, "sensitivity.");
        r.read(s, "horizon_days", cfg.sensitivity_horizon, "sensitivity.");
        if (s.contains("columns")) {
            cfg.plan.columns.clear();
            if (!s["columns"].is_array()) {
                r.problems.push_back("sensitivity.columns must be an array");
            }
            else {
                for (const auto& c : s["columns"]) {
                    if (!r.expect_object(c, "sensitivity.columns entry")) {
                        continue;
                    }
                    r.reject_unknown(c, "sensitivity.columns[].",
                                     {"label", "targets", "lower", "upper", "mode", "distribution"});
                    PlanColumn col;
                    r.read(c, "label", col.label, "sensitivity.columns[].");
                    r.read(c, "targets", col.targets, "sensitivity.columns[].");
                    if (col.targets.empty() && !col.label.empty()) {
                        col.targets.push_back(col.label);
                        if (cfg.tie_contact_rates) {
                            if (auto partner = tied_partner(col.label)) {
                                col.targets.emplace_back(*partner);
                            }
                        }
                    }
                    r.read(c, "lower", col.lower, "sensitivity.columns[].");
                    r.read(c, "upper", col.upper, "sensitivity.columns[].");
                    r.read(c, "mode", col.mode, "sensitivity.columns[].");
                    std::string dist = "triangular";
                    r.read(c, "distribution", dist, "sensitivity.columns[].");
                    if (dist == "uniform") {
                        col.distribution = Distribution::uniform;
                    }
                    else if (dist != "triangular") {
                        r.problems.push_back("sensitivity distribution must be 'triangular' or 'uniform'");
                    }
                    cfg.plan.columns.push_back(col);
                }
            }
        }
        for (const auto& p : check_plan(cfg.plan)) {
            r.problems.push_back("sensitivity: " + p);
        }
    }

    if (doc.contains("sweep") && r.expect_object(doc["sweep"], "sweep")) {
        const auto& s = doc["sweep"];
        r.reject_unknown(s, "sweep.", {"parameter", "grid", "kind", "horizon_days", "wave_threshold"});
        r.read(s, "parameter", cfg.sweep.parameter, "sweep.");
        r.read(s, "grid", cfg.sweep.grid, "sweep.");
        r.read(s, "horizon_days", cfg.sweep.horizon, "sweep.");
        r.read(s, "wave_threshold", cfg.sweep.wave_threshold, "sweep.");
        std::string kind = "multiplier";
        r.read(s, "kind", kind, "sweep.");
        if (kind == "absolute") {
            cfg.sweep.kind = GridKind::absolute;
        }
        else if (kind != "multiplier") {
            r.problems.push_back("sweep.kind must be 'multiplier' or 'absolute'");
        }
        for (const auto& p : check_sweep(cfg.sweep_spec())) {
            r.problems.push_back("sweep: " + p);
        }
    }

    if (!r.problems.empty()) {
        std::string message = std::to_string(r.problems.size()) + " configuration problem(s):";
        for (const auto& p : r.problems) {
            message += "\n  - " + p;
        }
        throw Error(ErrorCode::config_error, message);
    }
    return cfg;
}

inline RunConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::config_error, "cannot open config file '" + path.string() + "'");
    }
    nlohmann::json doc;
    try {
        in >> doc;
    }
    catch (const nlohmann::json::parse_error& e) {
        throw Error(ErrorCode::config_error, std::string("config is not valid JSON: ") + e.what());
    }
    return parse_config(doc, path.parent_path());
}

/// Full configuration with every default made explicit; parse_config of the
/// result reproduces `cfg`.
inline nlohmann::json to_json(const RunConfig& cfg)
{
    using json = nlohmann::json;
    json doc;
    json params = json::object();
    for (const auto& f : parameter_fields) {
        params[std::string(f.name)] = cfg.params.*(f.member);
    }
    doc["parameters"] = params;
    json init = json::object();
    for (std::size_t i = 0; i < num_compartments; ++i) {
        init[std::string(compartment_names[i])] = cfg.initial.values[i];
    }
    doc["initial_state"] = init;
    doc["tie_contact_rates"] = cfg.tie_contact_rates;
    doc["start_date"] = format_date(cfg.start_date);
    doc["fit_window_days"] = cfg.fit_window;
    doc["solver"] = {{"method", cfg.solver.method == Method::rk4 ? "rk4" : "dopri45"},
                     {"step", cfg.solver.step},
                     {"rel_tol", cfg.solver.rel_tol},
                     {"abs_tol", cfg.solver.abs_tol},
                     {"output_spacing", cfg.solver.output_spacing},
                     {"max_steps", cfg.solver.max_steps}};
    if (cfg.cases_path) {
        doc["data"] = {{"cases", *cfg.cases_path}};
    }
    doc["simulate"] = {{"horizon_days", cfg.simulate_horizon}};
    json free = json::array();
    for (const auto& q : cfg.fit.free) {
        free.push_back({{"name", q.name},
                        {"lower", q.prior.lower},
                        {"upper", q.prior.upper},
                        {"start", q.start},
                        {"proposal_sd", q.proposal_sd}});
    }
    doc["fit"] = {{"iterations", cfg.fit.iterations},
                  {"burn_in", cfg.fit.burn_in},
                  {"seed", cfg.fit.seed},
                  {"adaptation_start", cfg.fit.adaptation_start},
                  {"pin_exposed", cfg.fit.pin_exposed},
                  {"free", free},
                  {"likelihood", cfg.fit.likelihood.kind == LikelihoodKind::poisson ? "poisson" : "negative_binomial"},
                  {"dispersion", cfg.fit.likelihood.dispersion},
                  {"geweke_first", cfg.fit.geweke_first},
                  {"geweke_last", cfg.fit.geweke_last}};
    json columns = json::array();
    for (const auto& c : cfg.plan.columns) {
        columns.push_back({{"label", c.label},
                           {"targets", c.targets},
                           {"lower", c.lower},
                           {"upper", c.upper},
                           {"mode", c.mode},
                           {"distribution", c.distribution == Distribution::uniform ? "uniform" : "triangular"}});
    }
    doc["sensitivity"] = {{"samples", cfg.plan.samples},
                          {"seed", cfg.plan.seed},
                          {"horizon_days", cfg.sensitivity_horizon},
                          {"columns", columns}};
    doc["sweep"] = {{"parameter", cfg.sweep.parameter},
                    {"grid", cfg.sweep.grid},
                    {"kind", cfg.sweep.kind == GridKind::multiplier ? "multiplier" : "absolute"},
                    {"horizon_days", cfg.sweep.horizon},
                    {"wave_threshold", cfg.sweep.wave_threshold}};
    doc["output_dir"] = cfg.output_dir;
    doc["workers"] = cfg.workers;
    return doc;
}

} // namespace agestrat

#endif // AGESTRAT_CONFIG_HPP

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
#ifndef AGESTRAT_MODEL_HPP
#define AGESTRAT_MODEL_HPP

#include "agestrat/error.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace agestrat
{

/// Compartments of the two-group model. Group 1 (vaccine eligible) owns V.
enum class Compartment : std::size_t {
    S1,
    V,
    E1,
    A1,
    U1,
    I1,
    R1,
    D1,
    S2,
    E2,
    A2,
    U2,
    I2,
    R2,
    D2,
    Count
};

inline constexpr std::size_t num_compartments = static_cast<std::size_t>(Compartment::Count);
inline constexpr std::size_t num_group1_compartments = 8;

inline constexpr std::array<std::string_view, num_compartments> compartment_names = {
    "s1", "v", "e1", "a1", "u1", "i1", "r1", "d1", "s2", "e2", "a2", "u2", "i2", "r2", "d2"};

inline std::optional<Compartment> compartment_from_name(std::string_view name)
{
    for (std::size_t i = 0; i < num_compartments; ++i) {
        if (compartment_names[i] == name) {
            return static_cast<Compartment>(i);
        }
    }
    return std::nullopt;
}

/// Populations of the 15 compartments (persons, real valued).
struct StateVector {
    std::array<double, num_compartments> values{};

    double& operator[](Compartment c)
    {
        return values[static_cast<std::size_t>(c)];
    }
    double operator[](Compartment c) const
    {
        return values[static_cast<std::size_t>(c)];
    }

    double group1_total() const
    {
        double sum = 0.0;
        for (std::size_t i = 0; i < num_group1_compartments; ++i) {
            sum += values[i];
        }
        return sum;
    }

    double group2_total() const
    {
        double sum = 0.0;
        for (std::size_t i = num_group1_compartments; i < num_compartments; ++i) {
            sum += values[i];
        }
        return sum;
    }

    bool operator==(const StateVector&) const = default;
};

inline bool is_group1(Compartment c)
{
    return static_cast<std::size_t>(c) < num_group1_compartments;
}

/// Rate constants (per day), proportions and group sizes of the model.
struct ParameterSet {
    // older group, susceptible contacts with A1, U1, A2, U2
    double beta11 = 0.0;
    double beta12 = 0.0;
    double beta13 = 0.0;
    double beta14 = 0.0;
    // older group, vaccinated contacts with A1, U1, A2, U2
    double beta11v = 0.0;
    double beta12v = 0.0;
    double beta13v = 0.0;
    double beta14v = 0.0;
    // younger group, susceptible contacts with A2, U2, A1, U1
    double beta21 = 0.0;
    double beta22 = 0.0;
    double beta23 = 0.0;
    double beta24 = 0.0;

    double epsilon = 0.0;
    double omega = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double rho1 = 0.0;
    double rho2 = 0.0;
    double eta11 = 0.0;
    double eta12 = 0.0;
    double eta13 = 0.0;
    double eta21 = 0.0;
    double eta22 = 0.0;
    double eta23 = 0.0;
    double tau1 = 0.0;
    double tau2 = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double n1 = 1.0;
    double n2 = 1.0;

    bool operator==(const ParameterSet&) const = default;
};

struct ParameterField {
    std::string_view name;
    double ParameterSet::*member;
};

inline constexpr std::array<ParameterField, 30> parameter_fields = {{
    {"beta11", &ParameterSet::beta11},   {"beta12", &ParameterSet::beta12},   {"beta13", &ParameterSet::beta13},
    {"beta14", &ParameterSet::beta14},   {"beta11v", &ParameterSet::beta11v}, {"beta12v", &ParameterSet::beta12v},
    {"beta13v", &ParameterSet::beta13v}, {"beta14v", &ParameterSet::beta14v}, {"beta21", &ParameterSet::beta21},
    {"beta22", &ParameterSet::beta22},   {"beta23", &ParameterSet::beta23},   {"beta24", &ParameterSet::beta24},
    {"epsilon", &ParameterSet::epsilon}, {"omega", &ParameterSet::omega},     {"mu1", &ParameterSet::mu1},
    {"mu2", &ParameterSet::mu2},         {"rho1", &ParameterSet::rho1},       {"rho2", &ParameterSet::rho2},
    {"eta11", &ParameterSet::eta11},     {"eta12", &ParameterSet::eta12},     {"eta13", &ParameterSet::eta13},
    {"eta21", &ParameterSet::eta21},     {"eta22", &ParameterSet::eta22},     {"eta23", &ParameterSet::eta23},
    {"tau1", &ParameterSet::tau1},       {"tau2", &ParameterSet::tau2},       {"delta1", &ParameterSet::delta1},
    {"delta2", &ParameterSet::delta2},   {"n1", &ParameterSet::n1},           {"n2", &ParameterSet::n2},
}};

inline double ParameterSet::*parameter_member(std::string_view name)
{
    for (const auto& field : parameter_fields) {
        if (field.name == name) {
            return field.member;
        }
    }
    return nullptr;
}

inline bool is_parameter_name(std::string_view name)
{
    return parameter_member(name) != nullptr;
}

/// The contact rate towards unreported individuals that is tied to a contact
/// rate towards asymptomatic individuals (beta11 = beta12 and so on).
inline std::optional<std::string_view> tied_partner(std::string_view name)
{
    static constexpr std::array<std::pair<std::string_view, std::string_view>, 6> ties = {{
        {"beta11", "beta12"},
        {"beta13", "beta14"},
        {"beta11v", "beta12v"},
        {"beta13v", "beta14v"},
        {"beta21", "beta22"},
        {"beta23", "beta24"},
    }};
    for (const auto& [a, u] : ties) {
        if (name == a) {
            return u;
        }
        if (name == u) {
            return a;
        }
    }
    return std::nullopt;
}

inline double get_parameter(const ParameterSet& params, std::string_view name)
{
    auto member = parameter_member(name);
    if (!member) {
        throw Error(ErrorCode::invalid_parameter, "unknown parameter '" + std::string(name) + "'");
    }
    return params.*member;
}

/// Sets a parameter; with `tied` the tie partner (if any) receives the same value.
inline void set_parameter(ParameterSet& params, std::string_view name, double value, bool tied = true)
{
    auto member = parameter_member(name);
    if (!member) {
        throw Error(ErrorCode::invalid_parameter, "unknown parameter '" + std::string(name) + "'");
    }
    params.*member = value;
    if (tied) {
        if (auto partner = tied_partner(name)) {
            params.*parameter_member(*partner) = value;
        }
    }
}

/// Returns every violated constraint; empty means valid.
inline std::vector<std::string> check_parameters(const ParameterSet& p)
{
    std::vector<std::string> problems;
    for (const auto& field : parameter_fields) {
        double value = p.*(field.member);
        if (!std::isfinite(value)) {
            problems.push_back(std::string(field.name) + " is not finite");
        }
        else if (value < 0.0) {
            problems.push_back(std::string(field.name) + " is negative");
        }
    }
    if (p.epsilon > 1.0) {
        problems.push_back("epsilon exceeds 1");
    }
    if (p.rho1 + p.rho2 > 1.0) {
        problems.push_back("rho1 + rho2 exceeds 1");
    }
    if (!(p.n1 > 0.0)) {
        problems.push_back("n1 must be positive");
    }
    if (!(p.n2 > 0.0)) {
        problems.push_back("n2 must be positive");
    }
    return problems;
}

inline void validate(const ParameterSet& p)
{
    auto problems = check_parameters(p);
    if (!problems.empty()) {
        std::string message = "invalid parameter set:";
        for (const auto& problem : problems) {
            message += " " + problem + ";";
        }
        throw Error(ErrorCode::invalid_parameter, message);
    }
}

inline std::vector<std::string> check_state(const StateVector& s)
{
    std::vector<std::string> problems;
    for (std::size_t i = 0; i < num_compartments; ++i) {
        if (!std::isfinite(s.values[i])) {
            problems.push_back(std::string(compartment_names[i]) + " is not finite");
        }
        else if (s.values[i] < 0.0) {
            problems.push_back(std::string(compartment_names[i]) + " is negative");
        }
    }
    return problems;
}

inline void validate(const StateVector& s)
{
    auto problems = check_state(s);
    if (!problems.empty()) {
        std::string message = "invalid state:";
        for (const auto& problem : problems) {
            message += " " + problem + ";";
        }
        throw Error(ErrorCode::invalid_parameter, message);
    }
}

/// Fitted means and literature values for Ontario, August to October 2021.
/// Unreported-contact rates are tied to their asymptomatic partners.
inline ParameterSet ontario_parameters()
{
    ParameterSet p;
    p.beta11 = p.beta12 = 2.1772e-8;
    p.beta13 = p.beta14 = 4.8079e-7;
    p.beta11v = p.beta12v = 5.5607e-7;
    p.beta13v = p.beta14v = 1.4986e-8;
    p.beta21 = p.beta22 = 4.079e-9;
    p.beta23 = p.beta24 = 7.0164e-8;
    p.epsilon = 0.96783;
    p.omega = 3.7286e-2;
    p.mu1 = p.mu2 = 1.0 / 3.0;
    p.rho1 = p.rho2 = 0.3;
    p.eta11 = p.eta12 = p.eta13 = 1.0 / 7.0;
    p.eta21 = p.eta22 = p.eta23 = 1.0 / 7.0;
    p.tau1 = p.tau2 = 1.0 / 4.6;
    p.delta1 = 1.0928e-5;
    p.delta2 = 2.9753e-6;
    p.n1 = 12932471.0;
    p.n2 = 1801543.0;
    return p;
}

/// Initial condition on August 1, 2021. R and D start at zero since they do
/// not feed back into the dynamics.
inline StateVector ontario_initial_state()
{
    StateVector s;
    s[Compartment::S1] = 2511756.0;
    s[Compartment::V] = 9865132.0;
    s[Compartment::E1] = 912.8571;
    s[Compartment::A1] = 678.83;
    s[Compartment::U1] = 42.791;
    s[Compartment::I1] = 200.0;
    s[Compartment::S2] = 1751387.0;
    s[Compartment::E2] = 287.1429;
    s[Compartment::A2] = 165.88;
    s[Compartment::U2] = 184.81;
    s[Compartment::I2] = 18.0;
    return s;
}

/// The six transmission terms.
struct ForceOfInfection {
    double within1 = 0.0; ///< susceptible older, infectious older
    double between1 = 0.0; ///< susceptible older, infectious younger
    double within1_vaccinated = 0.0;
    double between1_vaccinated = 0.0;
    double within2 = 0.0; ///< susceptible younger, infectious younger
    double between2 = 0.0; ///< susceptible younger, infectious older
};

inline ForceOfInfection lambda_terms(const StateVector& s, const ParameterSet& p)
{
    using C = Compartment;
    const double breakthrough = 1.0 - p.epsilon;
    ForceOfInfection f;
    f.within1 = p.beta11 * s[C::A1] * s[C::S1] + p.beta12 * s[C::U1] * s[C::S1];
    f.between1 = p.beta13 * s[C::A2] * s[C::S1] + p.beta14 * s[C::U2] * s[C::S1];
    f.within1_vaccinated = p.beta11v * breakthrough * s[C::A1] * s[C::V] + p.beta12v * breakthrough * s[C::U1] * s[C::V];
    f.between1_vaccinated =
        p.beta13v * breakthrough * s[C::A2] * s[C::V] + p.beta14v * breakthrough * s[C::U2] * s[C::V];
    f.within2 = p.beta21 * s[C::A2] * s[C::S2] + p.beta22 * s[C::U2] * s[C::S2];
    f.between2 = p.beta23 * s[C::A1] * s[C::S2] + p.beta24 * s[C::U1] * s[C::S2];
    return f;
}

/// Inflow into the reported class I of each group (persons/day).
inline std::array<double, 2> reported_inflow(const StateVector& s, const ParameterSet& p)
{
    using C = Compartment;
    const double to_reported = 1.0 - p.rho1 - p.rho2;
    return {p.mu1 * to_reported * s[C::E1] + p.tau1 * s[C::U1], p.mu2 * to_reported * s[C::E2] + p.tau2 * s[C::U2]};
}

/// Right-hand side of the model ODE.
inline StateVector rhs(const StateVector& s, const ParameterSet& p)
{
    using C = Compartment;
    const auto f = lambda_terms(s, p);
    const double to_reported = 1.0 - p.rho1 - p.rho2;
    StateVector d;

    const double vaccination = p.omega * s[C::S1];
    const double incubation1 = p.mu1 * s[C::E1];
    d[C::S1] = -f.within1 - f.between1 - vaccination;
    d[C::V] = vaccination - f.within1_vaccinated - f.between1_vaccinated;
    d[C::E1] = f.within1 + f.between1 + f.within1_vaccinated + f.between1_vaccinated - incubation1;
    d[C::A1] = p.rho1 * incubation1 - p.eta11 * s[C::A1];
    d[C::U1] = p.rho2 * incubation1 - p.eta12 * s[C::U1] - p.tau1 * s[C::U1];
    d[C::I1] = to_reported * incubation1 + p.tau1 * s[C::U1] - p.eta13 * s[C::I1] - p.delta1 * s[C::I1];
    d[C::R1] = p.eta11 * s[C::A1] + p.eta12 * s[C::U1] + p.eta13 * s[C::I1];
    d[C::D1] = p.delta1 * s[C::I1];

    const double incubation2 = p.mu2 * s[C::E2];
    d[C::S2] = -f.within2 - f.between2;
    d[C::E2] = f.within2 + f.between2 - incubation2;
    d[C::A2] = p.rho1 * incubation2 - p.eta21 * s[C::A2];
    d[C::U2] = p.rho2 * incubation2 - p.eta22 * s[C::U2] - p.tau2 * s[C::U2];
    d[C::I2] = to_reported * incubation2 + p.tau2 * s[C::U2] - p.eta23 * s[C::I2] - p.delta2 * s[C::I2];
    d[C::R2] = p.eta21 * s[C::A2] + p.eta22 * s[C::U2] + p.eta23 * s[C::I2];
    d[C::D2] = p.delta2 * s[C::I2];
    return d;
}

} // namespace agestrat

#endif // AGESTRAT_MODEL_HPP

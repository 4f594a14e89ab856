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
#include "agestrat/model.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace agestrat;
using C = Compartment;

namespace
{

ParameterSet zero_contacts()
{
    ParameterSet p = ontario_parameters();
    for (auto name : {"beta11", "beta13", "beta11v", "beta13v", "beta21", "beta23"}) {
        set_parameter(p, name, 0.0);
    }
    return p;
}

StateVector random_state(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1e6);
    StateVector s;
    for (auto& v : s.values) {
        v = u(rng);
    }
    return s;
}

ParameterSet random_parameters(std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> beta(0.0, 1e-6), rate(0.01, 1.0), unit(0.0, 1.0);
    ParameterSet p = ontario_parameters();
    for (const auto& f : parameter_fields) {
        const std::string_view n = f.name;
        if (n.substr(0, 4) == "beta") {
            p.*(f.member) = beta(rng);
        }
        else if (n != "n1" && n != "n2" && n != "epsilon" && n != "rho1" && n != "rho2") {
            p.*(f.member) = rate(rng);
        }
    }
    p.epsilon = unit(rng);
    p.rho1 = 0.5 * unit(rng);
    p.rho2 = 0.5 * unit(rng);
    return p;
}

} // namespace

TEST(LambdaTerms, NoInfectiousMeansNoInfection)
{
    StateVector s = ontario_initial_state();
    s[C::A1] = s[C::U1] = s[C::A2] = s[C::U2] = 0.0;
    const auto f = lambda_terms(s, ontario_parameters());
    EXPECT_EQ(f.within1, 0.0);
    EXPECT_EQ(f.between1, 0.0);
    EXPECT_EQ(f.within1_vaccinated, 0.0);
    EXPECT_EQ(f.between1_vaccinated, 0.0);
    EXPECT_EQ(f.within2, 0.0);
    EXPECT_EQ(f.between2, 0.0);
}

TEST(LambdaTerms, PerfectVaccineBlocksBreakthrough)
{
    ParameterSet p = ontario_parameters();
    p.epsilon = 1.0;
    StateVector s = ontario_initial_state();
    s[C::V] = 1e9;
    const auto f = lambda_terms(s, p);
    EXPECT_EQ(f.within1_vaccinated, 0.0);
    EXPECT_EQ(f.between1_vaccinated, 0.0);
}

TEST(LambdaTerms, HandArithmetic)
{
    ParameterSet p = zero_contacts();
    p.beta11 = p.beta12 = 1e-8;
    StateVector s;
    s[C::A1] = 100.0;
    s[C::U1] = 50.0;
    s[C::S1] = 1e6;
    const auto f = lambda_terms(s, p);
    // 1e-8 * 100 * 1e6 + 1e-8 * 50 * 1e6
    EXPECT_NEAR(f.within1, 1.5, 1e-12);
    EXPECT_EQ(f.between1, 0.0);
    EXPECT_EQ(f.within1_vaccinated, 0.0);
    EXPECT_EQ(f.between1_vaccinated, 0.0);
    EXPECT_EQ(f.within2, 0.0);
    EXPECT_EQ(f.between2, 0.0);
}

TEST(LambdaTerms, LinearInInfectiousLoad)
{
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const ParameterSet p = random_parameters(rng);
        StateVector a = random_state(rng), b = a;
        for (auto c : {C::A1, C::U1, C::A2, C::U2}) {
            b[c] = std::uniform_real_distribution<double>(0.0, 1e4)(rng);
        }
        StateVector sum = a;
        for (auto c : {C::A1, C::U1, C::A2, C::U2}) {
            sum[c] = 2.0 * a[c] + 3.0 * b[c];
        }
        const auto fa = lambda_terms(a, p), fb = lambda_terms(b, p), fs = lambda_terms(sum, p);
        auto check = [](double combined, double x, double y) {
            EXPECT_NEAR(combined, 2.0 * x + 3.0 * y, 1e-9 * std::max(1.0, std::abs(combined)));
        };
        check(fs.within1, fa.within1, fb.within1);
        check(fs.between1, fa.between1, fb.between1);
        check(fs.within1_vaccinated, fa.within1_vaccinated, fb.within1_vaccinated);
        check(fs.between1_vaccinated, fa.between1_vaccinated, fb.between1_vaccinated);
        check(fs.within2, fa.within2, fb.within2);
        check(fs.between2, fa.between2, fb.between2);
    }
}

TEST(LambdaTerms, BreakthroughNonincreasingInEfficacy)
{
    const ParameterSet base = ontario_parameters();
    const StateVector s = ontario_initial_state();
    double previous_within = std::numeric_limits<double>::infinity();
    double previous_between = previous_within;
    for (int i = 0; i <= 20; ++i) {
        ParameterSet p = base;
        p.epsilon = i / 20.0;
        const auto f = lambda_terms(s, p);
        EXPECT_LE(f.within1_vaccinated, previous_within);
        EXPECT_LE(f.between1_vaccinated, previous_between);
        previous_within = f.within1_vaccinated;
        previous_between = f.between1_vaccinated;
    }
}

TEST(Rhs, DiseaseFreeEquilibriumIsStationary)
{
    const ParameterSet p = ontario_parameters();
    StateVector s;
    s[C::V] = p.n1;
    s[C::S2] = p.n2;
    const auto d = rhs(s, p);
    for (double v : d.values) {
        EXPECT_EQ(v, 0.0);
    }
}

TEST(Rhs, GroupTotalsConserved)
{
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 1000; ++trial) {
        const ParameterSet p = random_parameters(rng);
        const StateVector s = random_state(rng);
        const auto d = rhs(s, p);
        double sum1 = 0.0, scale1 = 0.0, sum2 = 0.0, scale2 = 0.0;
        for (std::size_t i = 0; i < num_compartments; ++i) {
            const bool g1 = is_group1(static_cast<C>(i));
            (g1 ? sum1 : sum2) += d.values[i];
            (g1 ? scale1 : scale2) += std::abs(d.values[i]);
        }
        EXPECT_LE(std::abs(sum1), 1e-12 * std::max(1.0, scale1));
        EXPECT_LE(std::abs(sum2), 1e-12 * std::max(1.0, scale2));
    }
}

TEST(Rhs, ZeroComponentsDoNotGoNegative)
{
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 500; ++trial) {
        const ParameterSet p = random_parameters(rng);
        StateVector s = random_state(rng);
        // zero a random subset of compartments
        for (auto& v : s.values) {
            if (std::bernoulli_distribution(0.4)(rng)) {
                v = 0.0;
            }
        }
        const auto d = rhs(s, p);
        for (std::size_t i = 0; i < num_compartments; ++i) {
            if (s.values[i] == 0.0) {
                EXPECT_GE(d.values[i], 0.0) << compartment_names[i];
            }
        }
    }
}

TEST(Rhs, IncubationSplit)
{
    ParameterSet p = zero_contacts();
    p.mu1 = 1.0 / 3.0;
    p.rho1 = p.rho2 = 0.3;
    StateVector s;
    s[C::E1] = 300.0;
    const auto d = rhs(s, p);
    // A1, U1 and I1 are empty so the removal terms vanish
    EXPECT_NEAR(d[C::A1], 30.0, 1e-12);
    EXPECT_NEAR(d[C::U1], 30.0, 1e-12);
    EXPECT_NEAR(d[C::I1], 40.0, 1e-12);
    EXPECT_NEAR(d[C::E1], -100.0, 1e-12);
}

TEST(Parameters, TiesMovePartners)
{
    ParameterSet p = ontario_parameters();
    set_parameter(p, "beta13v", 7e-8);
    EXPECT_EQ(p.beta14v, 7e-8);
    set_parameter(p, "beta22", 3e-8, false);
    EXPECT_EQ(p.beta22, 3e-8);
    EXPECT_NE(p.beta21, 3e-8);
    EXPECT_EQ(tied_partner("beta24"), "beta23");
    EXPECT_FALSE(tied_partner("omega").has_value());
}

TEST(Parameters, OntarioValues)
{
    const ParameterSet p = ontario_parameters();
    EXPECT_EQ(p.beta11, 2.1772e-8);
    EXPECT_EQ(p.epsilon, 0.96783);
    EXPECT_TRUE(check_parameters(p).empty());
    const StateVector s = ontario_initial_state();
    EXPECT_EQ(s[C::I1], 200.0);
    EXPECT_EQ(s[C::I2], 18.0);
    EXPECT_TRUE(check_state(s).empty());
}

TEST(Parameters, ValidationListsEveryProblem)
{
    ParameterSet p = ontario_parameters();
    p.epsilon = 1.5;
    p.rho1 = 0.8;
    p.n2 = 0.0;
    p.omega = -1.0;
    const auto problems = check_parameters(p);
    EXPECT_GE(problems.size(), 4u);
    EXPECT_THROW(validate(p), Error);

    StateVector s = ontario_initial_state();
    s[C::E2] = -1.0;
    EXPECT_FALSE(check_state(s).empty());
}

TEST(Parameters, UnknownNameRejected)
{
    ParameterSet p;
    EXPECT_FALSE(is_parameter_name("beta15"));
    EXPECT_THROW(set_parameter(p, "beta15", 1.0), Error);
    EXPECT_THROW(get_parameter(p, "gamma"), Error);
    EXPECT_EQ(compartment_from_name("u2"), C::U2);
    EXPECT_FALSE(compartment_from_name("x").has_value());
}

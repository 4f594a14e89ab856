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
#ifndef AGESTRAT_REPRO_HPP
#define AGESTRAT_REPRO_HPP

#include "agestrat/error.hpp"
#include "agestrat/model.hpp"
#include "agestrat/solver.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <string>
#include <vector>

namespace agestrat
{

using Matrix8 = Eigen::Matrix<double, 8, 8>;

/// Next-generation pieces at the disease-free equilibrium (S1 = 0, V = N1, S2 = N2).
/// Infected subsystem order: E1, A1, U1, I1, E2, A2, U2, I2.
struct NgmDecomposition {
    double j11 = 0.0;
    double j15 = 0.0;
    double j51 = 0.0;
    double j55 = 0.0;
    Matrix8 new_infections = Matrix8::Zero(); ///< F
    Matrix8 transitions = Matrix8::Zero(); ///< V
};

namespace detail
{

inline void require_positive_rate(double value, const char* name)
{
    if (!(value > 0.0)) {
        throw Error(ErrorCode::division_by_zero, std::string("removal rate ") + name + " must be positive");
    }
}

inline void check_removal_rates(const ParameterSet& p)
{
    require_positive_rate(p.eta11, "eta11");
    require_positive_rate(p.eta21, "eta21");
    require_positive_rate(p.eta12 + p.tau1, "eta12 + tau1");
    require_positive_rate(p.eta22 + p.tau2, "eta22 + tau2");
}

} // namespace detail

inline NgmDecomposition ngm_decomposition(const ParameterSet& p)
{
    validate(p);
    detail::check_removal_rates(p);
    detail::require_positive_rate(p.mu1, "mu1");
    detail::require_positive_rate(p.mu2, "mu2");
    detail::require_positive_rate(p.eta13 + p.delta1, "eta13 + delta1");
    detail::require_positive_rate(p.eta23 + p.delta2, "eta23 + delta2");

    NgmDecomposition ngm;
    const double breakthrough = 1.0 - p.epsilon;
    const double removal_a1 = p.eta11, removal_u1 = p.eta12 + p.tau1;
    const double removal_a2 = p.eta21, removal_u2 = p.eta22 + p.tau2;
    ngm.j11 = p.beta11v * breakthrough * p.rho1 * p.n1 / removal_a1 +
              p.beta12v * breakthrough * p.rho2 * p.n1 / removal_u1;
    ngm.j15 = p.beta13v * breakthrough * p.rho1 * p.n1 / removal_a2 +
              p.beta14v * breakthrough * p.rho2 * p.n1 / removal_u2;
    ngm.j51 = p.beta23 * p.rho1 * p.n2 / removal_a1 + p.beta24 * p.rho2 * p.n2 / removal_u1;
    ngm.j55 = p.beta21 * p.rho1 * p.n2 / removal_a2 + p.beta22 * p.rho2 * p.n2 / removal_u2;

    enum { E1, A1, U1, I1, E2, A2, U2, I2 };
    auto& F = ngm.new_infections;
    // S1 = 0 at the equilibrium, so only breakthrough infections enter E1
    F(E1, A1) = p.beta11v * breakthrough * p.n1;
    F(E1, U1) = p.beta12v * breakthrough * p.n1;
    F(E1, A2) = p.beta13v * breakthrough * p.n1;
    F(E1, U2) = p.beta14v * breakthrough * p.n1;
    F(E2, A2) = p.beta21 * p.n2;
    F(E2, U2) = p.beta22 * p.n2;
    F(E2, A1) = p.beta23 * p.n2;
    F(E2, U1) = p.beta24 * p.n2;

    const double to_reported = 1.0 - p.rho1 - p.rho2;
    auto& V = ngm.transitions;
    V(E1, E1) = p.mu1;
    V(A1, A1) = p.eta11;
    V(A1, E1) = -p.mu1 * p.rho1;
    V(U1, U1) = p.eta12 + p.tau1;
    V(U1, E1) = -p.mu1 * p.rho2;
    V(I1, I1) = p.eta13 + p.delta1;
    V(I1, E1) = -p.mu1 * to_reported;
    V(I1, U1) = -p.tau1;
    V(E2, E2) = p.mu2;
    V(A2, A2) = p.eta21;
    V(A2, E2) = -p.mu2 * p.rho1;
    V(U2, U2) = p.eta22 + p.tau2;
    V(U2, E2) = -p.mu2 * p.rho2;
    V(I2, I2) = p.eta23 + p.delta2;
    V(I2, E2) = -p.mu2 * to_reported;
    V(I2, U2) = -p.tau2;
    return ngm;
}

/// Basic reproduction number from the closed-form dominant root of the
/// two-group next-generation block.
inline double r0_closed_form(const ParameterSet& p)
{
    validate(p);
    detail::check_removal_rates(p);
    const double breakthrough = 1.0 - p.epsilon;
    const double j11 = p.beta11v * breakthrough * p.rho1 * p.n1 / p.eta11 +
                       p.beta12v * breakthrough * p.rho2 * p.n1 / (p.eta12 + p.tau1);
    const double j15 = p.beta13v * breakthrough * p.rho1 * p.n1 / p.eta21 +
                       p.beta14v * breakthrough * p.rho2 * p.n1 / (p.eta22 + p.tau2);
    const double j51 = p.beta23 * p.rho1 * p.n2 / p.eta11 + p.beta24 * p.rho2 * p.n2 / (p.eta12 + p.tau1);
    const double j55 = p.beta21 * p.rho1 * p.n2 / p.eta21 + p.beta22 * p.rho2 * p.n2 / (p.eta22 + p.tau2);
    // (J11 + J55)^2 - 4 (J11 J55 - J15 J51) rewritten to stay nonnegative in floating point
    const double discriminant = (j11 - j55) * (j11 - j55) + 4.0 * j15 * j51;
    return 0.5 * (j11 + j55 + std::sqrt(discriminant));
}

struct PowerIterationOptions {
    double tolerance = 1e-12;
    int max_iterations = 1000000;
};

/// Dominant eigenvalue magnitude of F V^-1 by power iteration on its square.
inline double ngm_spectral_radius(const ParameterSet& p, const PowerIterationOptions& options = {})
{
    const auto ngm = ngm_decomposition(p);
    const Matrix8 next_gen = ngm.new_infections * ngm.transitions.inverse();

    if (next_gen.isZero(0.0)) {
        return 0.0;
    }
    // Iterate on K^2: +rho and -rho both map to rho^2, and no shift is needed
    // (a large shift slows convergence when rho is small).
    const Matrix8 squared = next_gen * next_gen;
    Eigen::Matrix<double, 8, 1> x = Eigen::Matrix<double, 8, 1>::Ones().normalized();
    double estimate = 0.0;
    int settled = 0;
    for (int iter = 0; iter < options.max_iterations; ++iter) {
        Eigen::Matrix<double, 8, 1> next = squared * x;
        const double norm = next.norm();
        if (norm == 0.0) {
            return 0.0;
        }
        x = next / norm;
        const double root = std::sqrt(norm);
        const double change = std::abs(root - estimate);
        estimate = root;
        // require a few consecutive small changes to ride out non-normal transients
        settled = change <= options.tolerance * std::max(estimate, 1e-300) ? settled + 1 : 0;
        if (settled >= 3) {
            return estimate;
        }
    }
    throw Error(ErrorCode::convergence_failure, "power iteration did not converge");
}

/// R_t = (s_t / s_0) R_0.
inline double effective_rt(const ParameterSet& p, double s_t, double s_0)
{
    if (!(s_0 > 0.0)) {
        throw Error(ErrorCode::invalid_baseline, "baseline susceptible population must be positive");
    }
    return s_t / s_0 * r0_closed_form(p);
}

/// Which classes count as "susceptible" for R_t.
enum class SusceptibleConvention {
    unvaccinated, ///< S1 + S2
    with_vaccinated, ///< S1 + S2 + V
};

inline double susceptible_total(const StateVector& s, SusceptibleConvention convention)
{
    double total = s[Compartment::S1] + s[Compartment::S2];
    if (convention == SusceptibleConvention::with_vaccinated) {
        total += s[Compartment::V];
    }
    return total;
}

struct RtPoint {
    double time;
    double rt;
};

/// R_t at every output point, with S_0 taken from the first trajectory entry.
inline std::vector<RtPoint> rt_curve(const ParameterSet& p, const Trajectory& traj, SusceptibleConvention convention)
{
    const double r0 = r0_closed_form(p);
    const double s0 = susceptible_total(traj.states().front(), convention);
    if (!(s0 > 0.0)) {
        throw Error(ErrorCode::invalid_baseline, "baseline susceptible population must be positive");
    }
    std::vector<RtPoint> curve;
    curve.reserve(traj.size());
    for (std::size_t i = 0; i < traj.size(); ++i) {
        curve.push_back({traj.times()[i], susceptible_total(traj.states()[i], convention) / s0 * r0});
    }
    return curve;
}

} // namespace agestrat

#endif // AGESTRAT_REPRO_HPP

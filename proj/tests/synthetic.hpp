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
#ifndef AGESTRAT_TESTS_SYNTHETIC_HPP
#define AGESTRAT_TESTS_SYNTHETIC_HPP

// Shared synthetic-data recovery fixture for the unit and acceptance tests.

#include "agestrat/inference.hpp"

#include <random>
#include <string>
#include <vector>

namespace agestrat::fixtures
{

inline const std::vector<std::string>& recovery_names()
{
    static const std::vector<std::string> names = {"beta11v", "beta13", "beta23", "omega"};
    return names;
}

struct RecoveryRun {
    FitSpec fit;
    std::vector<double> truth;
    IncidenceSeries group1;
    IncidenceSeries group2;
    Chain chain;
};

/// Poisson data from the fitted Ontario configuration, then an adaptive chain over
/// four free rates started from a perturbed truth.
inline RecoveryRun recovery_run(std::uint64_t seed, std::size_t iterations, int days = 86)
{
    RecoveryRun run;
    run.fit.params = ontario_parameters();
    run.fit.initial = ontario_initial_state();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> jitter(0.0, 0.02);
    for (const auto& q : ontario_free_quantities()) {
        for (const auto& name : recovery_names()) {
            if (q.name == name) {
                FreeQuantity f = q;
                run.truth.push_back(q.start);
                f.start = q.start * (1.0 + jitter(rng));
                run.fit.free.push_back(f);
            }
        }
    }
    const auto [m1, m2] = simulate_incidence(run.fit.params, run.fit.initial, 0, days);
    run.group1 = poisson_noise(m1, rng);
    run.group2 = poisson_noise(m2, rng);
    run.chain = run_adaptive_mh(run.fit, run.group1, run.group2, iterations, iterations / 2, seed + 1000);
    return run;
}

} // namespace agestrat::fixtures

#endif // AGESTRAT_TESTS_SYNTHETIC_HPP

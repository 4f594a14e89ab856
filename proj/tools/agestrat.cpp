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
#include "agestrat/cli.hpp"

#include "CLI11.hpp"

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

int main(int argc, char** argv)
{
    CLI::App app{"Two-age-group vaccination epidemic toolkit"};
    std::string subcommand;
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> workers;
    std::optional<std::string> out_dir;

    app.add_option("subcommand", subcommand, "simulate, fit, r0, rt, sweep, sensitivity or report")->required();
    app.add_option("--config", config_path, "JSON run configuration");
    app.add_option("--seed", seed, "seed for fitting and sensitivity sampling");
    app.add_option("--workers", workers, "worker threads for sweeps and sensitivity runs");
    app.add_option("--out", out_dir, "output directory");

    try {
        app.parse(argc, argv);
    }
    catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    agestrat::RunConfig cfg;
    try {
        if (!config_path.empty()) {
            cfg = agestrat::load_config(config_path);
        }
    }
    catch (const agestrat::Error& e) {
        agestrat::print_error(std::cerr, e.code(), e.what());
        return 2;
    }
    if (seed) {
        cfg.fit.seed = *seed;
        cfg.plan.seed = *seed;
    }
    if (workers) {
        cfg.workers = *workers;
    }
    if (out_dir) {
        cfg.output_dir = *out_dir;
    }
    return agestrat::dispatch(subcommand, cfg, std::cout, std::cerr);
}

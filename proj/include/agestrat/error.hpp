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
#ifndef AGESTRAT_ERROR_HPP
#define AGESTRAT_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace agestrat
{

enum class ErrorCode {
    invalid_parameter,
    integration_failure,
    instability,
    grid_mismatch,
    division_by_zero,
    convergence_failure,
    invalid_baseline,
    adaptation_collapse,
    undefined_z,
    degenerate_design,
    data_error,
    config_error,
    too_many_failures,
};

inline std::string_view to_string(ErrorCode code)
{
    switch (code) {
    case ErrorCode::invalid_parameter:
        return "invalid_parameter";
    case ErrorCode::integration_failure:
        return "integration_failure";
    case ErrorCode::instability:
        return "instability";
    case ErrorCode::grid_mismatch:
        return "grid_mismatch";
    case ErrorCode::division_by_zero:
        return "division_by_zero";
    case ErrorCode::convergence_failure:
        return "convergence_failure";
    case ErrorCode::invalid_baseline:
        return "invalid_baseline";
    case ErrorCode::adaptation_collapse:
        return "adaptation_collapse";
    case ErrorCode::undefined_z:
        return "undefined_z";
    case ErrorCode::degenerate_design:
        return "degenerate_design";
    case ErrorCode::data_error:
        return "data_error";
    case ErrorCode::config_error:
        return "config_error";
    case ErrorCode::too_many_failures:
        return "too_many_failures";
    }
    return "unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// command-line front end can emit a machine-readable error line.
class Error : public std::runtime_error
{
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message)
        , m_code(code)
    {
    }

    ErrorCode code() const noexcept
    {
        return m_code;
    }

private:
    ErrorCode m_code;
};

/// Integration failures also record the model time at which they happened.
class IntegrationError : public Error
{
public:
    IntegrationError(ErrorCode code, double time, const std::string& message)
        : Error(code, message + " (t = " + std::to_string(time) + ")")
        , m_time(time)
    {
    }

    double time() const noexcept
    {
        return m_time;
    }

private:
    double m_time;
};

} // namespace agestrat

#endif // AGESTRAT_ERROR_HPP

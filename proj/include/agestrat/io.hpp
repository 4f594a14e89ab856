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
#ifndef AGESTRAT_IO_HPP
#define AGESTRAT_IO_HPP

#include "agestrat/error.hpp"
#include "agestrat/inference.hpp"
#include "agestrat/model.hpp"
#include "agestrat/solver.hpp"

#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace agestrat
{

using Date = std::chrono::sys_days;

inline std::optional<Date> parse_iso_date(std::string_view text)
{
    if (text.size() != 10 || text[4] != '-' || text[7] != '-') {
        return std::nullopt;
    }
    int y = 0;
    unsigned m = 0, d = 0;
    auto parse = [](std::string_view s, auto& out) {
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        return ec == std::errc() && ptr == s.data() + s.size();
    };
    if (!parse(text.substr(0, 4), y) || !parse(text.substr(5, 2), m) || !parse(text.substr(8, 2), d)) {
        return std::nullopt;
    }
    const std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    return Date{ymd};
}

inline std::string format_date(Date date)
{
    const std::chrono::year_month_day ymd{date};
    char buf[16];
    std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()),
                  static_cast<unsigned>(ymd.day()));
    return buf;
}

inline Date date_of_day(Date start, int day)
{
    return start + std::chrono::days{day};
}

/// 17 significant digits, enough to round-trip a double.
inline std::string format_double(double value)
{
    std::ostringstream out;
    out << std::setprecision(17) << value;
    return out.str();
}

inline constexpr std::string_view older_label = "older";
inline constexpr std::string_view younger_label = "younger";

struct CaseRecord {
    Date onset;
    int group = 1; ///< 1 = older (12+), 2 = younger
    long long count = 0;
};

struct DataQualityReport {
    std::vector<Date> missing_group1;
    std::vector<Date> missing_group2;
    std::size_t duplicate_rows = 0;
    std::size_t rows_outside_window = 0;
};

struct CaseData {
    IncidenceSeries group1;
    IncidenceSeries group2;
    DataQualityReport quality;
};

namespace detail
{

inline std::string_view trim(std::string_view s)
{
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) {
        s.remove_prefix(1);
    }
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
        s.remove_suffix(1);
    }
    return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
        if (pos == std::string_view::npos) {
            break;
        }
        start = pos + 1;
    }
    return out;
}

[[noreturn]] inline void data_error(std::size_t line, const std::string& message)
{
    throw Error(ErrorCode::data_error, "line " + std::to_string(line) + ": " + message);
}

} // namespace detail

/// Reads `date,group,count` rows into one series per group covering `days`
/// days from `start` (day 0). Missing days are zero and reported; duplicate
/// (date, group) rows are summed.
inline CaseData ingest_cases(std::istream& in, Date start, int days)
{
    if (days <= 0) {
        throw Error(ErrorCode::invalid_parameter, "case window must cover at least one day");
    }
    std::string line;
    std::size_t line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (!detail::trim(line).empty()) {
            have_header = true;
            break;
        }
    }
    if (!have_header) {
        detail::data_error(line_no, "missing header row 'date,group,count'");
    }
    const auto header = detail::split(line);
    if (header.size() != 3 || header[0] != "date" || header[1] != "group" || header[2] != "count") {
        detail::data_error(line_no, "header must be 'date,group,count'");
    }

    CaseData data;
    data.group1.counts.assign(static_cast<std::size_t>(days), 0.0);
    data.group2.counts.assign(static_cast<std::size_t>(days), 0.0);
    std::vector<char> seen1(static_cast<std::size_t>(days), 0), seen2(static_cast<std::size_t>(days), 0);

    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto fields = detail::split(line);
        if (fields.size() != 3) {
            detail::data_error(line_no, "expected 3 fields, found " + std::to_string(fields.size()));
        }
        const auto date = parse_iso_date(fields[0]);
        if (!date) {
            detail::data_error(line_no, "unparseable date '" + std::string(fields[0]) + "'");
        }
        int group = 0;
        if (fields[1] == older_label) {
            group = 1;
        }
        else if (fields[1] == younger_label) {
            group = 2;
        }
        else {
            detail::data_error(line_no, "unknown group '" + std::string(fields[1]) + "'; accepted labels: " +
                                            std::string(older_label) + ", " + std::string(younger_label));
        }
        long long count = 0;
        {
            auto f = fields[2];
            auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), count);
            if (ec != std::errc() || ptr != f.data() + f.size() || count < 0) {
                detail::data_error(line_no, "count must be a nonnegative integer, got '" + std::string(f) + "'");
            }
        }
        const auto day = (*date - start).count();
        if (day < 0 || day >= days) {
            ++data.quality.rows_outside_window;
            continue;
        }
        auto& seen = group == 1 ? seen1 : seen2;
        auto& counts = group == 1 ? data.group1.counts : data.group2.counts;
        if (seen[static_cast<std::size_t>(day)]) {
            ++data.quality.duplicate_rows;
        }
        seen[static_cast<std::size_t>(day)] = 1;
        counts[static_cast<std::size_t>(day)] += static_cast<double>(count);
    }

    for (int d = 0; d < days; ++d) {
        if (!seen1[static_cast<std::size_t>(d)]) {
            data.quality.missing_group1.push_back(date_of_day(start, d));
        }
        if (!seen2[static_cast<std::size_t>(d)]) {
            data.quality.missing_group2.push_back(date_of_day(start, d));
        }
    }
    return data;
}

inline CaseData ingest_cases(const std::string& path, Date start, int days)
{
    std::ifstream in(path);
    if (!in) {
        throw Error(ErrorCode::data_error, "cannot open case file '" + path + "'");
    }
    return ingest_cases(in, start, days);
}

/// Writes one `date,group,count` row per day and group.
inline void write_cases(std::ostream& out, const IncidenceSeries& group1, const IncidenceSeries& group2, Date start)
{
    out << "date,group,count\n";
    for (std::size_t i = 0; i < group1.size(); ++i) {
        const auto date = format_date(date_of_day(start, group1.first_day + static_cast<int>(i)));
        out << date << ',' << older_label << ',' << static_cast<long long>(std::llround(group1.counts[i])) << '\n';
        out << date << ',' << younger_label << ',' << static_cast<long long>(std::llround(group2.counts[i])) << '\n';
    }
}

inline void write_quality_report(std::ostream& out, const DataQualityReport& q)
{
    out << "missing_days_older," << q.missing_group1.size() << '\n';
    out << "missing_days_younger," << q.missing_group2.size() << '\n';
    out << "duplicate_rows," << q.duplicate_rows << '\n';
    out << "rows_outside_window," << q.rows_outside_window << '\n';
    for (auto d : q.missing_group1) {
        out << "missing," << format_date(d) << ',' << older_label << '\n';
    }
    for (auto d : q.missing_group2) {
        out << "missing," << format_date(d) << ',' << younger_label << '\n';
    }
}

inline void write_incidence(std::ostream& out, const IncidenceSeries& group1, const IncidenceSeries& group2,
                            Date start)
{
    out << "day,date,group1_incidence,group2_incidence\n";
    for (std::size_t i = 0; i < group1.size(); ++i) {
        const int day = group1.first_day + static_cast<int>(i);
        out << day << ',' << format_date(date_of_day(start, day)) << ',' << format_double(group1.counts[i]) << ','
            << format_double(group2.counts[i]) << '\n';
    }
}

inline void write_trajectory(std::ostream& out, const Trajectory& traj)
{
    out << "time";
    for (auto name : compartment_names) {
        out << ',' << name;
    }
    out << ",c1,c2\n";
    for (std::size_t i = 0; i < traj.size(); ++i) {
        out << format_double(traj.times()[i]);
        for (double v : traj.states()[i].values) {
            out << ',' << format_double(v);
        }
        out << ',' << format_double(traj.reported(1)[i]) << ',' << format_double(traj.reported(2)[i]) << '\n';
    }
}

/// iteration, each free quantity, log_posterior, accepted (0/1).
inline void write_chain(std::ostream& out, const Chain& chain)
{
    out << "iteration";
    for (const auto& n : chain.names) {
        out << ',' << n;
    }
    out << ",log_posterior,accepted\n";
    for (std::size_t i = 0; i < chain.size(); ++i) {
        out << i;
        for (double v : chain.samples[i]) {
            out << ',' << format_double(v);
        }
        out << ',' << format_double(chain.log_posterior[i]) << ',' << (chain.accepted[i] ? 1 : 0) << '\n';
    }
}

/// Reads a chain written by write_chain.
inline Chain read_chain(std::istream& in)
{
    Chain chain;
    std::string line;
    if (!std::getline(in, line)) {
        throw Error(ErrorCode::data_error, "empty chain file");
    }
    const auto header = detail::split(line);
    if (header.size() < 4 || header.front() != "iteration" || header[header.size() - 2] != "log_posterior" ||
        header.back() != "accepted") {
        detail::data_error(1, "not a chain header");
    }
    for (std::size_t j = 1; j + 2 < header.size(); ++j) {
        chain.names.emplace_back(header[j]);
    }
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) {
            continue;
        }
        const auto fields = detail::split(line);
        if (fields.size() != header.size()) {
            detail::data_error(line_no, "wrong number of fields");
        }
        std::vector<double> row;
        for (std::size_t j = 1; j + 2 < fields.size(); ++j) {
            row.push_back(std::stod(std::string(fields[j])));
        }
        chain.samples.push_back(std::move(row));
        chain.log_posterior.push_back(std::stod(std::string(fields[fields.size() - 2])));
        chain.accepted.push_back(fields.back() == "1");
    }
    return chain;
}

} // namespace agestrat

#endif // AGESTRAT_IO_HPP

#pragma once

#include <functional>
#include <string>
#include <vector>

namespace nowcaster {

// Warnings are routed through a hook so the CLI can prefix/flush them and
// tests can assert on them; default sink is stderr.
void warn(const std::string& message);
void set_warn_handler(std::function<void(const std::string&)> handler);

// Formats a double so that the value round-trips exactly; used by every CSV
// writer to keep outputs byte-identical across runs.
std::string format_double(double v);

std::string read_text_file(const std::string& path);
std::vector<std::string> read_lines(const std::string& path);

// Writes to <path>.tmp and renames, so a failed run never leaves a
// truncated file behind.
void atomic_write_file(const std::string& path, const std::string& content);

// Minimal CSV split: no quoting, fields must not contain commas.
std::vector<std::string> split_csv_line(const std::string& line);

// Fixed-format ISO-8601 UTC timestamps ("2009-07-01T13:45:30Z").
int64_t parse_iso8601_utc(const std::string& text);
std::string format_iso8601_utc(int64_t epoch_seconds);

// Calendar dates ("2009-07-01") as days since the Unix epoch.
int64_t parse_date(const std::string& text);
std::string format_date(int64_t epoch_days);

// 0 = Monday ... 6 = Sunday.
int day_of_week(int64_t epoch_days);

}  // namespace nowcaster

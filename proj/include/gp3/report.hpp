#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace gp3 {

using Json = nlohmann::ordered_json;

/// Pretty JSON with every floating-point number printed as %.17g; non-finite numbers become null.
std::string dump_json(const Json& j);
void write_json(const std::filesystem::path& path, const Json& j);

/// Comma-separated table with a header row; doubles are written as %.17g.
class CsvWriter {
public:
    CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header);

    CsvWriter& operator<<(double x);
    CsvWriter& operator<<(long long x);
    CsvWriter& operator<<(int x) { return *this << static_cast<long long>(x); }
    CsvWriter& operator<<(unsigned long long x) { return *this << static_cast<long long>(x); }
    CsvWriter& operator<<(unsigned long x) { return *this << static_cast<long long>(x); }
    CsvWriter& operator<<(const std::string& s);
    void end_row();

private:
    std::ofstream out_;
    std::size_t columns_;
    std::size_t pending_ = 0;
    void separator();
};

/// A value with its error bar, or null plus a reason when the stage did not run.
Json measured(double value, double error);
Json skipped(const std::string& reason);

} // namespace gp3

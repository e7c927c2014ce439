#include "gp3/report.hpp"

#include "gp3/common.hpp"

#include <cmath>
#include <cstdio>

namespace gp3 {

namespace {

std::string number(double x)
{
    if (!std::isfinite(x)) return "null";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

void emit(const Json& j, std::string& out, int depth)
{
    const std::string pad(2 * (depth + 1), ' ');
    const std::string close(2 * depth, ' ');
    switch (j.type()) {
    case Json::value_t::object: {
        if (j.empty()) {
            out += "{}";
            return;
        }
        out += "{\n";
        bool first = true;
        for (auto it = j.begin(); it != j.end(); ++it) {
            if (!first) out += ",\n";
            first = false;
            out += pad + Json(it.key()).dump() + ": ";
            emit(it.value(), out, depth + 1);
        }
        out += "\n" + close + "}";
        return;
    }
    case Json::value_t::array: {
        if (j.empty()) {
            out += "[]";
            return;
        }
        out += "[\n";
        for (std::size_t i = 0; i < j.size(); ++i) {
            if (i) out += ",\n";
            out += pad;
            emit(j[i], out, depth + 1);
        }
        out += "\n" + close + "]";
        return;
    }
    case Json::value_t::number_float:
        out += number(j.get<double>());
        return;
    default:
        out += j.dump();
    }
}

} // namespace

std::string dump_json(const Json& j)
{
    std::string out;
    emit(j, out, 0);
    out += "\n";
    return out;
}

void write_json(const std::filesystem::path& path, const Json& j)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write " + path.string());
    out << dump_json(j);
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
    : columns_(header.size())
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    out_.open(path, std::ios::binary);
    if (!out_) throw InputError("cannot write " + path.string());
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << "\n";
}

void CsvWriter::separator()
{
    if (pending_ >= columns_) throw InputError("csv row has too many fields");
    if (pending_++) out_ << ",";
}

CsvWriter& CsvWriter::operator<<(double x)
{
    separator();
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    out_ << buf;
    return *this;
}

CsvWriter& CsvWriter::operator<<(long long x)
{
    separator();
    out_ << x;
    return *this;
}

CsvWriter& CsvWriter::operator<<(const std::string& s)
{
    separator();
    out_ << s;
    return *this;
}

void CsvWriter::end_row()
{
    if (pending_ != columns_) throw InputError("csv row has the wrong number of fields");
    out_ << "\n";
    pending_ = 0;
}

Json measured(double value, double error)
{
    return Json{{"value", value}, {"error", error}};
}

Json skipped(const std::string& reason)
{
    return Json{{"value", nullptr}, {"error", nullptr}, {"reason", reason}};
}

} // namespace gp3

#include "deduct/csv.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "deduct/errors.hpp"

namespace deduct {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

std::string trim(const std::string& s) {
    auto a = s.find_first_not_of(" \t");
    if (a == std::string::npos) return "";
    auto b = s.find_last_not_of(" \t");
    return s.substr(a, b - a + 1);
}

double parse_cell(const std::string& raw, long row, const std::string& col) {
    const std::string tok = trim(raw);
    if (tok == "NA") return kNA;
    if (tok.empty())
        throw MalformedRow("row " + std::to_string(row) + ", column " + col +
                           ": empty cell (use the literal NA for missing values)");
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    if (end == tok.c_str() || *end != '\0')
        throw MalformedRow("row " + std::to_string(row) + ", column " + col +
                           ": cannot parse '" + tok + "' as a number");
    return v;
}

int parse_flag(const std::string& raw, long row, const std::string& col) {
    const double v = parse_cell(raw, row, col);
    if (v == 0.0) return 0;
    if (v == 1.0) return 1;
    throw MalformedRow("row " + std::to_string(row) + ", column " + col +
                       ": expected 0 or 1, got '" + trim(raw) + "'");
}

std::size_t column_index(const std::vector<std::string>& header, const std::string& name) {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (trim(header[i]) == name) return i;
    throw MalformedRow("header is missing column '" + name + "'");
}

std::string format_value(double v) {
    if (is_na(v)) return "NA";
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

Dataset parse_csv(std::istream& in, const ColumnSpec& spec) {
    std::string line;
    if (!std::getline(in, line)) throw EmptyDataset("no header row");
    const auto header = split_line(line);
    const std::size_t ci = column_index(header, spec.c);
    const std::size_t ri = column_index(header, spec.r_obs);
    const std::size_t si = column_index(header, spec.s);
    const std::size_t xi = column_index(header, spec.x);
    const std::size_t di = column_index(header, spec.delta);
    std::vector<std::size_t> zi, wi;
    for (const auto& name : spec.z_cols) zi.push_back(column_index(header, name));
    for (const auto& name : spec.w_cols) wi.push_back(column_index(header, name));

    std::vector<ObservedRecord> records;
    long row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (trim(line).empty()) continue;
        const auto cells = split_line(line);
        if (cells.size() != header.size())
            throw MalformedRow("row " + std::to_string(row) + ": expected " +
                               std::to_string(header.size()) + " cells, got " +
                               std::to_string(cells.size()));
        ObservedRecord rec;
        rec.row_id = row;
        rec.c = parse_cell(cells[ci], row, spec.c);
        rec.r_obs = parse_flag(cells[ri], row, spec.r_obs);
        rec.s = parse_flag(cells[si], row, spec.s);
        rec.x = parse_cell(cells[xi], row, spec.x);
        const double d = parse_cell(cells[di], row, spec.delta);
        if (is_na(d)) {
            rec.delta = kDeltaNA;
        } else if (d == 0.0 || d == 1.0) {
            rec.delta = static_cast<int>(d);
        } else {
            throw MalformedRow("row " + std::to_string(row) + ", column " + spec.delta +
                               ": expected 0, 1, or NA");
        }
        for (std::size_t k : zi) rec.z.push_back(parse_cell(cells[k], row, spec.z_cols[rec.z.size()]));
        for (std::size_t k : wi) rec.w.push_back(parse_cell(cells[k], row, spec.w_cols[rec.w.size()]));
        records.push_back(std::move(rec));
    }
    if (records.empty()) throw EmptyDataset("no data rows");
    return canonical_sort(std::move(records), static_cast<int>(spec.z_cols.size()),
                          static_cast<int>(spec.w_cols.size()));
}

Dataset parse_csv(const std::string& path, const ColumnSpec& spec) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open '" + path + "'");
    return parse_csv(in, spec);
}

void write_csv(std::ostream& out, const Dataset& data, const ColumnSpec& spec) {
    out << spec.c << ',' << spec.r_obs;
    for (const auto& name : spec.z_cols) out << ',' << name;
    for (const auto& name : spec.w_cols) out << ',' << name;
    out << ',' << spec.s << ',' << spec.x << ',' << spec.delta << '\n';
    for (const auto& rec : data.records) {
        out << format_value(rec.c) << ',' << rec.r_obs;
        for (double v : rec.z) out << ',' << format_value(v);
        for (double v : rec.w) out << ',' << format_value(v);
        out << ',' << rec.s << ',' << format_value(rec.x) << ','
            << (rec.delta == kDeltaNA ? "NA" : std::to_string(rec.delta)) << '\n';
    }
}

void write_csv(const std::string& path, const Dataset& data, const ColumnSpec& spec) {
    std::ofstream out(path);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    write_csv(out, data, spec);
}

}  // namespace deduct

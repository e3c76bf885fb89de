#pragma once
#include <iosfwd>
#include <string>
#include <vector>

#include "deduct/record.hpp"

namespace deduct {

/// Column naming for CSV ingestion. z/w covariate columns are selected by
/// name; NA cells are the literal token "NA" (empty cells are malformed).
struct ColumnSpec {
    std::string c = "c";
    std::string r_obs = "r_obs";
    std::string s = "s";
    std::string x = "x";
    std::string delta = "delta";
    std::vector<std::string> z_cols;
    std::vector<std::string> w_cols;
};

Dataset parse_csv(const std::string& path, const ColumnSpec& spec);
Dataset parse_csv(std::istream& in, const ColumnSpec& spec);

void write_csv(const std::string& path, const Dataset& data, const ColumnSpec& spec);
void write_csv(std::ostream& out, const Dataset& data, const ColumnSpec& spec);

}  // namespace deduct

#include "dpdg/csv.hpp"

#include <fstream>
#include <sstream>
#include <vector>

namespace dpdg {

namespace {

bool parse_double(const std::string& tok, double& out) {
    try {
        std::size_t pos = 0;
        out = std::stod(tok, &pos);
        while (pos < tok.size() && std::isspace(static_cast<unsigned char>(tok[pos]))) ++pos;
        return pos == tok.size();
    } catch (...) {
        return false;
    }
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> toks;
    std::string cur;
    std::stringstream ss(line);
    while (std::getline(ss, cur, ',')) toks.push_back(cur);
    if (!line.empty() && line.back() == ',') toks.emplace_back();
    return toks;
}

}  // namespace

SampleMatrix read_sample_csv(std::istream& is, const std::string& source_name) {
    std::vector<std::vector<double>> rows;
    std::string line;
    int line_no = 0;
    std::size_t width = 0;
    bool first_content_row = true;
    while (std::getline(is, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto toks = split_csv_line(line);
        std::vector<double> row;
        row.reserve(toks.size());
        bool numeric = true;
        for (const auto& tok : toks) {
            double v;
            if (!parse_double(tok, v)) {
                numeric = false;
                break;
            }
            row.push_back(v);
        }
        if (!numeric) {
            if (first_content_row) {
                first_content_row = false;  // header row
                continue;
            }
            throw DataFormatError(source_name + ": malformed row at line " + std::to_string(line_no));
        }
        first_content_row = false;
        if (width == 0) {
            width = row.size();
        } else if (row.size() != width) {
            throw DataFormatError(source_name + ": inconsistent column count at line " +
                          std::to_string(line_no));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw DataFormatError(source_name + ": no data rows");
    Matrix data(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(width));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < width; ++j) {
            data(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return make_sample(std::move(data));
}

SampleMatrix read_sample_csv_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw IoError("cannot open " + path);
    return read_sample_csv(is, path);
}

}  // namespace dpdg

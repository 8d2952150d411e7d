#pragma once

#include <iosfwd>
#include <string>

#include "dpdg/model.hpp"

namespace dpdg {

/// Bad input data (as opposed to filesystem trouble); the CLI maps this to
/// a usage error.
struct DataFormatError : Error {
    explicit DataFormatError(const std::string& what) : Error("DataFormat", what) {}
};

/// Reads an n x m numeric CSV.  A non-numeric first row is treated as a
/// header.  Malformed rows raise DataFormatError naming the 1-based line
/// number; a missing file raises IoError.
SampleMatrix read_sample_csv(std::istream& is, const std::string& source_name = "<stream>");
SampleMatrix read_sample_csv_file(const std::string& path);

}  // namespace dpdg

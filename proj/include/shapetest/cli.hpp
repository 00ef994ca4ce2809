#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "shapetest/estimator.hpp"
#include "shapetest/grid.hpp"

namespace shapetest::cli {

inline constexpr int kExitNoReject = 0;
inline constexpr int kExitError = 1;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitReject = 3;

/// Header row plus numeric rows.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;

    /// Index of a column, or -1.
    int column(const std::string& name) const;
};

CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::string& path);

/// Columns y, z1[, z2, ...] and optional w1..wq.
Sample sample_from_table(const CsvTable& t);

/// Columns z (or z1, z2, ...) and value on a rectangular grid, in any row order.
FunctionOnGrid function_from_table(const CsvTable& t);

/// Synthetic labour-supply style data: y is a growth rate, z1 weekly hours in
/// [3, 90], w1..wq demographic controls. theta is increasing in hours.
Sample hours_fixture(Eigen::Index n, int controls, std::uint64_t seed, bool negate);
void write_sample_csv(std::ostream& out, const Sample& s);

/// Runs the command line; returns the process exit code.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace shapetest::cli

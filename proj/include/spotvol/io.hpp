#pragma once

#include "spotvol/common.hpp"
#include "spotvol/sim.hpp"

#include <string>
#include <vector>

namespace spotvol {

/// Tick CSV layout: header `asset_id,time,log_price`, times as day fractions
/// with full double precision.
void write_ticks_csv(const std::string& path, const TickSeries& ticks);
TickSeries read_ticks_csv(const std::string& path);

/// Read every `ticks_*.csv` under a directory, ordered by asset id.
std::vector<TickSeries> read_ticks_dir(const std::string& dir);

/// Dense matrix as plain CSV rows.
void write_matrix_csv(const std::string& path, const Matrix& A);
Matrix read_matrix_csv(const std::string& path);

/// Row-major float64 little-endian blob with a one-line self-describing header.
void write_matrix_binary(const std::string& path, const Matrix& A, const std::string& what);
Matrix read_matrix_binary(const std::string& path);

std::string format_double(double v);

}  // namespace spotvol

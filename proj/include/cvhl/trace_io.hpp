#pragma once

#include "cvhl/scan.hpp"

#include <string>

namespace cvhl {

// CSV with `#` key=value metadata lines, then `index,t_s,theta_rad,x_sn`.
// Values are written with 17 significant digits so a read round-trips
// bit-exactly. Writes go through a temp file + rename.
void write_trace(const HomodyneTrace& trace, const std::string& path);
HomodyneTrace read_trace(const std::string& path);

// Shared helper for atomic text-file output.
void atomic_write_text(const std::string& path, const std::string& contents);

} // namespace cvhl

#pragma once

#include <cstdint>
#include <string>
#include <string_view>

#include "psafe/border.hpp"

namespace psafe {

// Border CSV: "# closed=true|false" header line, then
// section_id,index,x1..xd,p_hat,se_p,grad1..gradd with full-precision floats.
std::string polyline_to_csv(const BorderPolyline& poly, int d);
BorderPolyline polyline_from_csv(const std::string& text);
void write_polyline_csv(const std::string& path, const BorderPolyline& poly, int d);
BorderPolyline read_polyline_csv(const std::string& path);

std::uint64_t fnv1a(std::string_view bytes);

const char* section_status_name(SectionStatus s);

} // namespace psafe

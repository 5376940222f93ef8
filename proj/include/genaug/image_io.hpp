#pragma once

#include <string>

#include "genaug/tensor.hpp"

namespace genaug {

// Binary PPM (P6, maxval 255). Bytes map to [0,1] by /255; writing rounds
// back, so read/write round-trips 8-bit data exactly.
Image read_ppm(const std::string& path);
void write_ppm(const std::string& path, const Image& img);

} // namespace genaug

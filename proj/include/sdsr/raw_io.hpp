#pragma once

#include <string>

#include "sdsr/image.hpp"

namespace sdsr {

// Lossless real-valued grid file: the ASCII header "SDSRF64\n<width> <height>\n"
// followed by width*height little-endian IEEE-754 doubles in row-major order.
void save_raw(const Image& img, const std::string& path);
Image load_raw(const std::string& path);

}  // namespace sdsr

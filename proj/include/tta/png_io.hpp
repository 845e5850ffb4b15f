#pragma once

#include <filesystem>

#include "tta/augment.hpp"

namespace tta {

// Color PNGs load as RGB, everything else as gray; alpha is dropped.
Image read_png(const std::filesystem::path& path);
void write_png(const std::filesystem::path& path, const Image& img);

}  // namespace tta

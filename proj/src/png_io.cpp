#include "tta/png_io.hpp"

#include <png.h>

#include <cstring>

#include "tta/error.hpp"

namespace tta {

Image read_png(const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str())) {
    fail(ErrorCode::IoError, "cannot read PNG " + path.string() + ": " + image.message);
  }
  const bool is_color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = is_color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  const std::size_t channels = is_color ? 3 : 1;
  std::vector<std::uint8_t> pixels(PNG_IMAGE_SIZE(image));
  png_color background{0, 0, 0};
  if (!png_image_finish_read(&image, &background, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    fail(ErrorCode::IoError, "cannot decode PNG " + path.string() + ": " + image.message);
  }
  return Image(image.width, image.height, channels, std::move(pixels));
}

void write_png(const std::filesystem::path& path, const Image& img) {
  png_image image;
  std::memset(&image, 0, sizeof image);
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width());
  image.height = static_cast<png_uint_32>(img.height());
  image.format = img.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&image, path.c_str(), 0, img.pixels().data(), 0, nullptr)) {
    fail(ErrorCode::IoError, "cannot write PNG " + path.string() + ": " + image.message);
  }
}

}  // namespace tta

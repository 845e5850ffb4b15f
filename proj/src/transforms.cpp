#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>

#include "tta/augment.hpp"
#include "tta/error.hpp"

namespace tta::transforms {
namespace {

std::uint8_t to_pixel(double v) {
  return static_cast<std::uint8_t>(std::clamp<long>(std::lround(v), 0, 255));
}

// Bilinear sample at continuous pixel coordinates; edges replicate.
double sample(const Image& img, double sx, double sy, std::size_t ch) {
  const double max_x = static_cast<double>(img.width() - 1);
  const double max_y = static_cast<double>(img.height() - 1);
  sx = std::clamp(sx, 0.0, max_x);
  sy = std::clamp(sy, 0.0, max_y);
  const auto x0 = static_cast<std::size_t>(std::floor(sx));
  const auto y0 = static_cast<std::size_t>(std::floor(sy));
  const std::size_t x1 = std::min(x0 + 1, img.width() - 1);
  const std::size_t y1 = std::min(y0 + 1, img.height() - 1);
  const double wx = sx - static_cast<double>(x0);
  const double wy = sy - static_cast<double>(y0);
  const double top = img.at(x0, y0, ch) * (1.0 - wx) + img.at(x1, y0, ch) * wx;
  const double bottom = img.at(x0, y1, ch) * (1.0 - wx) + img.at(x1, y1, ch) * wx;
  return top * (1.0 - wy) + bottom * wy;
}

// Resamples through an inverse map expressed in center-relative coordinates:
// source = [a b; c d] * target + [tx ty].
Image warp_affine(const Image& img, double a, double b, double c, double d, double tx, double ty) {
  Image out(img.width(), img.height(), img.channels());
  const double cx = static_cast<double>(img.width()) / 2.0;
  const double cy = static_cast<double>(img.height()) / 2.0;
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const double u = static_cast<double>(x) + 0.5 - cx;
      const double v = static_cast<double>(y) + 0.5 - cy;
      const double su = a * u + b * v + tx;
      const double sv = c * u + d * v + ty;
      for (std::size_t ch = 0; ch < img.channels(); ++ch) {
        out.at(x, y, ch) = to_pixel(sample(img, su + cx - 0.5, sv + cy - 0.5, ch));
      }
    }
  }
  return out;
}

Image map_lut(const Image& img, const std::array<std::array<std::uint8_t, 256>, 3>& luts) {
  Image out = img;
  auto px = out.pixels();
  const std::size_t channels = img.channels();
  for (std::size_t k = 0; k < px.size(); ++k) px[k] = luts[k % channels][px[k]];
  return out;
}

std::array<std::size_t, 256> histogram(const Image& img, std::size_t ch) {
  std::array<std::size_t, 256> h{};
  const auto px = img.pixels();
  for (std::size_t k = ch; k < px.size(); k += img.channels()) ++h[px[k]];
  return h;
}

std::array<std::uint8_t, 256> identity_lut() {
  std::array<std::uint8_t, 256> lut{};
  for (int i = 0; i < 256; ++i) lut[i] = static_cast<std::uint8_t>(i);
  return lut;
}

std::uint8_t luminance(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  return static_cast<std::uint8_t>((r * 19595u + g * 38470u + b * 7471u + 0x8000u) >> 16);
}

// out = degenerate + factor * (img - degenerate)
Image blend(const Image& degenerate, const Image& img, double factor) {
  Image out(img.width(), img.height(), img.channels());
  const auto d = degenerate.pixels();
  const auto s = img.pixels();
  auto o = out.pixels();
  for (std::size_t k = 0; k < s.size(); ++k) {
    o[k] = to_pixel(d[k] + factor * (static_cast<double>(s[k]) - d[k]));
  }
  return out;
}

}  // namespace

Image horizontal_flip(const Image& img) {
  Image out(img.width(), img.height(), img.channels());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t ch = 0; ch < img.channels(); ++ch)
        out.at(x, y, ch) = img.at(img.width() - 1 - x, y, ch);
  return out;
}

Image vertical_flip(const Image& img) {
  Image out(img.width(), img.height(), img.channels());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t ch = 0; ch < img.channels(); ++ch)
        out.at(x, y, ch) = img.at(x, img.height() - 1 - y, ch);
  return out;
}

Image transpose(const Image& img) {
  Image out(img.height(), img.width(), img.channels());
  for (std::size_t y = 0; y < img.height(); ++y)
    for (std::size_t x = 0; x < img.width(); ++x)
      for (std::size_t ch = 0; ch < img.channels(); ++ch) out.at(y, x, ch) = img.at(x, y, ch);
  return out;
}

Image invert(const Image& img) {
  Image out = img;
  for (auto& p : out.pixels()) p = static_cast<std::uint8_t>(255 - p);
  return out;
}

Image grayscale(const Image& img) {
  if (img.channels() == 1) return img;
  Image out(img.width(), img.height(), img.channels());
  for (std::size_t y = 0; y < img.height(); ++y) {
    for (std::size_t x = 0; x < img.width(); ++x) {
      const auto l = luminance(img.at(x, y, 0), img.at(x, y, 1), img.at(x, y, 2));
      for (std::size_t ch = 0; ch < 3; ++ch) out.at(x, y, ch) = l;
    }
  }
  return out;
}

// Per-channel linear stretch of [min, max] onto [0, 255].
Image autocontrast(const Image& img) {
  std::array<std::array<std::uint8_t, 256>, 3> luts{identity_lut(), identity_lut(), identity_lut()};
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    const auto h = histogram(img, ch);
    int lo = 0;
    while (lo < 256 && h[lo] == 0) ++lo;
    int hi = 255;
    while (hi >= 0 && h[hi] == 0) --hi;
    if (hi <= lo) continue;
    const double scale = 255.0 / (hi - lo);
    const double offset = -lo * scale;
    for (int i = 0; i < 256; ++i) {
      const int v = static_cast<int>(i * scale + offset);
      luts[ch][i] = static_cast<std::uint8_t>(std::clamp(v, 0, 255));
    }
  }
  return map_lut(img, luts);
}

// Per-channel histogram equalization with the step rule used by PIL.
Image equalize(const Image& img) {
  std::array<std::array<std::uint8_t, 256>, 3> luts{identity_lut(), identity_lut(), identity_lut()};
  for (std::size_t ch = 0; ch < img.channels(); ++ch) {
    const auto h = histogram(img, ch);
    std::size_t total = 0;
    std::size_t last_nonzero = 0;
    std::size_t nonzero_bins = 0;
    for (std::size_t i = 0; i < 256; ++i) {
      if (h[i] == 0) continue;
      total += h[i];
      last_nonzero = h[i];
      ++nonzero_bins;
    }
    if (nonzero_bins <= 1) continue;
    const std::size_t step = (total - last_nonzero) / 255;
    if (step == 0) continue;
    std::size_t acc = step / 2;
    for (std::size_t i = 0; i < 256; ++i) {
      luts[ch][i] = static_cast<std::uint8_t>(std::min<std::size_t>(acc / step, 255));
      acc += h[i];
    }
  }
  return map_lut(img, luts);
}

Image resize_bilinear(const Image& img, std::size_t width, std::size_t height) {
  require(width >= 1 && height >= 1, ErrorCode::GeometryError, "resize to an empty image");
  if (width == img.width() && height == img.height()) return img;
  Image out(width, height, img.channels());
  const double fx = static_cast<double>(img.width()) / static_cast<double>(width);
  const double fy = static_cast<double>(img.height()) / static_cast<double>(height);
  for (std::size_t y = 0; y < height; ++y) {
    const double sy = (static_cast<double>(y) + 0.5) * fy - 0.5;
    for (std::size_t x = 0; x < width; ++x) {
      const double sx = (static_cast<double>(x) + 0.5) * fx - 0.5;
      for (std::size_t ch = 0; ch < img.channels(); ++ch) {
        out.at(x, y, ch) = to_pixel(sample(img, sx, sy, ch));
      }
    }
  }
  return out;
}

Image crop(const Image& img, std::size_t x0, std::size_t y0, std::size_t width, std::size_t height) {
  require(width >= 1 && height >= 1 && x0 + width <= img.width() && y0 + height <= img.height(),
          ErrorCode::GeometryError, "crop window exceeds image bounds");
  Image out(width, height, img.channels());
  for (std::size_t y = 0; y < height; ++y)
    for (std::size_t x = 0; x < width; ++x)
      for (std::size_t ch = 0; ch < img.channels(); ++ch) out.at(x, y, ch) = img.at(x0 + x, y0 + y, ch);
  return out;
}

// Counterclockwise rotation about the image center.
Image rotate(const Image& img, double degrees) {
  const double t = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(t);
  const double sn = std::sin(t);
  return warp_affine(img, cs, -sn, sn, cs, 0.0, 0.0);
}

Image shear_x(const Image& img, double shear) { return warp_affine(img, 1.0, -shear, 0.0, 1.0, 0.0, 0.0); }

Image shear_y(const Image& img, double shear) { return warp_affine(img, 1.0, 0.0, -shear, 1.0, 0.0, 0.0); }

Image translate(const Image& img, double dx_fraction, double dy_fraction) {
  const double dx = dx_fraction * static_cast<double>(img.width());
  const double dy = dy_fraction * static_cast<double>(img.height());
  return warp_affine(img, 1.0, 0.0, 0.0, 1.0, -dx, -dy);
}

Image brightness(const Image& img, double factor) {
  return blend(Image(img.width(), img.height(), img.channels()), img, factor);
}

Image contrast(const Image& img, double factor) {
  const Image gray = grayscale(img);
  double sum = 0.0;
  for (std::size_t k = 0; k < gray.pixels().size(); k += gray.channels()) sum += gray.pixels()[k];
  const double count = static_cast<double>(img.width() * img.height());
  const auto mean = static_cast<std::uint8_t>(std::floor(sum / count + 0.5));
  Image degenerate(img.width(), img.height(), img.channels());
  std::fill(degenerate.pixels().begin(), degenerate.pixels().end(), mean);
  return blend(degenerate, img, factor);
}

Image color(const Image& img, double factor) { return blend(grayscale(img), img, factor); }

// Blend against a 3x3 smoothing of the interior; the border row/column is kept.
Image sharpness(const Image& img, double factor) {
  Image smooth = img;
  if (img.width() >= 3 && img.height() >= 3) {
    for (std::size_t y = 1; y + 1 < img.height(); ++y) {
      for (std::size_t x = 1; x + 1 < img.width(); ++x) {
        for (std::size_t ch = 0; ch < img.channels(); ++ch) {
          int acc = 0;
          for (int dy = -1; dy <= 1; ++dy)
            for (int dx = -1; dx <= 1; ++dx) {
              const int w = (dx == 0 && dy == 0) ? 5 : 1;
              acc += w * img.at(x + dx, y + dy, ch);
            }
          smooth.at(x, y, ch) = to_pixel(acc / 13.0);
        }
      }
    }
  }
  return blend(smooth, img, factor);
}

Image posterize(const Image& img, int levels) {
  require(levels >= 2 && levels <= 256, ErrorCode::InvalidArgument, "posterize levels outside [2, 256]");
  std::array<std::uint8_t, 256> lut{};
  for (int i = 0; i < 256; ++i) {
    const int bucket = i * levels / 256;
    lut[i] = to_pixel(bucket * 255.0 / (levels - 1));
  }
  return map_lut(img, {lut, lut, lut});
}

Image solarize(const Image& img, double threshold) {
  Image out = img;
  for (auto& p : out.pixels()) {
    if (p >= threshold) p = static_cast<std::uint8_t>(255 - p);
  }
  return out;
}

Image gaussian_blur(const Image& img, double sigma) {
  require(sigma > 0.0, ErrorCode::InvalidArgument, "blur sigma must be positive");
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double total = 0.0;
  for (int k = -radius; k <= radius; ++k) {
    kernel[k + radius] = std::exp(-(k * k) / (2.0 * sigma * sigma));
    total += kernel[k + radius];
  }
  for (double& w : kernel) w /= total;

  const auto w = static_cast<long>(img.width());
  const auto h = static_cast<long>(img.height());
  const std::size_t channels = img.channels();
  std::vector<double> horizontal(img.pixels().size());
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < channels; ++ch) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const long sx = std::clamp(x + k, 0L, w - 1);
          acc += kernel[k + radius] * img.at(sx, y, ch);
        }
        horizontal[(y * w + x) * channels + ch] = acc;
      }
  Image out(img.width(), img.height(), channels);
  for (long y = 0; y < h; ++y)
    for (long x = 0; x < w; ++x)
      for (std::size_t ch = 0; ch < channels; ++ch) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) {
          const long sy = std::clamp(y + k, 0L, h - 1);
          acc += kernel[k + radius] * horizontal[(sy * w + x) * channels + ch];
        }
        out.at(x, y, ch) = to_pixel(acc);
      }
  return out;
}

}  // namespace tta::transforms

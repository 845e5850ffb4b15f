#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace tta {

/// 8-bit raster, row-major, interleaved channels (1 = gray, 3 = RGB).
class Image {
 public:
  Image(std::size_t width, std::size_t height, std::size_t channels);
  Image(std::size_t width, std::size_t height, std::size_t channels, std::vector<std::uint8_t> pixels);

  std::size_t width() const noexcept { return width_; }
  std::size_t height() const noexcept { return height_; }
  std::size_t channels() const noexcept { return channels_; }

  std::span<const std::uint8_t> pixels() const noexcept { return pixels_; }
  std::span<std::uint8_t> pixels() noexcept { return pixels_; }

  std::uint8_t at(std::size_t x, std::size_t y, std::size_t ch = 0) const noexcept {
    return pixels_[(y * width_ + x) * channels_ + ch];
  }
  std::uint8_t& at(std::size_t x, std::size_t y, std::size_t ch = 0) noexcept {
    return pixels_[(y * width_ + x) * channels_ + ch];
  }

  bool operator==(const Image&) const = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::size_t channels_;
  std::vector<std::uint8_t> pixels_;
};

/// One deterministic transform: a registered name plus ordered parameters.
struct AugmentationSpec {
  std::string name;
  std::vector<std::pair<std::string, double>> params;

  double param(std::string_view key) const;
  bool operator==(const AugmentationSpec&) const = default;
};

// Crop anchors used by the flip/crop/scale views.
enum class CropAnchor : int { Center = 0, TopLeft = 1, TopRight = 2, BottomLeft = 3, BottomRight = 4 };

inline constexpr std::string_view kIdentity = "identity";
inline constexpr std::string_view kFlipCropScale = "flip_crop_scale";

// Version of the expanded-policy transform list and magnitude ranges.
inline constexpr int kExpandedPolicyVersion = 1;

struct MagnitudeRange {
  std::string_view transform;
  std::string_view key;
  double low;
  double high;
};

// The 12 continuous transforms of the expanded policy, in policy order.
std::span<const MagnitudeRange> continuous_transforms();

// Ten evenly spaced values from low to high inclusive.
std::vector<double> magnitude_levels(const MagnitudeRange& range, std::size_t count = 10);

/// Ordered list of specs; index 0 is the identity view and all specs are distinct.
class AugmentationPolicy {
 public:
  AugmentationPolicy(std::string name, std::vector<AugmentationSpec> specs);

  const std::string& name() const noexcept { return name_; }
  std::size_t size() const noexcept { return specs_.size(); }
  std::span<const AugmentationSpec> specs() const noexcept { return specs_; }
  const AugmentationSpec& operator[](std::size_t i) const { return specs_[i]; }

 private:
  std::string name_;
  std::vector<AugmentationSpec> specs_;
};

// True for the untransformed view: `identity`, or the unflipped center crop at scale 1.
bool is_identity_view(const AugmentationSpec& spec);

// Validates a spec against the registered transform table.
void validate_spec(const AugmentationSpec& spec);

/// 2 flips x 5 crops x 3 scales = 30 views, flip-major then crop then scale.
/// Each view resizes the source by the scale factor, crops crop_size square at the
/// anchor, then optionally mirrors horizontally.
AugmentationPolicy standard_policy(std::size_t crop_size = 224, std::size_t source_side = 256);

/// 8 parameterless transforms followed by 12 continuous transforms at 10 levels each.
AugmentationPolicy expanded_policy();

// identity, horizontal flip, vertical flip.
AugmentationPolicy flips_policy();

Image apply(const AugmentationSpec& spec, const Image& img);
std::vector<Image> apply_policy(const AugmentationPolicy& policy, const Image& img);

// Index of the identity view within an arbitrary spec list, if any.
std::size_t find_identity_index(std::span<const AugmentationSpec> specs);

// Manifest: one `index<TAB>name<TAB>key=value,...` line per spec. Lines starting
// with '#' are comments.
std::string format_manifest(const AugmentationPolicy& policy);
std::vector<AugmentationSpec> parse_manifest_specs(std::string_view text);
AugmentationPolicy parse_manifest(std::string_view text, std::string name = "manifest");
void write_manifest(const std::filesystem::path& path, const AugmentationPolicy& policy);
AugmentationPolicy read_manifest(const std::filesystem::path& path);

// Named policies `standard`, `expanded`, `flips`, otherwise a manifest path.
AugmentationPolicy resolve_policy(std::string_view name_or_path);

// Low-level pixel operations shared by the transform table.
namespace transforms {
Image horizontal_flip(const Image& img);
Image vertical_flip(const Image& img);
Image transpose(const Image& img);
Image invert(const Image& img);
Image grayscale(const Image& img);
Image autocontrast(const Image& img);
Image equalize(const Image& img);
Image resize_bilinear(const Image& img, std::size_t width, std::size_t height);
Image crop(const Image& img, std::size_t x0, std::size_t y0, std::size_t width, std::size_t height);
Image rotate(const Image& img, double degrees);
Image shear_x(const Image& img, double shear);
Image shear_y(const Image& img, double shear);
Image translate(const Image& img, double dx_fraction, double dy_fraction);
Image brightness(const Image& img, double factor);
Image contrast(const Image& img, double factor);
Image color(const Image& img, double factor);
Image sharpness(const Image& img, double factor);
Image posterize(const Image& img, int levels);
Image solarize(const Image& img, double threshold);
Image gaussian_blur(const Image& img, double sigma);
}  // namespace transforms

}  // namespace tta

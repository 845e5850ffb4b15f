#include "tta/augment.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "tta/error.hpp"

namespace tta {

Image::Image(std::size_t width, std::size_t height, std::size_t channels)
    : Image(width, height, channels, std::vector<std::uint8_t>(width * height * channels, 0)) {}

Image::Image(std::size_t width, std::size_t height, std::size_t channels, std::vector<std::uint8_t> pixels)
    : width_(width), height_(height), channels_(channels), pixels_(std::move(pixels)) {
  require(width_ >= 1 && height_ >= 1, ErrorCode::GeometryError, "image needs width, height >= 1");
  require(channels_ == 1 || channels_ == 3, ErrorCode::InvalidArgument, "image channels must be 1 or 3");
  require(pixels_.size() == width_ * height_ * channels_, ErrorCode::DimensionMismatch,
          "pixel buffer does not match width*height*channels");
}

double AugmentationSpec::param(std::string_view key) const {
  for (const auto& [k, v] : params) {
    if (k == key) return v;
  }
  fail(ErrorCode::InvalidArgument, "spec '" + name + "' has no parameter '" + std::string(key) + "'");
}

namespace {

// name, parameter key (empty when parameterless)
struct TransformEntry {
  std::string_view name;
  std::string_view key;
  double low;
  double high;
};

constexpr std::array<std::string_view, 8> kBinaryTransforms = {
    "identity", "hflip", "vflip", "autocontrast", "invert", "equalize", "grayscale", "transpose"};

constexpr std::array<MagnitudeRange, 12> kContinuous = {{
    {"rotate", "degrees", -30.0, 30.0},
    {"shear_x", "shear", -0.3, 0.3},
    {"shear_y", "shear", -0.3, 0.3},
    {"translate_x", "offset", -0.3, 0.3},
    {"translate_y", "offset", -0.3, 0.3},
    {"brightness", "factor", 0.1, 1.9},
    {"contrast", "factor", 0.1, 1.9},
    {"color", "factor", 0.1, 1.9},
    {"sharpness", "factor", 0.1, 1.9},
    {"posterize", "levels", 4.0, 40.0},
    {"solarize", "threshold", 32.0, 248.0},
    {"gaussian_blur", "sigma", 0.2, 2.0},
}};

const MagnitudeRange* find_continuous(std::string_view name) {
  for (const auto& r : kContinuous) {
    if (r.transform == name) return &r;
  }
  return nullptr;
}

bool is_binary(std::string_view name) {
  return std::find(kBinaryTransforms.begin(), kBinaryTransforms.end(), name) != kBinaryTransforms.end();
}

double anchor_origin(std::size_t extent, std::size_t window, bool far_side) {
  return far_side ? static_cast<double>(extent - window) : 0.0;
}

Image apply_flip_crop_scale(const AugmentationSpec& spec, const Image& img) {
  const double scale = spec.param("scale");
  const auto size = static_cast<std::size_t>(spec.param("size"));
  const auto anchor = static_cast<CropAnchor>(static_cast<int>(spec.param("anchor")));
  const bool flip = spec.param("flip") != 0.0;

  const auto width = static_cast<std::size_t>(std::lround(static_cast<double>(img.width()) * scale));
  const auto height = static_cast<std::size_t>(std::lround(static_cast<double>(img.height()) * scale));
  require(size <= width && size <= height, ErrorCode::GeometryError,
          "crop of " + std::to_string(size) + " exceeds the " + std::to_string(width) + "x" +
              std::to_string(height) + " scaled image");
  const Image scaled = transforms::resize_bilinear(img, width, height);

  std::size_t x0 = (width - size) / 2;
  std::size_t y0 = (height - size) / 2;
  if (anchor != CropAnchor::Center) {
    const bool right = anchor == CropAnchor::TopRight || anchor == CropAnchor::BottomRight;
    const bool bottom = anchor == CropAnchor::BottomLeft || anchor == CropAnchor::BottomRight;
    x0 = static_cast<std::size_t>(anchor_origin(width, size, right));
    y0 = static_cast<std::size_t>(anchor_origin(height, size, bottom));
  }
  Image out = transforms::crop(scaled, x0, y0, size, size);
  return flip ? transforms::horizontal_flip(out) : out;
}

std::string format_number(double v) {
  std::array<char, 64> buf{};
  const auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), end);
}

}  // namespace

std::span<const MagnitudeRange> continuous_transforms() { return kContinuous; }

std::vector<double> magnitude_levels(const MagnitudeRange& range, std::size_t count) {
  std::vector<double> out(count);
  if (count == 1) {
    out[0] = range.low;
    return out;
  }
  const double span = static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const double t = static_cast<double>(i);
    out[i] = (range.low * (span - t) + range.high * t) / span;
  }
  return out;
}

void validate_spec(const AugmentationSpec& spec) {
  if (is_binary(spec.name)) {
    require(spec.params.empty(), ErrorCode::InvalidArgument, "'" + spec.name + "' takes no parameters");
    return;
  }
  if (spec.name == kFlipCropScale) {
    require(spec.params.size() == 4, ErrorCode::InvalidArgument, "flip_crop_scale takes flip, anchor, scale, size");
    const double flip = spec.param("flip");
    const double anchor = spec.param("anchor");
    const double scale = spec.param("scale");
    const double size = spec.param("size");
    require(flip == 0.0 || flip == 1.0, ErrorCode::InvalidArgument, "flip must be 0 or 1");
    require(anchor >= 0.0 && anchor <= 4.0 && anchor == std::floor(anchor), ErrorCode::InvalidArgument,
            "anchor must be an integer in [0, 4]");
    require(scale >= 1.0 && scale <= 4.0, ErrorCode::InvalidArgument, "scale must lie in [1, 4]");
    require(size >= 1.0 && size == std::floor(size), ErrorCode::InvalidArgument, "size must be a positive integer");
    return;
  }
  if (const auto* range = find_continuous(spec.name)) {
    require(spec.params.size() == 1 && spec.params[0].first == range->key, ErrorCode::InvalidArgument,
            "'" + spec.name + "' takes a single '" + std::string(range->key) + "' parameter");
    const double v = spec.params[0].second;
    require(std::isfinite(v) && v >= range->low && v <= range->high, ErrorCode::InvalidArgument,
            "'" + spec.name + "' parameter outside its declared range");
    if (spec.name == "posterize") {
      require(v == std::floor(v), ErrorCode::InvalidArgument, "posterize levels must be an integer");
    }
    return;
  }
  fail(ErrorCode::UnknownTransform, "unregistered transform '" + spec.name + "'");
}

bool is_identity_view(const AugmentationSpec& spec) {
  if (spec.name == kIdentity) return true;
  if (spec.name != kFlipCropScale) return false;
  return spec.param("flip") == 0.0 && spec.param("anchor") == 0.0 && spec.param("scale") == 1.0;
}

AugmentationPolicy::AugmentationPolicy(std::string name, std::vector<AugmentationSpec> specs)
    : name_(std::move(name)), specs_(std::move(specs)) {
  require(!specs_.empty(), ErrorCode::InvalidArgument, "policy needs at least one spec");
  for (const auto& s : specs_) validate_spec(s);
  require(is_identity_view(specs_[0]), ErrorCode::InvalidArgument, "policy spec 0 must be the identity view");
  for (std::size_t i = 0; i < specs_.size(); ++i)
    for (std::size_t j = i + 1; j < specs_.size(); ++j)
      require(!(specs_[i] == specs_[j]), ErrorCode::InvalidArgument,
              "policy specs " + std::to_string(i) + " and " + std::to_string(j) + " are identical");
}

AugmentationPolicy standard_policy(std::size_t crop_size, std::size_t source_side) {
  // Scale 1 is the smallest view, so it bounds the crop.
  require(crop_size >= 1 && crop_size <= source_side, ErrorCode::InvalidCropSize,
          "crop " + std::to_string(crop_size) + " does not fit a " + std::to_string(source_side) + " source");
  constexpr std::array<double, 3> kScales = {1.0, 1.04, 1.10};
  std::vector<AugmentationSpec> specs;
  for (int flip = 0; flip < 2; ++flip)
    for (int anchor = 0; anchor < 5; ++anchor)
      for (double scale : kScales)
        specs.push_back({std::string(kFlipCropScale),
                         {{"flip", flip}, {"anchor", anchor}, {"scale", scale}, {"size", static_cast<double>(crop_size)}}});
  return AugmentationPolicy("standard", std::move(specs));
}

AugmentationPolicy expanded_policy() {
  std::vector<AugmentationSpec> specs;
  for (auto name : kBinaryTransforms) specs.push_back({std::string(name), {}});
  for (const auto& range : kContinuous)
    for (double v : magnitude_levels(range))
      specs.push_back({std::string(range.transform), {{std::string(range.key), v}}});
  return AugmentationPolicy("expanded", std::move(specs));
}

AugmentationPolicy flips_policy() {
  return AugmentationPolicy("flips", {{"identity", {}}, {"hflip", {}}, {"vflip", {}}});
}

Image apply(const AugmentationSpec& spec, const Image& img) {
  validate_spec(spec);
  using namespace transforms;
  const auto& n = spec.name;
  if (n == kIdentity) return img;
  if (n == kFlipCropScale) return apply_flip_crop_scale(spec, img);
  if (n == "hflip") return horizontal_flip(img);
  if (n == "vflip") return vertical_flip(img);
  if (n == "autocontrast") return autocontrast(img);
  if (n == "invert") return invert(img);
  if (n == "equalize") return equalize(img);
  if (n == "grayscale") return grayscale(img);
  if (n == "transpose") return transforms::transpose(img);

  const double v = spec.params.front().second;
  if (n == "rotate") return rotate(img, v);
  if (n == "shear_x") return shear_x(img, v);
  if (n == "shear_y") return shear_y(img, v);
  if (n == "translate_x") return translate(img, v, 0.0);
  if (n == "translate_y") return translate(img, 0.0, v);
  if (n == "brightness") return brightness(img, v);
  if (n == "contrast") return contrast(img, v);
  if (n == "color") return color(img, v);
  if (n == "sharpness") return sharpness(img, v);
  if (n == "posterize") return posterize(img, static_cast<int>(v));
  if (n == "solarize") return solarize(img, v);
  if (n == "gaussian_blur") return gaussian_blur(img, v);
  fail(ErrorCode::UnknownTransform, "unregistered transform '" + n + "'");
}

std::vector<Image> apply_policy(const AugmentationPolicy& policy, const Image& img) {
  std::vector<Image> out;
  out.reserve(policy.size());
  for (const auto& spec : policy.specs()) out.push_back(apply(spec, img));
  return out;
}

std::size_t find_identity_index(std::span<const AugmentationSpec> specs) {
  for (std::size_t i = 0; i < specs.size(); ++i) {
    if (is_identity_view(specs[i])) return i;
  }
  fail(ErrorCode::InvalidArgument, "no identity view among the specs");
}

std::string format_manifest(const AugmentationPolicy& policy) {
  std::ostringstream os;
  os << "# policy=" << policy.name() << " version=" << kExpandedPolicyVersion << '\n';
  for (std::size_t i = 0; i < policy.size(); ++i) {
    const auto& spec = policy[i];
    os << i << '\t' << spec.name << '\t';
    for (std::size_t k = 0; k < spec.params.size(); ++k) {
      if (k) os << ',';
      os << spec.params[k].first << '=' << format_number(spec.params[k].second);
    }
    os << '\n';
  }
  return os.str();
}

std::vector<AugmentationSpec> parse_manifest_specs(std::string_view text) {
  std::vector<AugmentationSpec> specs;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') continue;

    const auto where = " on manifest line " + std::to_string(line_no);
    const auto tab1 = line.find('\t');
    const auto tab2 = tab1 == std::string_view::npos ? tab1 : line.find('\t', tab1 + 1);
    require(tab2 != std::string_view::npos, ErrorCode::ManifestParse, "expected three tab-separated fields" + where);

    std::size_t index = 0;
    const auto idx_field = line.substr(0, tab1);
    const auto [p, ec] = std::from_chars(idx_field.data(), idx_field.data() + idx_field.size(), index);
    require(ec == std::errc{} && p == idx_field.data() + idx_field.size(), ErrorCode::ManifestParse, "bad index" + where);
    require(index == specs.size(), ErrorCode::ManifestParse, "indices must ascend from 0" + where);

    AugmentationSpec spec{std::string(line.substr(tab1 + 1, tab2 - tab1 - 1)), {}};
    std::string_view params = line.substr(tab2 + 1);
    while (!params.empty()) {
      const auto comma = params.find(',');
      const auto item = params.substr(0, comma);
      params = comma == std::string_view::npos ? std::string_view{} : params.substr(comma + 1);
      const auto eq = item.find('=');
      require(eq != std::string_view::npos && eq > 0, ErrorCode::ManifestParse, "expected key=value" + where);
      const auto value = item.substr(eq + 1);
      double v = 0.0;
      const auto [vp, vec] = std::from_chars(value.data(), value.data() + value.size(), v);
      require(vec == std::errc{} && vp == value.data() + value.size(), ErrorCode::ManifestParse,
              "bad number '" + std::string(value) + "'" + where);
      spec.params.emplace_back(std::string(item.substr(0, eq)), v);
    }
    specs.push_back(std::move(spec));
  }
  return specs;
}

AugmentationPolicy parse_manifest(std::string_view text, std::string name) {
  // The header comment, when present, names the policy.
  if (text.starts_with("# policy=")) {
    const auto rest = text.substr(9);
    name = std::string(rest.substr(0, rest.find_first_of(" \t\n")));
  }
  return AugmentationPolicy(std::move(name), parse_manifest_specs(text));
}

void write_manifest(const std::filesystem::path& path, const AugmentationPolicy& policy) {
  std::ofstream out(path, std::ios::binary);
  out << format_manifest(policy);
  require(static_cast<bool>(out), ErrorCode::IoError, "cannot write manifest " + path.string());
}

AugmentationPolicy read_manifest(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCode::IoError, "cannot open manifest " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_manifest(ss.str(), path.stem().string());
}

AugmentationPolicy resolve_policy(std::string_view name_or_path) {
  if (name_or_path == "standard") return standard_policy();
  if (name_or_path == "expanded") return expanded_policy();
  if (name_or_path == "flips") return flips_policy();
  const std::filesystem::path path(name_or_path);
  require(std::filesystem::is_regular_file(path), ErrorCode::InvalidArgument,
          "unknown policy '" + std::string(name_or_path) + "'");
  return read_manifest(path);
}

}  // namespace tta

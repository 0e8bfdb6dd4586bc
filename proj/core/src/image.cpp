#include "dgd/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>

#include "dgd/error.hpp"

namespace dgd {

namespace {

png_uint_32 format_for(int channels) {
  switch (channels) {
    case 1: return PNG_FORMAT_GRAY;
    case 3: return PNG_FORMAT_RGB;
    default: throw Error(Errc::InvalidArgument, "images must have 1 or 3 channels");
  }
}

void check_shape(const Image& image) {
  format_for(image.channels);
  const std::size_t expected = static_cast<std::size_t>(image.width) * static_cast<std::size_t>(image.height) *
                               static_cast<std::size_t>(image.channels);
  if (image.width < 1 || image.height < 1 || image.pixels.size() != expected) {
    throw Error(Errc::ShapeMismatch, "image buffer does not match its dimensions");
  }
}

Image finish_read(png_image& png, int channels, const std::string& what) {
  png.format = format_for(channels);
  Image image;
  image.width = static_cast<int>(png.width);
  image.height = static_cast<int>(png.height);
  image.channels = channels;
  image.pixels.resize(PNG_IMAGE_SIZE(png));
  if (png_image_finish_read(&png, nullptr, image.pixels.data(), 0, nullptr) == 0) {
    const std::string message = png.message;
    png_image_free(&png);
    throw Error(Errc::ParseError, what + ": " + message);
  }
  return image;
}

}  // namespace

Image read_png(const std::filesystem::path& path, int channels) {
  if (!std::filesystem::exists(path)) throw Error(Errc::MissingFile, "missing image " + path.string());
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_file(&png, path.string().c_str()) == 0) {
    throw Error(Errc::ParseError, path.string() + ": " + png.message);
  }
  return finish_read(png, channels, path.string());
}

Image decode_png(std::span<const std::uint8_t> bytes, int channels) {
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  if (png_image_begin_read_from_memory(&png, bytes.data(), bytes.size()) == 0) {
    throw Error(Errc::ParseError, std::string("PNG decode: ") + png.message);
  }
  return finish_read(png, channels, "PNG decode");
}

void write_png(const std::filesystem::path& path, const Image& image) {
  check_shape(image);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = format_for(image.channels);
  if (png_image_write_to_file(&png, path.string().c_str(), 0, image.pixels.data(), 0, nullptr) == 0) {
    throw Error(Errc::IoError, path.string() + ": " + png.message);
  }
}

std::string encode_png(const Image& image) {
  check_shape(image);
  png_image png{};
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = format_for(image.channels);
  png_alloc_size_t size = 0;
  if (png_image_write_to_memory(&png, nullptr, &size, 0, image.pixels.data(), 0, nullptr) == 0) {
    throw Error(Errc::IoError, std::string("PNG encode: ") + png.message);
  }
  std::string out(size, '\0');
  if (png_image_write_to_memory(&png, out.data(), &size, 0, image.pixels.data(), 0, nullptr) == 0) {
    throw Error(Errc::IoError, std::string("PNG encode: ") + png.message);
  }
  out.resize(size);
  return out;
}

template <typename T>
Image to_image(std::span<const T> values, int width, int height, int channels) {
  Image image;
  image.width = width;
  image.height = height;
  image.channels = channels;
  const std::size_t expected =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * static_cast<std::size_t>(channels);
  if (values.size() != expected) throw Error(Errc::ShapeMismatch, "value buffer does not match the image size");
  image.pixels.resize(expected);
  for (std::size_t i = 0; i < expected; ++i) {
    const double v = std::clamp(static_cast<double>(values[i]), 0.0, 1.0);
    image.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return image;
}

std::vector<float> to_float(const Image& image) {
  std::vector<float> out(image.pixels.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = static_cast<float>(image.pixels[i]) / 255.0F;
  return out;
}

Image mask_to_image(const Mask& mask) {
  Image image;
  image.width = mask.width;
  image.height = mask.height;
  image.channels = 1;
  image.pixels.resize(mask.data.size());
  for (std::size_t i = 0; i < mask.data.size(); ++i) image.pixels[i] = mask.data[i] != 0 ? 255 : 0;
  return image;
}

Mask image_to_mask(const Image& image) {
  if (image.channels != 1) throw Error(Errc::InvalidArgument, "masks are single-channel");
  Mask mask;
  mask.width = image.width;
  mask.height = image.height;
  mask.data.resize(image.pixels.size());
  for (std::size_t i = 0; i < image.pixels.size(); ++i) mask.data[i] = image.pixels[i] != 0 ? 1 : 0;
  return mask;
}

void write_mask(const std::filesystem::path& path, const Mask& mask) { write_png(path, mask_to_image(mask)); }

Mask read_mask(const std::filesystem::path& path) { return image_to_mask(read_png(path, 1)); }

template Image to_image<float>(std::span<const float>, int, int, int);
template Image to_image<double>(std::span<const double>, int, int, int);

}  // namespace dgd

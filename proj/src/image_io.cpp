#include <png.h>

#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "sdsr/image.hpp"

namespace sdsr {

namespace {

std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("unreadable file: " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

class PnmCursor {
public:
  PnmCursor(const std::vector<unsigned char>& bytes, const std::string& path)
      : bytes_(bytes), path_(path) {}

  long next_int() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail();
    long v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + (bytes_[pos_] - '0');
      if (v > (1L << 30)) fail();
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates the header from binary data.
  void skip_single_space() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail();
    ++pos_;
  }

  std::size_t pos() const { return pos_; }
  [[noreturn]] void fail() const { throw IoError("unreadable file: " + path_); }

private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  const std::string& path_;
  std::size_t pos_ = 2;
};

Image load_pgm(const std::vector<unsigned char>& bytes, const std::string& path) {
  const bool binary = bytes[1] == '5';
  PnmCursor cur(bytes, path);
  const long width = cur.next_int();
  const long height = cur.next_int();
  const long maxval = cur.next_int();
  if (width == 0 || height == 0) throw IoError("zero dimensions: " + path);
  if (maxval == 0 || maxval > 255) throw IoError("unsupported bit depth: " + path);

  const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<double> data(count);
  if (binary) {
    cur.skip_single_space();
    if (bytes.size() - cur.pos() < count) cur.fail();
    const unsigned char* px = bytes.data() + cur.pos();
    for (std::size_t i = 0; i < count; ++i) data[i] = static_cast<double>(px[i]);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      const long v = cur.next_int();
      if (v > maxval) cur.fail();
      data[i] = static_cast<double>(v);
    }
  }
  return Image(static_cast<int>(height), static_cast<int>(width), std::move(data));
}

Image load_png(const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) throw IoError("unreadable file: " + path);
  if ((png.format & (PNG_FORMAT_FLAG_COLOR | PNG_FORMAT_FLAG_LINEAR | PNG_FORMAT_FLAG_ALPHA)) != 0) {
    png_image_free(&png);
    throw IoError("unsupported bit depth or color type (need 8-bit grayscale): " + path);
  }
  if (png.width == 0 || png.height == 0) {
    png_image_free(&png);
    throw IoError("zero dimensions: " + path);
  }
  png.format = PNG_FORMAT_GRAY;
  std::vector<unsigned char> buf(PNG_IMAGE_SIZE(png));
  if (!png_image_finish_read(&png, nullptr, buf.data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoError("unreadable file: " + path);
  }
  std::vector<double> data(buf.begin(), buf.end());
  return Image(static_cast<int>(png.height), static_cast<int>(png.width), std::move(data));
}

}  // namespace

Image load_image(const std::string& path) {
  const auto bytes = read_all(path);
  if (bytes.size() >= 2 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '2'))
    return load_pgm(bytes, path);
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) return load_png(path);
  throw IoError("unreadable file (not PGM or PNG): " + path);
}

unsigned char quantize_pixel(double v) noexcept {
  if (!(v > 0.0)) return 0;  // also maps NaN to 0
  if (v >= 255.0) return 255;
  return static_cast<unsigned char>(std::round(v));
}

void save_image(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("unwritable path: " + path);
  out << "P5\n" << img.width() << ' ' << img.height() << "\n255\n";
  std::vector<unsigned char> bytes(img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < bytes.size(); ++i) bytes[i] = quantize_pixel(px[i]);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("unwritable path: " + path);
}

}  // namespace sdsr

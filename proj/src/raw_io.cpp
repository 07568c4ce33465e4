#include "sdsr/raw_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>
#include <vector>

namespace sdsr {

namespace {

constexpr const char* kMagic = "SDSRF64";

std::uint64_t to_little(std::uint64_t v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    std::uint64_t r = 0;
    for (int i = 0; i < 8; ++i) r |= ((v >> (8 * i)) & 0xffu) << (8 * (7 - i));
    return r;
  }
}

}  // namespace

void save_raw(const Image& img, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("unwritable path: " + path);
  out << kMagic << '\n' << img.width() << ' ' << img.height() << '\n';
  std::vector<std::uint64_t> words(img.size());
  auto px = img.pixels();
  for (std::size_t i = 0; i < words.size(); ++i) words[i] = to_little(std::bit_cast<std::uint64_t>(px[i]));
  out.write(reinterpret_cast<const char*>(words.data()),
            static_cast<std::streamsize>(words.size() * sizeof(std::uint64_t)));
  if (!out) throw IoError("unwritable path: " + path);
}

Image load_raw(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("unreadable file: " + path);
  std::string magic;
  long width = 0;
  long height = 0;
  in >> magic >> width >> height;
  if (!in || magic != kMagic) throw IoError("unreadable file (bad raw header): " + path);
  if (width <= 0 || height <= 0) throw IoError("zero dimensions: " + path);
  in.get();  // single newline before payload
  const auto count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  std::vector<std::uint64_t> words(count);
  in.read(reinterpret_cast<char*>(words.data()), static_cast<std::streamsize>(count * sizeof(std::uint64_t)));
  if (static_cast<std::size_t>(in.gcount()) != count * sizeof(std::uint64_t))
    throw IoError("unreadable file (truncated): " + path);
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) data[i] = std::bit_cast<double>(to_little(words[i]));
  return Image(static_cast<int>(height), static_cast<int>(width), std::move(data));
}

}  // namespace sdsr

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <zlib.h>

#include "nsdf/shading/shading.hpp"

namespace nsdf::shading {

double image_mse(const ImageBuffer& a, const ImageBuffer& b) {
  if (a.width != b.width || a.height != b.height)
    throw Error(ErrorKind::contract,
                "image sizes differ: " + std::to_string(a.width) + "x" + std::to_string(a.height) +
                    " vs " + std::to_string(b.width) + "x" + std::to_string(b.height));
  double sum = 0;
  for (size_t i = 0; i < a.rgb.size(); ++i) {
    double d = double(a.rgb[i]) - double(b.rgb[i]);
    sum += d * d;
  }
  return a.rgb.empty() ? 0.0 : sum / double(a.rgb.size());
}

namespace {
uint8_t to_byte(float v) {
  float c = std::clamp(v, 0.0f, 1.0f);
  return uint8_t(std::lround(c * 255.0f));
}
}  // namespace

void write_ppm(const ImageBuffer& image, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::validation, "cannot write image " + path.string());
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  std::vector<uint8_t> row(size_t(image.width) * 3);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      size_t p = (size_t(y) * image.width + x) * 3;
      row[size_t(x) * 3 + 0] = to_byte(image.rgb[p + 0]);
      row[size_t(x) * 3 + 1] = to_byte(image.rgb[p + 1]);
      row[size_t(x) * 3 + 2] = to_byte(image.rgb[p + 2]);
    }
    out.write(reinterpret_cast<const char*>(row.data()), row.size());
  }
}

ImageBuffer read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::parse, "cannot open image " + path.string());
  std::string magic;
  int w = 0, h = 0, maxval = 0;
  in >> magic >> w >> h >> maxval;
  if (magic != "P6" || maxval != 255 || w <= 0 || h <= 0)
    throw Error(ErrorKind::parse, path.string() + " is not an 8-bit P6 pixmap");
  in.get();  // single whitespace after the header
  ImageBuffer img(w, h);
  std::vector<uint8_t> data(size_t(w) * h * 3);
  in.read(reinterpret_cast<char*>(data.data()), data.size());
  if (!in) throw Error(ErrorKind::parse, path.string() + " is truncated");
  for (size_t i = 0; i < data.size(); ++i) img.rgb[i] = float(data[i]) / 255.0f;
  return img;
}

// Minimal RGB8 PNG writer on top of zlib.
void write_png(const ImageBuffer& image, const std::filesystem::path& path) {
  const int w = image.width, h = image.height;
  std::vector<uint8_t> raw;
  raw.reserve(size_t(h) * (size_t(w) * 3 + 1));
  for (int y = 0; y < h; ++y) {
    raw.push_back(0);  // filter: none
    for (int x = 0; x < w; ++x) {
      size_t p = (size_t(y) * w + x) * 3;
      raw.push_back(to_byte(image.rgb[p + 0]));
      raw.push_back(to_byte(image.rgb[p + 1]));
      raw.push_back(to_byte(image.rgb[p + 2]));
    }
  }
  uLongf bound = compressBound(uLong(raw.size()));
  std::vector<uint8_t> compressed(bound);
  if (compress2(compressed.data(), &bound, raw.data(), uLong(raw.size()), 9) != Z_OK)
    throw Error(ErrorKind::validation, "deflate failed while writing " + path.string());
  compressed.resize(bound);

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::validation, "cannot write image " + path.string());

  auto write_be32 = [](std::vector<uint8_t>& v, uint32_t x) {
    v.push_back(uint8_t(x >> 24));
    v.push_back(uint8_t(x >> 16));
    v.push_back(uint8_t(x >> 8));
    v.push_back(uint8_t(x));
  };
  auto write_chunk = [&](const char type[4], const std::vector<uint8_t>& data) {
    std::vector<uint8_t> head;
    write_be32(head, uint32_t(data.size()));
    out.write(reinterpret_cast<const char*>(head.data()), head.size());
    out.write(type, 4);
    if (!data.empty()) out.write(reinterpret_cast<const char*>(data.data()), data.size());
    uint32_t crc = crc32(0, reinterpret_cast<const Bytef*>(type), 4);
    if (!data.empty()) crc = crc32(crc, data.data(), uInt(data.size()));
    std::vector<uint8_t> tail;
    write_be32(tail, crc);
    out.write(reinterpret_cast<const char*>(tail.data()), tail.size());
  };

  const uint8_t sig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  out.write(reinterpret_cast<const char*>(sig), 8);
  std::vector<uint8_t> ihdr;
  write_be32(ihdr, uint32_t(w));
  write_be32(ihdr, uint32_t(h));
  ihdr.push_back(8);  // bit depth
  ihdr.push_back(2);  // color type: truecolor
  ihdr.push_back(0);
  ihdr.push_back(0);
  ihdr.push_back(0);
  write_chunk("IHDR", ihdr);
  write_chunk("IDAT", compressed);
  write_chunk("IEND", {});
}

}  // namespace nsdf::shading

#include "solar/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cctype>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>

#include "solar/errors.hpp"

namespace solar {

namespace {

std::uint8_t to_byte(double v) {
  const double c = std::clamp(v, 0.0, 1.0);
  return static_cast<std::uint8_t>(std::lround(c * 255.0));
}

// Reads the next whitespace-separated header token, skipping '#' comments.
std::string next_token(std::istream& in) {
  std::string tok;
  int ch;
  while ((ch = in.get()) != EOF) {
    if (ch == '#') {
      while ((ch = in.get()) != EOF && ch != '\n') {
      }
      continue;
    }
    if (std::isspace(ch)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(ch));
  }
  return tok;
}

int parse_int(const std::string& tok, const std::filesystem::path& path) {
  try {
    std::size_t used = 0;
    const int v = std::stoi(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw FormatError("bad image header in " + path.string());
  }
}

}  // namespace

void write_ppm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "P6\n" << img.width << " " << img.height << "\n255\n";
  std::string buf(img.pixels.size(), '\0');
  for (std::size_t i = 0; i < img.pixels.size(); ++i) buf[i] = static_cast<char>(to_byte(img.pixels[i]));
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw IoError("short write to " + path.string());
}

Image read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing image file " + path.string());
  if (next_token(in) != "P6") throw FormatError("not a binary PPM: " + path.string());
  const int w = parse_int(next_token(in), path);
  const int h = parse_int(next_token(in), path);
  const int maxval = parse_int(next_token(in), path);
  if (w <= 0 || h <= 0 || maxval != 255) throw FormatError("unsupported PPM header in " + path.string());
  Image img(w, h);
  std::string buf(img.pixels.size(), '\0');
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (in.gcount() != static_cast<std::streamsize>(buf.size())) throw FormatError("truncated PPM " + path.string());
  for (std::size_t i = 0; i < buf.size(); ++i) img.pixels[i] = static_cast<unsigned char>(buf[i]) / 255.0;
  return img;
}

void write_pfm(const std::filesystem::path& path, const Image& img) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  out << "PF\n" << img.width << " " << img.height << "\n-1.0\n";
  for (int y = img.height - 1; y >= 0; --y)
    for (int x = 0; x < img.width; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        const float f = static_cast<float>(img.at(x, y, ch));
        char b[4];
        std::memcpy(b, &f, 4);
        out.write(b, 4);
      }
  if (!out) throw IoError("short write to " + path.string());
}

Image read_pfm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("missing image file " + path.string());
  if (next_token(in) != "PF") throw FormatError("not a colour PFM: " + path.string());
  const int w = parse_int(next_token(in), path);
  const int h = parse_int(next_token(in), path);
  const double scale = std::stod(next_token(in));
  if (w <= 0 || h <= 0 || scale >= 0) throw FormatError("unsupported PFM header in " + path.string());
  Image img(w, h);
  for (int y = h - 1; y >= 0; --y)
    for (int x = 0; x < w; ++x)
      for (int ch = 0; ch < 3; ++ch) {
        char b[4];
        if (!in.read(b, 4)) throw FormatError("truncated PFM " + path.string());
        float f;
        std::memcpy(&f, b, 4);
        img.at(x, y, ch) = f;
      }
  return img;
}

Image quantize_8bit(const Image& img) {
  Image out = img;
  for (double& v : out.pixels) v = to_byte(v) / 255.0;
  return out;
}

}  // namespace solar

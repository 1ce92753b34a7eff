#include "cylin/image_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <string>

namespace cylin {

namespace {

// Reads the next whitespace-delimited header token, skipping '#' comments.
std::string header_token(std::istream& in) {
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

std::size_t header_number(std::istream& in, const std::filesystem::path& path) {
  const std::string tok = header_token(in);
  try {
    return std::stoul(tok);
  } catch (const std::exception&) {
    throw ConfigError("malformed PPM header in " + path.string());
  }
}

}  // namespace

Image8 read_ppm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  if (header_token(in) != "P6") throw ConfigError(path.string() + " is not a binary P6 PPM");
  Image8 img;
  img.width = header_number(in, path);
  img.height = header_number(in, path);
  if (header_number(in, path) != 255) throw ConfigError(path.string() + ": only maxval 255 is supported");
  img.rgb.resize(img.width * img.height * 3);
  in.read(reinterpret_cast<char*>(img.rgb.data()), static_cast<std::streamsize>(img.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(img.rgb.size())) {
    throw ConfigError(path.string() + ": truncated pixel data");
  }
  return img;
}

void write_ppm(const std::filesystem::path& path, const Image8& image) {
  if (image.rgb.size() != image.width * image.height * 3) throw ShapeError("write_ppm: pixel buffer size mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "P6\n" << image.width << " " << image.height << "\n255\n";
  out.write(reinterpret_cast<const char*>(image.rgb.data()), static_cast<std::streamsize>(image.rgb.size()));
}

void write_pgm(const std::filesystem::path& path, std::size_t width, std::size_t height,
               const std::vector<std::uint8_t>& grey) {
  if (grey.size() != width * height) throw ShapeError("write_pgm: pixel buffer size mismatch");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << "P5\n" << width << " " << height << "\n255\n";
  out.write(reinterpret_cast<const char*>(grey.data()), static_cast<std::streamsize>(grey.size()));
}

TensorF image_to_tensor(const Image8& image) {
  TensorF t({1, 3, image.height, image.width});
  for (std::size_t h = 0; h < image.height; ++h) {
    for (std::size_t w = 0; w < image.width; ++w) {
      for (std::size_t c = 0; c < 3; ++c) {
        t(0, c, h, w) = static_cast<float>(image.rgb[(h * image.width + w) * 3 + c] / 127.5 - 1.0);
      }
    }
  }
  return t;
}

std::uint8_t to_byte(double value) {
  const double q = std::floor((value + 1.0) * 127.5 + 0.5);
  return static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
}

Image8 tensor_to_image(const TensorF& tensor) {
  const Shape s = tensor.shape();
  if (s.n < 1 || s.c != 3) throw ShapeError("tensor_to_image expects [N, 3, H, W], got " + s.str());
  Image8 img{s.w, s.h, std::vector<std::uint8_t>(s.w * s.h * 3)};
  for (std::size_t h = 0; h < s.h; ++h) {
    for (std::size_t w = 0; w < s.w; ++w) {
      for (std::size_t c = 0; c < 3; ++c) img.rgb[(h * s.w + w) * 3 + c] = to_byte(tensor(0, c, h, w));
    }
  }
  return img;
}

std::vector<std::uint8_t> plane_to_grey(std::span<const double> plane, double lo, double hi) {
  std::vector<std::uint8_t> out(plane.size());
  const double span = hi > lo ? hi - lo : 1.0;
  for (std::size_t i = 0; i < plane.size(); ++i) {
    const double q = std::floor((plane[i] - lo) / span * 255.0 + 0.5);
    out[i] = static_cast<std::uint8_t>(std::clamp(q, 0.0, 255.0));
  }
  return out;
}

}  // namespace cylin

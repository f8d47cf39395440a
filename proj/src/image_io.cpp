#include "pagsr/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <fstream>
#include <memory>
#include <string>
#include <vector>

namespace pagsr {

namespace {

std::string lower_ext(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return ext;
}

// Interleaved samples (H*W*C) -> planar tensor.
Tensor32 to_planar(const std::vector<std::uint16_t>& samples, int channels, int h, int w,
                   double maxval) {
  Tensor32 out(Shape{1, channels, h, w});
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < channels; ++c) {
        const std::size_t i = (static_cast<std::size_t>(y) * w + x) * channels + c;
        out.at(0, c, y, x) = static_cast<float>(samples[i] / maxval);
      }
  return out;
}

std::vector<std::uint16_t> to_interleaved(const Tensor32& img, int maxval) {
  const Shape& s = img.shape();
  std::vector<std::uint16_t> out(static_cast<std::size_t>(s.h) * s.w * s.c);
  for (int y = 0; y < s.h; ++y)
    for (int x = 0; x < s.w; ++x)
      for (int c = 0; c < s.c; ++c) {
        const double v = std::clamp(static_cast<double>(img.at(0, c, y, x)), 0.0, 1.0);
        out[(static_cast<std::size_t>(y) * s.w + x) * s.c + c] =
            static_cast<std::uint16_t>(std::lround(v * maxval));
      }
  return out;
}

// --- PNM -------------------------------------------------------------------

int read_pnm_int(std::istream& in, const std::string& path) {
  int ch = in.peek();
  while (in && (std::isspace(ch) || ch == '#')) {
    if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      in.get();
    }
    ch = in.peek();
  }
  int value = 0;
  if (!(in >> value) || value < 0) throw IoError(path + ": malformed PNM header");
  return value;
}

LoadedImage load_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string() + ": cannot open");
  char magic[2] = {0, 0};
  in.read(magic, 2);
  if (!in || magic[0] != 'P' || (magic[1] != '5' && magic[1] != '6')) {
    throw IoError(path.string() + ": not a binary PGM/PPM (expected P5 or P6)");
  }
  const int channels = magic[1] == '5' ? 1 : 3;
  const int w = read_pnm_int(in, path.string());
  const int h = read_pnm_int(in, path.string());
  const int maxval = read_pnm_int(in, path.string());
  if (w < 1 || h < 1) throw IoError(path.string() + ": malformed PNM header (zero size)");
  if (maxval < 1 || maxval > 65535) {
    throw IoError(path.string() + ": unsupported PNM maxval " + std::to_string(maxval));
  }
  in.get();  // single whitespace after maxval
  const int bytes = maxval > 255 ? 2 : 1;
  const std::size_t count = static_cast<std::size_t>(w) * h * channels;
  std::vector<unsigned char> raw(count * bytes);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (static_cast<std::size_t>(in.gcount()) != raw.size()) {
    throw IoError(path.string() + ": truncated PNM pixel data");
  }
  std::vector<std::uint16_t> samples(count);
  for (std::size_t i = 0; i < count; ++i) {
    samples[i] = bytes == 1 ? raw[i] : static_cast<std::uint16_t>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return {to_planar(samples, channels, h, w, maxval), bytes * 8};
}

void save_pnm(const Tensor32& img, const std::filesystem::path& path, int bit_depth) {
  const Shape& s = img.shape();
  const int maxval = bit_depth == 8 ? 255 : 65535;
  const auto samples = to_interleaved(img, maxval);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError(path.string() + ": cannot open for writing");
  out << (s.c == 1 ? "P5" : "P6") << '\n' << s.w << ' ' << s.h << '\n' << maxval << '\n';
  std::vector<unsigned char> raw;
  raw.reserve(samples.size() * 2);
  for (std::uint16_t v : samples) {
    if (bit_depth == 16) raw.push_back(static_cast<unsigned char>(v >> 8));
    raw.push_back(static_cast<unsigned char>(v & 0xff));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw IoError(path.string() + ": write failed");
}

// --- PNG -------------------------------------------------------------------

struct FileCloser {
  void operator()(std::FILE* f) const { std::fclose(f); }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

struct PngError {
  std::jmp_buf jump;
  char message[256] = {0};
};

void png_error_handler(png_structp png, png_const_charp msg) {
  auto* err = static_cast<PngError*>(png_get_error_ptr(png));
  std::snprintf(err->message, sizeof(err->message), "%s", msg);
  std::longjmp(err->jump, 1);
}

void png_warning_handler(png_structp, png_const_charp) {}

// The libpng calls live in functions whose locals are all trivially
// destructible, so longjmp out of libpng is well defined.
bool read_png_rows(std::FILE* file, PngError* err, std::vector<std::uint16_t>* samples, int* w,
                   int* h, int* channels, int* depth) {
  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, err, png_error_handler, png_warning_handler);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(err->jump)) {
    png_destroy_read_struct(&png, &info, nullptr);
    return false;
  }
  png_init_io(png, file);
  png_read_png(png, info,
               PNG_TRANSFORM_EXPAND | PNG_TRANSFORM_STRIP_ALPHA | PNG_TRANSFORM_PACKING, nullptr);
  *w = static_cast<int>(png_get_image_width(png, info));
  *h = static_cast<int>(png_get_image_height(png, info));
  *channels = png_get_channels(png, info);
  *depth = png_get_bit_depth(png, info);
  png_bytepp rows = png_get_rows(png, info);
  if ((*channels == 1 || *channels == 3) && (*depth == 8 || *depth == 16)) {
    const std::size_t per_row = static_cast<std::size_t>(*w) * *channels;
    samples->resize(per_row * *h);
    for (int y = 0; y < *h; ++y) {
      const png_bytep row = rows[y];
      for (std::size_t i = 0; i < per_row; ++i) {
        (*samples)[y * per_row + i] =
            *depth == 8 ? row[i] : static_cast<std::uint16_t>((row[2 * i] << 8) | row[2 * i + 1]);
      }
    }
  }
  png_destroy_read_struct(&png, &info, nullptr);
  return true;
}

LoadedImage load_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.c_str(), "rb"));
  if (!file) throw IoError(path.string() + ": cannot open");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, file.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError(path.string() + ": not a PNG file");
  }
  std::rewind(file.get());
  PngError err;
  std::vector<std::uint16_t> samples;
  int w = 0, h = 0, channels = 0, depth = 0;
  if (!read_png_rows(file.get(), &err, &samples, &w, &h, &channels, &depth)) {
    throw IoError(path.string() + ": malformed PNG (" + err.message + ")");
  }
  if (channels != 1 && channels != 3) {
    throw IoError(path.string() + ": unsupported PNG channel count " + std::to_string(channels));
  }
  if (depth != 8 && depth != 16) {
    throw IoError(path.string() + ": unsupported PNG bit depth " + std::to_string(depth));
  }
  return {to_planar(samples, channels, h, w, depth == 8 ? 255.0 : 65535.0), depth};
}

bool write_png_rows(std::FILE* file, PngError* err, const std::vector<unsigned char>* raw, int w,
                    int h, int channels, int depth) {
  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, err, png_error_handler, png_warning_handler);
  if (png == nullptr) return false;
  png_infop info = png_create_info_struct(png);
  if (info == nullptr || setjmp(err->jump)) {
    png_destroy_write_struct(&png, &info);
    return false;
  }
  png_init_io(png, file);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), depth,
               channels == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = static_cast<std::size_t>(w) * channels * (depth / 8);
  for (int y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(raw->data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  return true;
}

void save_png(const Tensor32& img, const std::filesystem::path& path, int bit_depth) {
  const Shape& s = img.shape();
  const auto samples = to_interleaved(img, bit_depth == 8 ? 255 : 65535);
  std::vector<unsigned char> raw;
  raw.reserve(samples.size() * 2);
  for (std::uint16_t v : samples) {
    if (bit_depth == 16) raw.push_back(static_cast<unsigned char>(v >> 8));
    raw.push_back(static_cast<unsigned char>(v & 0xff));
  }
  FilePtr file(std::fopen(path.c_str(), "wb"));
  if (!file) throw IoError(path.string() + ": cannot open for writing");
  PngError err;
  if (!write_png_rows(file.get(), &err, &raw, s.w, s.h, s.c, bit_depth)) {
    throw IoError(path.string() + ": PNG write failed (" + err.message + ")");
  }
}

}  // namespace

LoadedImage load_image(const std::filesystem::path& path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png") return load_png(path);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") return load_pnm(path);
  throw IoError(path.string() + ": unsupported image extension '" + ext + "'");
}

void save_image(const Tensor32& img, const std::filesystem::path& path, int bit_depth) {
  const Shape& s = img.shape();
  if (s.n != 1 || (s.c != 1 && s.c != 3)) {
    throw ShapeError("save_image: expected [1, 1|3, H, W], got " + s.str());
  }
  if (bit_depth != 8 && bit_depth != 16) {
    throw IoError("save_image: unsupported bit depth " + std::to_string(bit_depth));
  }
  const std::string ext = lower_ext(path);
  if (ext == ".png") return save_png(img, path, bit_depth);
  if (ext == ".pgm" || ext == ".ppm" || ext == ".pnm") {
    if ((ext == ".pgm" && s.c != 1) || (ext == ".ppm" && s.c != 3)) {
      throw IoError(path.string() + ": channel count " + std::to_string(s.c) +
                    " does not match extension");
    }
    return save_pnm(img, path, bit_depth);
  }
  throw IoError(path.string() + ": unsupported image extension '" + ext + "'");
}

}  // namespace pagsr

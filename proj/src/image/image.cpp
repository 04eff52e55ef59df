#include "lmlt/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <memory>

#include "lmlt/error.hpp"

namespace lmlt {

PlanarImage::PlanarImage(std::int64_t w, std::int64_t h, std::int64_t c)
    : width(w), height(h), channels(c), data(static_cast<std::size_t>(w * h * c), 0) {}

PlanarImage::PlanarImage(std::int64_t w, std::int64_t h, std::int64_t c, std::vector<std::uint8_t> samples)
    : width(w), height(h), channels(c), data(std::move(samples)) {
  if (static_cast<std::int64_t>(data.size()) != w * h * c) {
    throw FormatError("image data length " + std::to_string(data.size()) + " does not match " + std::to_string(w) +
                      "x" + std::to_string(h) + "x" + std::to_string(c));
  }
}

double luma(double r, double g, double b) { return 16.0 + 65.481 * r + 128.553 * g + 24.966 * b; }

std::vector<double> rgb_to_y(const PlanarImage& img) {
  std::vector<double> y(static_cast<std::size_t>(img.width * img.height));
  if (img.channels == 1) {
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = img.data[i];
    return y;
  }
  if (img.channels != 3) throw FormatError("rgb_to_y needs 1 or 3 channels, got " + std::to_string(img.channels));
  for (std::size_t i = 0; i < y.size(); ++i) {
    y[i] = luma(img.data[3 * i] / 255.0, img.data[3 * i + 1] / 255.0, img.data[3 * i + 2] / 255.0);
  }
  return y;
}

namespace {

struct Plane {
  std::int64_t w = 0, h = 0;
  std::vector<double> v;
  double at(std::int64_t x, std::int64_t y) const { return v[y * w + x]; }
};

Plane shaved_y(const PlanarImage& img, std::int64_t shave) {
  const auto y = rgb_to_y(img);
  Plane p{img.width - 2 * shave, img.height - 2 * shave, {}};
  p.v.reserve(static_cast<std::size_t>(std::max<std::int64_t>(p.w * p.h, 0)));
  for (std::int64_t r = shave; r < img.height - shave; ++r) {
    for (std::int64_t c = shave; c < img.width - shave; ++c) p.v.push_back(y[r * img.width + c]);
  }
  return p;
}

void check_pair(const PlanarImage& a, const PlanarImage& b, std::int64_t shave) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels) {
    throw FormatError("image dimensions differ: " + std::to_string(a.width) + "x" + std::to_string(a.height) + "x" +
                      std::to_string(a.channels) + " vs " + std::to_string(b.width) + "x" +
                      std::to_string(b.height) + "x" + std::to_string(b.channels));
  }
  if (shave < 0 || 2 * shave >= std::min(a.width, a.height)) {
    throw FormatError("shave " + std::to_string(shave) + " too large for the image");
  }
}

}  // namespace

double psnr_y(const PlanarImage& a, const PlanarImage& b, std::int64_t shave) {
  check_pair(a, b, shave);
  const Plane pa = shaved_y(a, shave);
  const Plane pb = shaved_y(b, shave);
  double se = 0.0;
  for (std::size_t i = 0; i < pa.v.size(); ++i) se += (pa.v[i] - pb.v[i]) * (pa.v[i] - pb.v[i]);
  const double mse = se / static_cast<double>(pa.v.size());
  if (mse == 0.0) return kPsnrIdentical;
  return 10.0 * std::log10(255.0 * 255.0 / mse);
}

double ssim_y(const PlanarImage& a, const PlanarImage& b, std::int64_t shave) {
  check_pair(a, b, shave);
  const Plane pa = shaved_y(a, shave);
  const Plane pb = shaved_y(b, shave);
  constexpr int kWin = 11;
  if (pa.w < kWin || pa.h < kWin) throw FormatError("ssim needs at least 11x11 pixels after shaving");
  double g[kWin * kWin];
  double gsum = 0.0;
  for (int y = 0; y < kWin; ++y) {
    for (int x = 0; x < kWin; ++x) {
      const double dy = y - 5, dx = x - 5;
      gsum += g[y * kWin + x] = std::exp(-(dx * dx + dy * dy) / (2.0 * 1.5 * 1.5));
    }
  }
  for (double& v : g) v /= gsum;
  const double c1 = (0.01 * 255) * (0.01 * 255);
  const double c2 = (0.03 * 255) * (0.03 * 255);
  double total = 0.0;
  std::int64_t count = 0;
  for (std::int64_t y = 0; y + kWin <= pa.h; ++y) {
    for (std::int64_t x = 0; x + kWin <= pa.w; ++x) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int ky = 0; ky < kWin; ++ky) {
        for (int kx = 0; kx < kWin; ++kx) {
          const double wgt = g[ky * kWin + kx];
          const double va = pa.at(x + kx, y + ky);
          const double vb = pb.at(x + kx, y + ky);
          ma += wgt * va;
          mb += wgt * vb;
          saa += wgt * va * va;
          sbb += wgt * vb * vb;
          sab += wgt * (va * vb);
        }
      }
      const double va = saa - ma * ma;
      const double vb = sbb - mb * mb;
      const double cov = sab - ma * mb;
      total += ((2 * (ma * mb) + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  }
  return total / static_cast<double>(count);
}

double cubic_kernel(double x) {
  constexpr double a = -0.5;
  const double t = std::fabs(x);
  if (t <= 1.0) return ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0;
  if (t < 2.0) return ((a * t - 5.0 * a) * t + 8.0 * a) * t - 4.0 * a;
  return 0.0;
}

namespace {

struct AxisTaps {
  std::vector<std::int64_t> first;  // per output, index of taps[0]
  std::vector<std::vector<double>> weights;
  std::vector<std::vector<std::int64_t>> index;
};

AxisTaps axis_taps(std::int64_t in, std::int64_t out) {
  const double scale = static_cast<double>(out) / static_cast<double>(in);
  const double widen = scale < 1.0 ? scale : 1.0;
  const double support = 2.0 / widen;
  AxisTaps taps;
  taps.weights.resize(static_cast<std::size_t>(out));
  taps.index.resize(static_cast<std::size_t>(out));
  for (std::int64_t o = 0; o < out; ++o) {
    const double center = (o + 0.5) / scale - 0.5;
    const auto lo = static_cast<std::int64_t>(std::floor(center - support));
    const auto hi = static_cast<std::int64_t>(std::ceil(center + support));
    double total = 0.0;
    for (std::int64_t j = lo; j <= hi; ++j) {
      const double wgt = widen * cubic_kernel(widen * (center - static_cast<double>(j)));
      if (wgt == 0.0) continue;
      taps.weights[o].push_back(wgt);
      taps.index[o].push_back(std::clamp<std::int64_t>(j, 0, in - 1));
      total += wgt;
    }
    for (double& wgt : taps.weights[o]) wgt /= total;
  }
  return taps;
}

}  // namespace

std::vector<double> bicubic_resample(const std::vector<double>& planes, std::int64_t c, std::int64_t h, std::int64_t w,
                                     std::int64_t out_h, std::int64_t out_w) {
  if (out_h < 1 || out_w < 1) throw FormatError("bicubic output smaller than 1 px");
  const AxisTaps tx = axis_taps(w, out_w);
  const AxisTaps ty = axis_taps(h, out_h);
  std::vector<double> mid(static_cast<std::size_t>(c * h * out_w));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t y = 0; y < h; ++y) {
      const double* row = planes.data() + (ch * h + y) * w;
      for (std::int64_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < tx.weights[x].size(); ++k) acc += tx.weights[x][k] * row[tx.index[x][k]];
        mid[(ch * h + y) * out_w + x] = acc;
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(c * out_h * out_w));
  for (std::int64_t ch = 0; ch < c; ++ch) {
    for (std::int64_t y = 0; y < out_h; ++y) {
      for (std::int64_t x = 0; x < out_w; ++x) {
        double acc = 0.0;
        for (std::size_t k = 0; k < ty.weights[y].size(); ++k) {
          acc += ty.weights[y][k] * mid[(ch * h + ty.index[y][k]) * out_w + x];
        }
        out[(ch * out_h + y) * out_w + x] = acc;
      }
    }
  }
  return out;
}

PlanarImage bicubic_resize_to(const PlanarImage& img, std::int64_t out_w, std::int64_t out_h) {
  if (out_w < 1 || out_h < 1) throw FormatError("bicubic output smaller than 1 px");
  const std::int64_t c = img.channels;
  std::vector<double> planes(img.data.size());
  for (std::int64_t y = 0; y < img.height; ++y) {
    for (std::int64_t x = 0; x < img.width; ++x) {
      for (std::int64_t ch = 0; ch < c; ++ch) planes[(ch * img.height + y) * img.width + x] = img.at(x, y, ch);
    }
  }
  const auto out = bicubic_resample(planes, c, img.height, img.width, out_h, out_w);
  PlanarImage res(out_w, out_h, c);
  for (std::int64_t y = 0; y < out_h; ++y) {
    for (std::int64_t x = 0; x < out_w; ++x) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        const double v = std::round(out[(ch * out_h + y) * out_w + x]);
        res.at(x, y, ch) = static_cast<std::uint8_t>(std::clamp(v, 0.0, 255.0));
      }
    }
  }
  return res;
}

PlanarImage bicubic_resize(const PlanarImage& img, double factor) {
  if (!(factor > 0.0)) throw FormatError("bicubic factor must be positive");
  const auto ow = static_cast<std::int64_t>(std::ceil(static_cast<double>(img.width) * factor - 1e-9));
  const auto oh = static_cast<std::int64_t>(std::ceil(static_cast<double>(img.height) * factor - 1e-9));
  return bicubic_resize_to(img, ow, oh);
}

TensorF image_to_tensor(const PlanarImage& img) {
  const std::int64_t c = img.channels;
  std::vector<float> v(img.data.size());
  for (std::int64_t y = 0; y < img.height; ++y) {
    for (std::int64_t x = 0; x < img.width; ++x) {
      for (std::int64_t ch = 0; ch < c; ++ch) {
        v[(ch * img.height + y) * img.width + x] = static_cast<float>(img.at(x, y, ch) / 255.0);
      }
    }
  }
  return TensorF({1, c, img.height, img.width}, std::move(v));
}

PlanarImage tensor_to_image(const TensorF& t) {
  const Shape& s = t.shape();
  if (s.c != 1 && s.c != 3) throw FormatError("tensor_to_image needs 1 or 3 channels, got " + s.str());
  PlanarImage img(s.w, s.h, s.c);
  auto d = t.data();
  for (std::int64_t y = 0; y < s.h; ++y) {
    for (std::int64_t x = 0; x < s.w; ++x) {
      for (std::int64_t ch = 0; ch < s.c; ++ch) {
        const double v = std::clamp(static_cast<double>(d[(ch * s.h + y) * s.w + x]), 0.0, 1.0);
        img.at(x, y, ch) = static_cast<std::uint8_t>(std::lround(v * 255.0));
      }
    }
  }
  return img;
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};

void png_error_fn(png_structp png, png_const_charp msg) {
  auto* out = static_cast<std::string*>(png_get_error_ptr(png));
  if (out) *out = msg;
  png_longjmp(png, 1);
}

void png_warning_fn(png_structp, png_const_charp) {}

}  // namespace

PlanarImage png_load(const std::filesystem::path& path) {
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "rb"));
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  unsigned char sig[8];
  if (std::fread(sig, 1, 8, f.get()) != 8 || png_sig_cmp(sig, 0, 8) != 0) {
    throw IoError("'" + path.string() + "' is not a PNG file");
  }
  std::string err;
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  PlanarImage img;
  volatile bool depth16 = false;
  std::vector<png_bytep> rows;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw IoError("malformed PNG '" + path.string() + "': " + err);
  }
  png_init_io(png, f.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);
  const int depth = png_get_bit_depth(png, info);
  const int color = png_get_color_type(png, info);
  if (depth == 16) {
    depth16 = true;
  } else {
    if (color == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
    if (color == PNG_COLOR_TYPE_GRAY && depth < 8) png_set_expand_gray_1_2_4_to_8(png);
    if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_strip_alpha(png);
    if (color & PNG_COLOR_MASK_ALPHA) png_set_strip_alpha(png);
    png_read_update_info(png, info);
    const auto w = static_cast<std::int64_t>(png_get_image_width(png, info));
    const auto h = static_cast<std::int64_t>(png_get_image_height(png, info));
    const int ch = png_get_channels(png, info);
    img = PlanarImage(w, h, ch);
    rows.resize(static_cast<std::size_t>(h));
    for (std::int64_t y = 0; y < h; ++y) rows[y] = img.data.data() + y * w * ch;
    png_read_image(png, rows.data());
    png_read_end(png, nullptr);
  }
  png_destroy_read_struct(&png, &info, nullptr);
  if (depth16) throw UnsupportedDepthError("'" + path.string() + "' has 16-bit samples; only 8-bit PNG is supported");
  if (img.channels != 1 && img.channels != 3) {
    throw IoError("'" + path.string() + "' decodes to " + std::to_string(img.channels) + " channels");
  }
  return img;
}

void png_save(const PlanarImage& img, const std::filesystem::path& path) {
  if (img.channels != 1 && img.channels != 3) throw FormatError("png_save needs 1 or 3 channels");
  if (static_cast<std::int64_t>(img.data.size()) != img.width * img.height * img.channels) {
    throw FormatError("image data length does not match its dimensions");
  }
  std::unique_ptr<std::FILE, FileCloser> f(std::fopen(path.c_str(), "wb"));
  if (!f) throw IoError("cannot open '" + path.string() + "' for writing");
  std::string err;
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, &err, png_error_fn, png_warning_fn);
  if (!png) throw IoError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing '" + path.string() + "': " + err);
  }
  png_init_io(png, f.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width), static_cast<png_uint_32>(img.height), 8,
               img.channels == 3 ? PNG_COLOR_TYPE_RGB : PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::int64_t y = 0; y < img.height; ++y) {
    rows[y] = const_cast<png_bytep>(img.data.data() + y * img.width * img.channels);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  if (std::fflush(f.get()) != 0) throw IoError("failed writing '" + path.string() + "'");
}

}  // namespace lmlt

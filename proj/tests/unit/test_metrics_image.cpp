#include <doctest.h>
#include <png.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "helpers.hpp"
#include "lmlt/error.hpp"
#include "lmlt/image.hpp"
#include "lmlt/rng.hpp"
#include "oracles/oracles.hpp"

using namespace lmlt;

namespace {

PlanarImage noise_image(std::int64_t w, std::int64_t h, std::int64_t c, std::uint64_t seed) {
  Rng rng(seed);
  PlanarImage img(w, h, c);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next_u64() % 256);
  return img;
}

PlanarImage constant_image(std::int64_t w, std::int64_t h, std::int64_t c, std::uint8_t v) {
  PlanarImage img(w, h, c);
  std::fill(img.data.begin(), img.data.end(), v);
  return img;
}

std::filesystem::path scratch_dir() {
  const auto dir = std::filesystem::temp_directory_path() / "lmlt_unit_png";
  std::filesystem::create_directories(dir);
  return dir;
}

void write_png16(const std::filesystem::path& path) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  REQUIRE(f);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, 2, 1, 16, PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_byte row[4] = {0x12, 0x34, 0xab, 0xcd};
  png_write_row(png, row);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

}  // namespace

TEST_CASE("luma of reference colours") {
  CHECK(luma(0, 0, 0) == 16.0);
  CHECK(luma(1, 1, 1) == doctest::Approx(235.0).epsilon(1e-9));
  CHECK(luma(0, 1, 0) == doctest::Approx(144.553).epsilon(1e-12));
  const PlanarImage white = constant_image(2, 2, 3, 255);
  for (double y : rgb_to_y(white)) CHECK(std::fabs(y - 235.0) < 1e-3);
  CHECK_THROWS_AS(rgb_to_y(PlanarImage(2, 2, 2)), FormatError);
}

TEST_CASE("luma is affine in the pixel") {
  Rng rng(3);
  for (int t = 0; t < 200; ++t) {
    const double p[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    const double q[3] = {rng.uniform(), rng.uniform(), rng.uniform()};
    const double a = rng.uniform();
    const double mixed = luma(a * p[0] + (1 - a) * q[0], a * p[1] + (1 - a) * q[1], a * p[2] + (1 - a) * q[2]);
    CHECK(std::fabs(mixed - (a * luma(p[0], p[1], p[2]) + (1 - a) * luma(q[0], q[1], q[2]))) < 1e-6);
  }
}

TEST_CASE("psnr examples") {
  const PlanarImage a = noise_image(24, 20, 3, 1);
  CHECK(psnr_y(a, a, 2) == kPsnrIdentical);
  CHECK(std::isinf(psnr_y(a, a, 0)));
  const PlanarImage g1 = constant_image(16, 16, 1, 100);
  const PlanarImage g2 = constant_image(16, 16, 1, 101);
  CHECK(psnr_y(g1, g2, 0) == doctest::Approx(48.1308).epsilon(1e-6));
  CHECK(psnr_y(g1, g2, 0) == doctest::Approx(20.0 * std::log10(255.0)).epsilon(1e-12));
  const PlanarImage b = noise_image(24, 20, 3, 2);
  CHECK(psnr_y(a, b, 3) == psnr_y(b, a, 3));
  CHECK_THROWS_AS(psnr_y(a, noise_image(24, 21, 3, 2), 0), FormatError);
}

TEST_CASE("shaving only drops the border") {
  PlanarImage a = noise_image(20, 20, 3, 4);
  PlanarImage b = a;
  for (std::int64_t x = 0; x < 20; ++x) b.at(x, 0, 1) ^= 0x40;
  CHECK(std::isfinite(psnr_y(a, b, 0)));
  CHECK(psnr_y(a, b, 1) == kPsnrIdentical);
}

TEST_CASE("ssim examples") {
  const PlanarImage a = noise_image(32, 30, 3, 5);
  CHECK(ssim_y(a, a, 0) == 1.0);
  CHECK(ssim_y(a, a, 4) == 1.0);
  PlanarImage neg = a;
  for (auto& v : neg.data) v = static_cast<std::uint8_t>(255 - v);
  CHECK(ssim_y(a, neg, 0) < 0.1);
  const PlanarImage b = noise_image(32, 30, 3, 6);
  CHECK(ssim_y(a, b, 2) == ssim_y(b, a, 2));
}

TEST_CASE("ssim matches the separable-filter oracle") {
  const PlanarImage a = noise_image(29, 23, 3, 7);
  PlanarImage b = a;
  Rng rng(8);
  for (auto& v : b.data) v = static_cast<std::uint8_t>(std::clamp<int>(v + static_cast<int>(rng.next_u64() % 41) - 20, 0, 255));
  const double ref = oracle::ssim(rgb_to_y(a), rgb_to_y(b), 23, 29);
  CHECK(ssim_y(a, b, 0) == doctest::Approx(ref).epsilon(1e-10));
  PlanarImage neg = a;
  for (auto& v : neg.data) v = static_cast<std::uint8_t>(255 - v);
  CHECK(oracle::ssim(rgb_to_y(a), rgb_to_y(neg), 23, 29) < 0.1);
}

TEST_CASE("cubic kernel taps form a partition of unity") {
  for (int i = 0; i <= 1000; ++i) {
    const double phase = i / 1000.0;
    const double s = cubic_kernel(phase + 1) + cubic_kernel(phase) + cubic_kernel(phase - 1) + cubic_kernel(phase - 2);
    CHECK(std::fabs(s - 1.0) < 1e-9);
  }
  CHECK(cubic_kernel(0) == 1.0);
  CHECK(cubic_kernel(1) == 0.0);
  CHECK(cubic_kernel(2) == 0.0);
}

TEST_CASE("bicubic identity and constants") {
  const PlanarImage a = noise_image(13, 9, 3, 9);
  CHECK(bicubic_resize(a, 1.0) == a);
  const PlanarImage c = constant_image(15, 10, 3, 77);
  for (double f : {0.5, 1.0 / 3.0, 0.25, 2.0, 3.0, 1.7}) {
    const PlanarImage r = bicubic_resize(c, f);
    CAPTURE(f);
    CHECK(r.width == static_cast<std::int64_t>(std::ceil(15 * f - 1e-9)));
    for (auto v : r.data) CHECK(v == 77);
  }
  const PlanarImage down = bicubic_resize(noise_image(64, 48, 3, 10), 0.5);
  CHECK(down.width == 32);
  CHECK(down.height == 24);
}

TEST_CASE("2x downscale of a row equals the hand-written 1-D filter") {
  // kernel widened by 2 at offsets +-0.5, +-1.5, +-2.5, +-3.5, times 1/2
  const double taps[8] = {-0.0234375, -0.0703125, 0.2265625, 0.8671875,
                          0.8671875,  0.2265625,  -0.0703125, -0.0234375};
  const std::int64_t w = 16;
  for (int pattern = 0; pattern < 2; ++pattern) {
    std::vector<double> row(w);
    for (std::int64_t x = 0; x < w; ++x) row[x] = pattern == 0 ? 3.0 * x + 1.0 : 0.25 * x * x;
    const auto out = bicubic_resample(row, 1, 1, w, 1, w / 2);
    for (std::int64_t o = 0; o < w / 2; ++o) {
      double expect = 0.0;
      for (int t = 0; t < 8; ++t) expect += 0.5 * taps[t] * row[std::clamp<std::int64_t>(2 * o - 3 + t, 0, w - 1)];
      CAPTURE(o);
      CHECK(out[o] == doctest::Approx(expect).epsilon(1e-12));
      if (pattern == 0 && o >= 2 && o <= w / 2 - 3) CHECK(out[o] == doctest::Approx(3.0 * (2 * o + 0.5) + 1.0));
    }
  }
}

TEST_CASE("tensor conversion clamps at export") {
  TensorF t({1, 3, 1, 2}, std::vector<float>{-0.5f, 0.5f, 1.5f, 0.2f, 1.0f, 0.0f});
  const PlanarImage img = tensor_to_image(t);
  CHECK(img.at(0, 0, 0) == 0);
  CHECK(img.at(1, 0, 0) == 128);
  CHECK(img.at(0, 0, 1) == 255);
  CHECK(img.at(1, 0, 2) == 0);
  const PlanarImage a = noise_image(7, 5, 3, 11);
  CHECK(tensor_to_image(image_to_tensor(a)) == a);
}

TEST_CASE("png roundtrip and loader errors") {
  const auto dir = scratch_dir();
  const PlanarImage rgb = noise_image(19, 11, 3, 12);
  png_save(rgb, dir / "rgb.png");
  CHECK(png_load(dir / "rgb.png") == rgb);
  const PlanarImage gray = noise_image(8, 6, 1, 13);
  png_save(gray, dir / "gray.png");
  const PlanarImage g = png_load(dir / "gray.png");
  CHECK(g.channels == 1);
  CHECK(g == gray);
  write_png16(dir / "deep.png");
  CHECK_THROWS_AS(png_load(dir / "deep.png"), UnsupportedDepthError);
  CHECK_THROWS_AS(png_load(dir / "missing.png"), IoError);
  {
    std::FILE* f = std::fopen((dir / "junk.png").c_str(), "wb");
    std::fputs("not a png", f);
    std::fclose(f);
  }
  CHECK_THROWS_AS(png_load(dir / "junk.png"), IoError);
  std::filesystem::remove_all(dir);
}

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "lmlt/cli.hpp"
#include "lmlt/image.hpp"
#include "lmlt/rng.hpp"
#include "lmlt/weights.hpp"

using namespace lmlt;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result run(std::vector<std::string> args) {
  args.insert(args.begin(), "lmlt");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string value_of(const std::string& text, const std::string& key) {
  const auto pos = text.find("\n" + key + "=");
  REQUIRE(pos != std::string::npos);
  const auto start = pos + key.size() + 2;
  return text.substr(start, text.find_first_of(" \n", start) - start);
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

struct Scratch {
  std::filesystem::path dir;
  Scratch() : dir(std::filesystem::temp_directory_path() / "lmlt_unit_cli") {
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
  }
  ~Scratch() { std::filesystem::remove_all(dir); }
  std::string operator/(const std::string& name) const { return (dir / name).string(); }
};

}  // namespace

TEST_CASE("cli usage errors") {
  CHECK(run({}).code == cli::kFailure);
  CHECK(run({"frobnicate"}).code == cli::kFailure);
  CHECK(run({"count", "--bogus"}).code == cli::kFailure);
  CHECK(run({"--help"}).code == cli::kOk);
  const Result r = run({"count", "--preset", "huge"});
  CHECK(r.code == cli::kFailure);
  CHECK(r.err.find("huge") != std::string::npos);
}

TEST_CASE("count reports the published figures") {
  const Result tiny = run({"count", "--preset", "tiny", "--scale", "2"});
  REQUIRE(tiny.code == cli::kOk);
  const double params = std::stod(value_of(tiny.out, "params"));
  CHECK(std::fabs(params - 239e3) <= 0.005 * 239e3);
  CHECK(tiny.out.find("# effective config") != std::string::npos);
  CHECK(value_of(tiny.out, "channels") == "36");

  const Result base = run({"count", "--preset", "base", "--scale", "3"});
  CHECK(std::fabs(std::stod(value_of(base.out, "params")) - 660e3) <= 0.005 * 660e3);

  const Result nopool = run({"count", "--preset", "tiny", "--no-pool"});
  const double flops = std::stod(value_of(nopool.out, "flops"));
  CHECK(std::fabs(flops - 67e9) <= 0.10 * 67e9);
  CHECK(flops > std::stod(value_of(tiny.out, "flops")));

  const Result csv = run({"count", "--preset", "tiny", "--csv"});
  CHECK(csv.out.find("layer,params,macs,acts\n") != std::string::npos);
  CHECK(csv.out.find("\ntotal,239340,") != std::string::npos);

  const Result merged = run({"count", "--no-merge", "--no-sum", "--pe", "none", "--depth", "2"});
  CHECK(value_of(merged.out, "aggregation") == "false");
  CHECK(value_of(merged.out, "low_to_high") == "false");
  CHECK(value_of(merged.out, "pe") == "none");
  CHECK(value_of(merged.out, "depth") == "2");
}

TEST_CASE("config files are overridden by flags") {
  Scratch s;
  std::ofstream(s / "c.cfg") << "preset=base\nscale=4\nout_w=640\n";
  const Result r = run({"count", "--config", s / "c.cfg", "--scale", "2"});
  REQUIRE(r.code == cli::kOk);
  CHECK(value_of(r.out, "channels") == "60");
  CHECK(value_of(r.out, "scale") == "2");
  CHECK(value_of(r.out, "out_w") == "640");
  std::ofstream(s / "bad.cfg") << "colour=blue\n";
  CHECK(run({"count", "--config", s / "bad.cfg"}).code == cli::kFailure);
  CHECK(run({"count", "--config", s / "missing.cfg"}).code == cli::kIo);
}

TEST_CASE("gradcheck passes and catches a corrupted gradient") {
  const Result ok = run({"gradcheck", "--size", "8"});
  CHECK(ok.code == cli::kOk);
  CHECK(std::stod(value_of(ok.out, "max_rel_error")) < 1e-3);
  const Result bad = run({"gradcheck", "--size", "8", "--corrupt-grad"});
  CHECK(bad.code == cli::kFailure);
  CHECK(bad.out.find("FAIL gradcheck") != std::string::npos);
  CHECK(bad.out.find("worst block0.ccm.conv1.bias") != std::string::npos);
}

TEST_CASE("upscale writes an s-times image and reports metrics") {
  Scratch s;
  Rng rng(3);
  PlanarImage img(32, 32, 3);
  for (auto& v : img.data) v = static_cast<std::uint8_t>(rng.next_u64() % 256);
  png_save(img, s / "in.png");
  REQUIRE(run({"init", "--preset", "tiny", "--scale", "4", "--out", s / "w.lmltw"}).code == cli::kOk);
  REQUIRE(run({"init", "--preset", "tiny", "--scale", "4", "--zero", "--out", s / "z.lmltw"}).code == cli::kOk);

  const Result up = run({"upscale", "--in", s / "in.png", "--out", s / "out.png", "--weights", s / "w.lmltw", "--runs", "1"});
  REQUIRE(up.code == cli::kOk);
  const PlanarImage out = png_load(s / "out.png");
  CHECK(out.width == 128);
  CHECK(out.height == 128);
  CHECK(up.out.find("time_ms_median_of_1=") != std::string::npos);

  const Result same = run({"upscale", "--in", s / "in.png", "--out", s / "out2.png", "--weights", s / "w.lmltw",
                           "--runs", "1", "--ref", s / "out.png"});
  CHECK(value_of(same.out, "psnr_y") == "inf");
  CHECK(slurp(s / "out.png") == slurp(s / "out2.png"));

  REQUIRE(run({"upscale", "--in", s / "in.png", "--out", s / "black.png", "--weights", s / "z.lmltw", "--runs", "1"})
              .code == cli::kOk);
  for (auto v : png_load(s / "black.png").data) CHECK(v == 0);

  const Result mismatch =
      run({"upscale", "--in", s / "in.png", "--out", s / "x.png", "--weights", s / "w.lmltw", "--scale", "2"});
  CHECK(mismatch.code == cli::kFailure);
  CHECK(mismatch.err.find("scale") != std::string::npos);
  CHECK(run({"upscale", "--in", s / "none.png", "--out", s / "x.png", "--weights", s / "w.lmltw"}).code == cli::kIo);
  CHECK(run({"upscale", "--in", s / "in.png", "--out", s / "x.png", "--weights", s / "none.lmltw"}).code == cli::kIo);
  std::ofstream(s / "junk.lmltw") << "garbage";
  CHECK(run({"upscale", "--in", s / "in.png", "--out", s / "x.png", "--weights", s / "junk.lmltw"}).code == cli::kIo);
}

TEST_CASE("train-toy exit codes and reproducibility") {
  Scratch s;
  const Result frozen = run({"train-toy", "--patch", "8", "--steps", "10", "--lr", "0", "--loss-csv", s / "f.csv"});
  CHECK(frozen.code == cli::kFailure);

  const Result a = run({"train-toy", "--patch", "8", "--steps", "15", "--seed", "5", "--loss-csv", s / "a.csv",
                        "--out-weights", s / "a.lmltw"});
  const Result b = run({"train-toy", "--patch", "8", "--steps", "15", "--seed", "5", "--loss-csv", s / "b.csv",
                        "--out-weights", s / "b.lmltw"});
  CHECK(slurp(s / "a.csv") == slurp(s / "b.csv"));
  CHECK(slurp(s / "a.lmltw") == slurp(s / "b.lmltw"));
  CHECK(slurp(s / "a.csv").rfind("step,loss,smoothed,lr\n0,", 0) == 0);

  // rerun from the echoed config
  const auto start = a.out.find("# effective config");
  const auto end = a.out.find("# end config");
  std::string cfg = a.out.substr(start, end - start);
  cfg.replace(cfg.find("loss_csv=" + s / "a.csv"), ("loss_csv=" + s / "a.csv").size(), "loss_csv=" + s / "c.csv");
  cfg.replace(cfg.find("out_weights=" + s / "a.lmltw"), ("out_weights=" + s / "a.lmltw").size(),
              "out_weights=" + s / "c.lmltw");
  std::ofstream(s / "echo.cfg") << cfg;
  CHECK(run({"train-toy", "--config", s / "echo.cfg"}).code == a.code);
  CHECK(slurp(s / "a.csv") == slurp(s / "c.csv"));
  CHECK(slurp(s / "a.lmltw") == slurp(s / "c.lmltw"));

  const Result nan = run({"train-toy", "--patch", "8", "--steps", "3", "--lr", "1e30", "--loss-csv", s / "n.csv"});
  CHECK(nan.code == cli::kDivergence);
}

TEST_CASE("bench table") {
  const Result r = run({"bench", "--grid", "32x32", "--channels", "16", "--window", "4", "--heads", "1,2,4", "--runs", "1"});
  REQUIRE(r.code == cli::kOk);
  CHECK(r.out.find("\n1,") != std::string::npos);
  const auto row1 = r.out.substr(r.out.find("\n1,") + 1);
  CHECK(row1.find(",1.0000,") != std::string::npos);
  std::istringstream lines(r.out.substr(r.out.find("time_ratio\n") + 11));
  std::string line;
  int rows = 0;
  while (std::getline(lines, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    REQUIRE(cells.size() == 8);
    if (std::stoi(cells[0]) >= 2) CHECK(std::stod(cells[3]) < 1.0);
    ++rows;
  }
  CHECK(rows == 3);
  CHECK(run({"bench", "--grid", "32"}).code == cli::kFailure);
}

TEST_CASE("selftest filter and fault injection") {
  const Result ok = run({"selftest", "--only", "metrics"});
  CHECK(ok.code == cli::kOk);
  CHECK(ok.out.find("PASS metrics.identity") != std::string::npos);
  const Result bad = run({"selftest", "--only", "metrics", "--inject-fault", "metrics.luma_affine"});
  CHECK(bad.code == cli::kFailure);
  CHECK(bad.out.find("FAIL metrics.luma_affine") != std::string::npos);
  CHECK(run({"selftest", "--only", "metrics", "--inject-fault", "no.such"}).code == cli::kFailure);
}

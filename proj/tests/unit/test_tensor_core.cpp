#include <cmath>
#include <limits>

#include "doctest.h"
#include "helpers.hpp"
#include "lmlt/gradcheck.hpp"
#include "lmlt/kernels.hpp"
#include "lmlt/nn.hpp"
#include "lmlt/ops.hpp"
#include "oracles/oracles.hpp"

using namespace lmlt;

TEST_CASE("tensor_new fills") {
  CHECK(test::as_vec(tensor_new<float>({1, 1, 2, 2}, fill::Zeros{})) == std::vector<float>{0, 0, 0, 0});
  CHECK(tensor_new<double>({1, 1, 1, 1}, fill::Const{3.5}).item() == 3.5);
  CHECK_FALSE(tensor_new<double>({1, 1, 1, 1}, fill::Ones{}).requires_grad());
}

TEST_CASE("tensor_new rejects overflowing and negative shapes") {
  const std::int64_t big = std::int64_t{1} << 40;
  CHECK_THROWS_AS(tensor_new<float>({big, big, 1, 1}, fill::Zeros{}), SizeError);
  CHECK_THROWS_AS(tensor_new<float>({-1, 1, 1, 1}, fill::Zeros{}), SizeError);
}

TEST_CASE("splitmix64 uniform stream for seed 7") {
  // Values produced by an independent Python splitmix64.
  const double expected[8] = {0.3898297483912715,  0.01678829452815611, 0.9007606806068834, 0.5829302930280781,
                              0.45244189501146836, 0.24943152228274335, 0.46795300422287345, 0.3280767391525029};
  Rng rng(7);
  auto t = tensor_new<double>({1, 2, 2, 2}, fill::Uniform{&rng, 0.0, 1.0});
  for (int i = 0; i < 8; ++i) CHECK(t.data()[i] == expected[i]);
  CHECK(Rng(7).next_u64() == 0x63cbe1e459320dd7ULL);
}

TEST_CASE("equal seeds give equal streams") {
  Rng a(123), b(123);
  bool same = true;
  for (int i = 0; i < 1000000; ++i) same = same && a.next_u64() == b.next_u64();
  CHECK(same);
}

TEST_CASE("elementwise ops") {
  TensorD a({1, 1, 1, 2}, {1, 2});
  TensorD b({1, 1, 1, 2}, {3, 4});
  CHECK(test::as_double(add(a, b)) == std::vector<double>{4, 6});
  auto x = test::random_d({2, 3, 4, 5}, 1);
  CHECK(test::as_double(mul(x, TensorD::full(x.shape(), 1.0))) == test::as_double(x));
  CHECK(test::as_double(sub(x, x)) == std::vector<double>(x.numel(), 0.0));
  CHECK_THROWS_AS(add(a, TensorD::zeros({1, 1, 2, 1})), ShapeError);
}

TEST_CASE("elementwise batch broadcast") {
  auto a = test::random_d({3, 2, 2, 2}, 2);
  auto b = test::random_d({1, 2, 2, 2}, 3);
  auto c = add(a, b);
  for (std::int64_t n = 0; n < 3; ++n) CHECK(c.at(n, 1, 1, 0) == a.at(n, 1, 1, 0) + b.at(0, 1, 1, 0));
  auto r = fd_gradcheck([&](const TensorD& x) { return sum(mul(mul(a, x), a)); }, b);
  CHECK(r.pass);
}

TEST_CASE("matmul") {
  TensorD eye({1, 1, 2, 2}, {1, 0, 0, 1});
  CHECK(test::as_double(matmul(eye, eye)) == test::as_double(eye));
  TensorD m({1, 1, 2, 2}, {1, 2, 3, 4});
  TensorD ones({1, 1, 2, 1}, {1, 1});
  CHECK(test::as_double(matmul(m, ones)) == std::vector<double>{3, 7});
  CHECK_THROWS_AS(matmul(m, TensorD::zeros({1, 1, 3, 1})), ShapeError);

  auto a = test::random_d({1, 1, 5, 4}, 4);
  auto b = test::random_d({1, 1, 4, 3}, 5);
  auto ref = oracle::matmul(test::as_double(a), test::as_double(b), 5, 4, 3);
  CHECK(test::max_abs_diff(test::as_double(matmul(a, b)), ref) < 1e-12);
  for (std::int64_t d = 1; d <= 16; d += 5) {
    auto p = test::random_d({1, 1, d, 16}, 10 + d);
    auto q = test::random_d({1, 1, 16, d + 1}, 20 + d);
    CHECK(test::max_rel_diff(test::as_double(matmul(p, q)), oracle::matmul(test::as_double(p), test::as_double(q), d,
                                                                           16, d + 1)) < 1e-10);
  }
}

TEST_CASE("bmm transposes and gradients") {
  for (bool ta : {false, true}) {
    for (bool tb : {false, true}) {
      auto a = test::random_d(ta ? Shape{2, 1, 4, 3} : Shape{2, 1, 3, 4}, 6);
      auto b = test::random_d(tb ? Shape{2, 1, 5, 4} : Shape{2, 1, 4, 5}, 7);
      auto out = bmm(a, b, ta, tb);
      CHECK(out.shape() == Shape{2, 1, 3, 5});
      CHECK(out.at(1, 0, 2, 4) == doctest::Approx([&] {
              double s = 0;
              for (int k = 0; k < 4; ++k) {
                s += (ta ? a.at(1, 0, k, 2) : a.at(1, 0, 2, k)) * (tb ? b.at(1, 0, 4, k) : b.at(1, 0, k, 4));
              }
              return s;
            }()));
      auto w = test::random_d(out.shape(), 8);
      CHECK(fd_gradcheck([&](const TensorD& x) { return sum(mul(bmm(x, b, ta, tb), w)); }, a).pass);
      CHECK(fd_gradcheck([&](const TensorD& x) { return sum(mul(bmm(a, x, ta, tb), w)); }, b).pass);
    }
  }
}

TEST_CASE("softmax_rows") {
  auto s = softmax_rows(TensorD({1, 1, 1, 3}, {0, 0, 0}), 1.0);
  for (double v : s.data()) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  auto big = softmax_rows(TensorD({1, 1, 1, 2}, {1000, 0}), 1.0);
  CHECK(big.data()[0] == 1.0);
  CHECK(big.data()[1] == 0.0);
  auto r = softmax_rows(TensorD({1, 1, 1, 3}, {1, 2, 3}), 1.0);
  CHECK(r.data()[0] == doctest::Approx(0.09003057).epsilon(1e-7));
  CHECK(r.data()[1] == doctest::Approx(0.24472847).epsilon(1e-7));
  CHECK(r.data()[2] == doctest::Approx(0.66524096).epsilon(1e-7));

  auto x = test::random_d({1, 2, 7, 9}, 9, -1e3, 1e3);
  auto y = softmax_rows(x, 1.0);
  for (int row = 0; row < 14; ++row) {
    double total = 0;
    for (int j = 0; j < 9; ++j) total += y.data()[row * 9 + j];
    CHECK(std::fabs(total - 1.0) < 1e-6);
  }
  auto xf = test::random_f({1, 1, 4, 6}, 10, -1e3, 1e3);
  auto yf = softmax_rows(xf, 0.5f);
  CHECK(all_finite(yf.data()));
}

TEST_CASE("backward basics") {
  auto x = test::random_d({1, 1, 2, 2}, 11);
  x.set_requires_grad();
  Tape<double> tape;
  {
    TapeScope<double> scope(tape);
    backward(sum(x));
  }
  CHECK(test::as_double_grad(x) == std::vector<double>(4, 1.0));

  auto y = test::random_d({1, 1, 2, 2}, 12);
  y.set_requires_grad();
  Tape<double> tape2;
  {
    TapeScope<double> scope(tape2);
    backward(sum(mul(y, y)));
  }
  for (int i = 0; i < 4; ++i) CHECK(y.grad()[i] == doctest::Approx(2 * y.data()[i]));
}

TEST_CASE("backward visits nodes in reverse insertion order") {
  auto x = test::random_d({1, 1, 3, 3}, 13);
  x.set_requires_grad();
  Tape<double> tape;
  TapeScope<double> scope(tape);
  auto a = scale(x, 2.0);
  auto b = gelu(a);
  auto c = mul(b, a);
  auto loss = sum(c);
  tape.backward(loss);
  const std::vector<std::size_t> expected{3, 2, 1, 0};
  CHECK(tape.visit_log() == expected);
}

TEST_CASE("backward rejects non-scalar loss") {
  auto x = test::random_d({1, 1, 2, 2}, 14);
  x.set_requires_grad();
  Tape<double> tape;
  TapeScope<double> scope(tape);
  auto y = scale(x, 3.0);
  CHECK_THROWS_AS(tape.backward(y), ShapeError);
}

TEST_CASE("fd_gradcheck examples") {
  auto x = test::random_d({1, 1, 3, 3}, 15);
  CHECK(fd_gradcheck([](const TensorD& v) { return sum(v); }, x).max_rel_error < 1e-9);
  TensorD g({1, 1, 1, 2}, {0.5, -0.3});
  CHECK(fd_gradcheck([](const TensorD& v) { return sum(gelu(v)); }, g, 1e-4, 1e-4).pass);
  auto m = test::random_d({1, 1, 2, 2}, 16);
  auto w = test::random_d({1, 1, 2, 2}, 17);
  auto chain = [&](const TensorD& v) { return sum(mul(matmul(softmax_rows(v, 1.0), m), w)); };
  CHECK(fd_gradcheck(chain, m.clone(), 1e-4, 1e-4).pass);
}

TEST_CASE("fd_gradcheck detects non-determinism") {
  int calls = 0;
  auto x = test::random_d({1, 1, 1, 2}, 18);
  auto flaky = [&](const TensorD& v) {
    ++calls;
    return sum(scale(v, 1.0 + calls * 1e-3));
  };
  CHECK_THROWS_AS(fd_gradcheck(flaky, x), DeterminismError);
}

TEST_CASE("primitive gradients match finite differences") {
  auto x = test::random_d({2, 4, 4, 4}, 19);
  auto r = test::random_d({2, 4, 4, 4}, 20);
  auto weighted = [&](auto op) {
    return [&, op](const TensorD& v) {
      TensorD out = op(v);
      auto rr = test::random_d(out.shape(), 21);
      return sum(mul(out, rr));
    };
  };
  CHECK(fd_gradcheck(weighted([](const TensorD& v) { return gelu(v); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([](const TensorD& v) { return softmax_rows(v, 0.7); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([&](const TensorD& v) { return sub(v, r); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([](const TensorD& v) { return pool_half(v, PoolMode::Avg); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([](const TensorD& v) { return pool_half(v, PoolMode::Max); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([](const TensorD& v) { return upsample2x(v, UpsampleMode::Bilinear); }), x, 1e-4, 1e-5)
            .pass);
  CHECK(fd_gradcheck(weighted([](const TensorD& v) { return upsample2x(v, UpsampleMode::Nearest); }), x, 1e-4, 1e-5)
            .pass);
  CHECK(fd_gradcheck(weighted([](const TensorD& v) { return pixel_shuffle(v, 2); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([](const TensorD& v) { return window_partition(v, 2); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([](const TensorD& v) { return pad_reflect(v, 3, 5); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([](const TensorD& v) { return slice_channels(v, 1, 2); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([&](const TensorD& v) { return concat_channels<double>({r, v, v}); }), x, 1e-4, 1e-5)
            .pass);

  auto gamma = test::random_d({4, 1, 1, 1}, 22);
  auto beta = test::random_d({4, 1, 1, 1}, 23);
  CHECK(fd_gradcheck(weighted([&](const TensorD& v) { return layer_norm(v, gamma, beta); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([&](const TensorD& v) { return layer_norm(x, v, beta); }), gamma, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([&](const TensorD& v) { return layer_norm(x, gamma, v); }), beta, 1e-4, 1e-5).pass);

  auto w = test::random_d({3, 4, 3, 3}, 24);
  auto b = test::random_d({3, 1, 1, 1}, 25);
  ConvSpec spec{4, 3, 3, 1, true};
  CHECK(fd_gradcheck(weighted([&](const TensorD& v) { return conv2d(v, w, b, spec); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([&](const TensorD& v) { return conv2d(x, v, b, spec); }), w, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([&](const TensorD& v) { return conv2d(x, w, v, spec); }), b, 1e-4, 1e-5).pass);
  auto dw = test::random_d({4, 1, 3, 3}, 26);
  ConvSpec dspec{4, 4, 3, 4, false};
  CHECK(fd_gradcheck(weighted([&](const TensorD& v) { return conv2d(v, dw, TensorD{}, dspec); }), x, 1e-4, 1e-5).pass);
  CHECK(fd_gradcheck(weighted([&](const TensorD& v) { return conv2d(x, v, TensorD{}, dspec); }), dw, 1e-4, 1e-5).pass);

  auto target = test::random_d(x.shape(), 27);
  CHECK(fd_gradcheck([&](const TensorD& v) { return l1_loss(v, target); }, x, 1e-6, 1e-6).pass);
}

TEST_CASE("kernels: serial and parallel are bit-identical") {
  auto x = test::random_f({2, 6, 9, 11}, 28);
  auto w = test::random_f({5, 6, 3, 3}, 29);
  auto b = test::random_f({5, 1, 1, 1}, 30);
  ConvSpec spec{6, 5, 3, 1, true};
  TensorF ys, yp;
  {
    ExecModeScope m(ExecMode::Serial);
    ys = conv2d(x, w, b, spec);
  }
  {
    ExecModeScope m(ExecMode::Parallel);
    yp = conv2d(x, w, b, spec);
  }
  CHECK(std::equal(ys.data().begin(), ys.data().end(), yp.data().begin()));

  auto p = test::random_f({3, 1, 7, 5}, 31);
  auto q = test::random_f({3, 1, 5, 4}, 32);
  TensorF ms, mp;
  {
    ExecModeScope m(ExecMode::Serial);
    ms = bmm(p, q, false, false);
  }
  {
    ExecModeScope m(ExecMode::Parallel);
    mp = bmm(p, q, false, false);
  }
  CHECK(std::equal(ms.data().begin(), ms.data().end(), mp.data().begin()));
}

TEST_CASE("public ops stay finite for bounded inputs") {
  auto x = test::random_f({1, 4, 8, 8}, 33, -1e6, 1e6);
  CHECK(all_finite(gelu(x).data()));
  CHECK(all_finite(softmax_rows(x, 1.0f).data()));
  auto g = TensorF::full({4, 1, 1, 1}, 1.0f);
  auto z = TensorF::zeros({4, 1, 1, 1});
  CHECK(all_finite(layer_norm(x, g, z).data()));
  CHECK(all_finite(pool_half(x).data()));
}

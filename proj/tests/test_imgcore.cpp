#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <numbers>
#include <set>

#include "msgpm/equalize.hpp"
#include "msgpm/error.hpp"
#include "msgpm/flow_color.hpp"
#include "msgpm/image_io.hpp"
#include "msgpm/metrics.hpp"
#include "support.hpp"

using namespace msgpm;

namespace {

void write_bytes(const std::filesystem::path& p, const std::string& s) {
  write_file_bytes(p, std::span(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

}  // namespace

TEST_CASE("load_image normalizes bytes") {
  const auto dir = testing::temp_dir("load");
  write_bytes(dir / "white.ppm", std::string("P6\n2 2\n255\n") + std::string(12, '\xff'));
  const Image white = load_image(dir / "white.ppm");
  CHECK(white.channels() == 3);
  for (double v : white.data()) CHECK(v == 1.0);

  save_png(Image(1, 1, 3), dir / "black.png");
  const Image black = load_image(dir / "black.png");
  CHECK(black.channels() == 3);
  for (double v : black.data()) CHECK(v == 0.0);

  std::string ramp = "P5\n256 1\n255\n";
  for (int i = 0; i < 256; ++i) ramp.push_back(char(i));
  write_bytes(dir / "ramp.pgm", ramp);
  const Image g = load_image(dir / "ramp.pgm");
  REQUIRE(g.channels() == 1);
  for (int i = 0; i < 256; ++i) CHECK(g.at(i, 0, 0) == doctest::Approx(i / 255.0).epsilon(1e-15));
}

TEST_CASE("load_image quantization round trip reproduces bytes") {
  const auto dir = testing::temp_dir("quant");
  std::string body;
  for (int i = 0; i < 4 * 3 * 3; ++i) body.push_back(char((i * 37) % 256));
  write_bytes(dir / "q.ppm", "P6\n4 3\n255\n" + body);
  const Image img = load_image(dir / "q.ppm");
  for (std::size_t i = 0; i < body.size(); ++i)
    CHECK(int(std::lround(img.data()[i] * 255.0)) == int(std::uint8_t(body[i])));
}

TEST_CASE("load_image errors name the path and differ by cause") {
  const auto dir = testing::temp_dir("load_err");
  std::string missing, unsupported, corrupt;
  try {
    load_image(dir / "nope.png");
  } catch (const IoError& e) {
    missing = e.what();
  }
  write_bytes(dir / "x.gif", "GIF89a....");
  try {
    load_image(dir / "x.gif");
  } catch (const FormatError& e) {
    unsupported = e.what();
  }
  write_bytes(dir / "bad.ppm", "P6\nabc def\n255\n");
  try {
    load_image(dir / "bad.ppm");
  } catch (const FormatError& e) {
    corrupt = e.what();
  }
  CHECK(missing.find("nope.png") != std::string::npos);
  CHECK(unsupported.find("x.gif") != std::string::npos);
  CHECK(corrupt.find("bad.ppm") != std::string::npos);
  CHECK(std::set<std::string>{missing, unsupported, corrupt}.size() == 3);
}

TEST_CASE("flo round trip and byte layout") {
  const auto dir = testing::temp_dir("flo");
  const FlowField f = testing::constant_flow(3, 3, {1.5, -2.25});
  write_flo(f, dir / "a.flo");
  CHECK(read_flo(dir / "a.flo") == f);

  FlowField two(2, 1);
  two.set(0, 0, {0, 0});
  two.set(1, 0, {5, -3});
  std::vector<std::uint8_t> expected = {0x50, 0x49, 0x45, 0x48, 2, 0, 0, 0, 1, 0, 0, 0};
  for (float v : {0.0f, 0.0f, 5.0f, -3.0f}) {
    std::uint8_t b[4];
    std::memcpy(b, &v, 4);
    expected.insert(expected.end(), b, b + 4);
  }
  CHECK(encode_flo(two) == expected);

  write_bytes(dir / "bad.flo", "XXXX" + std::string(8 + 8, '\0'));
  CHECK_THROWS_AS(read_flo(dir / "bad.flo"), FormatError);
  auto truncated = encode_flo(f);
  truncated.resize(truncated.size() - 3);
  CHECK_THROWS_AS(decode_flo(truncated, "t"), IoError);
}

TEST_CASE("flo invalid pixels use the large-magnitude sentinel") {
  FlowField f(2, 2);
  f.set(0, 0, {0.25, 7.0});
  const FlowField back = decode_flo(encode_flo(f), "s");
  CHECK(back.valid(0, 0));
  CHECK_FALSE(back.valid(1, 0));
  CHECK_FALSE(back.valid(1, 1));
}

TEST_CASE("flow_to_color wheel") {
  const Image white = flow_to_color(testing::constant_flow(4, 4, {0, 0}));
  for (double v : white.data()) CHECK(v == doctest::Approx(1.0));

  FlowField one(1, 1);
  one.set(0, 0, {3.0, 0.0});
  const Image sat = flow_to_color(one, 3.0);
  const auto wheel = testing::reference_wheel();
  for (int c = 0; c < 3; ++c) CHECK(sat.at(0, 0, c) == doctest::Approx(wheel[0][std::size_t(c)]));

  FlowField ring(8, 1);
  for (int k = 0; k < 8; ++k) ring.set(k, 0, {std::cos(k * std::numbers::pi / 4), std::sin(k * std::numbers::pi / 4)});
  const Image img = flow_to_color(ring, 1.0);
  std::vector<double> positions;
  for (int k = 0; k < 8; ++k) {
    const double u = std::cos(k * std::numbers::pi / 4), v = std::sin(k * std::numbers::pi / 4);
    const double fk = (std::atan2(-v, -u) / std::numbers::pi + 1.0) / 2.0 * 54.0;
    const int k0 = int(std::floor(fk)), k1 = (k0 + 1) % 55;
    const double f = fk - k0;
    for (int c = 0; c < 3; ++c) {
      const double expect = (1 - f) * wheel[std::size_t(k0)][std::size_t(c)] + f * wheel[std::size_t(k1)][std::size_t(c)];
      CHECK(img.at(k, 0, c) == doctest::Approx(expect).epsilon(1e-9));
    }
    positions.push_back(color_wheel_position({u, v}).x);
  }
  std::set<std::array<long, 3>> hues;
  for (int k = 0; k < 8; ++k)
    hues.insert({std::lround(img.at(k, 0, 0) * 1e6), std::lround(img.at(k, 0, 1) * 1e6), std::lround(img.at(k, 0, 2) * 1e6)});
  CHECK(hues.size() == 8);
  // Wheel order: positions advance by 54/8 bins per 45 degrees (mod 54).
  for (int k = 1; k < 8; ++k) {
    const double step = std::fmod(positions[std::size_t(k)] - positions[std::size_t(k - 1)] + 54.0, 54.0);
    CHECK(step == doctest::Approx(54.0 / 8.0));
  }
}

TEST_CASE("opposite flows sit half a wheel apart at equal saturation") {
  for (Vec2 v : {Vec2{1, 2}, Vec2{-3, 0.5}, Vec2{0.2, -0.7}}) {
    const Vec2 a = color_wheel_position(v), b = color_wheel_position(Vec2{-v.x, -v.y});
    CHECK(std::fmod(std::abs(a.x - b.x), 54.0) == doctest::Approx(27.0));
    CHECK(a.y == doctest::Approx(b.y));
  }
}

TEST_CASE("hsv equalization") {
  // Uniform V histogram: gray levels 0..255, one pixel each.
  std::vector<double> ramp;
  for (int i = 0; i < 256; ++i)
    for (int c = 0; c < 3; ++c) ramp.push_back(i / 255.0);
  const Image r(256, 1, 3, ramp);
  const auto [eq, eq2] = hsv_histogram_equalize(r, r);
  for (int i = 0; i < 256; ++i) CHECK(std::abs(eq.at(i, 0, 0) - i / 255.0) <= 1.0 / 255.0 + 1e-12);

  const Image flat = testing::constant_image(5, 5, 3, 0.4);
  const Image ef = equalize_value_channel(flat);
  for (double v : ef.data()) CHECK(v == doctest::Approx(ef.data()[0]));

  // 25% at V=0.2, 75% at V=0.6: cdf 25 and 100, cdf_min 25, so the levels
  // map to (25-25)*255/75 = 0 and (100-25)*255/75 = 255.
  std::vector<double> two;
  for (int i = 0; i < 100; ++i)
    for (int c = 0; c < 3; ++c) two.push_back(i < 25 ? 0.2 : 0.6);
  const Image e2 = equalize_value_channel(Image(100, 1, 3, two));
  for (int i = 0; i < 100; ++i) CHECK(e2.at(i, 0, 0) == doctest::Approx(i < 25 ? 0.0 : 1.0));

  // Hue and saturation survive: channel ratios of a colored pixel are kept.
  std::vector<double> col;
  for (int i = 0; i < 10; ++i) col.insert(col.end(), {0.3 + 0.05 * i, 0.15 + 0.025 * i, 0.1});
  const Image ce = equalize_value_channel(Image(10, 1, 3, col));
  for (int i = 1; i < 10; ++i) {
    const double s_in = 1.0 - 0.1 / (0.3 + 0.05 * i);
    const double s_out = 1.0 - ce.at(i, 0, 2) / ce.at(i, 0, 0);
    CHECK(s_out == doctest::Approx(s_in).epsilon(1e-9));
    CHECK(ce.at(i, 0, 1) / ce.at(i, 0, 0) == doctest::Approx(0.5).epsilon(1e-9));
  }
  CHECK_THROWS_AS(hsv_histogram_equalize(Image(2, 2, 1), Image(2, 2, 1)), InvalidArgument);
}

TEST_CASE("compute_epe examples") {
  const FlowField gt = testing::constant_flow(3, 2, {1, 1});
  const OcclusionMask none(3, 2);
  const auto same = compute_epe(gt, gt, none);
  CHECK(same.epe_all == 0.0);
  CHECK(same.epe_nocc == 0.0);
  CHECK(std::isnan(same.epe_occ));
  CHECK(same.count_occ == 0);

  const auto t = compute_epe(testing::constant_flow(1, 1, {0, 0}), testing::constant_flow(1, 1, {3, 4}), OcclusionMask(1, 1));
  CHECK(t.epe_all == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(t.epe_nocc == doctest::Approx(5.0).epsilon(1e-12));

  FlowField f(2, 1), g(2, 1);
  f.set(0, 0, {1, 0});
  f.set(1, 0, {0, 3});
  g.set(0, 0, {0, 0});
  g.set(1, 0, {0, 0});
  OcclusionMask occ(2, 1);
  occ.set(1, 0, true);
  const auto r = compute_epe(f, g, occ);
  CHECK(std::abs(r.epe_nocc - 1.0) < 1e-9);
  CHECK(std::abs(r.epe_occ - 3.0) < 1e-9);
  CHECK(std::abs(r.epe_all - 2.0) < 1e-9);
  CHECK(r.count_all == r.count_nocc + r.count_occ);

  CHECK_THROWS_AS(compute_epe(f, testing::constant_flow(3, 1, {0, 0}), occ), InvalidArgument);
}

TEST_CASE("compute_epe is invariant to a common translation") {
  const FlowField f = testing::constant_flow(4, 4, {0.5, -1});
  FlowField g = testing::constant_flow(4, 4, {1, 1});
  g.set(2, 2, {3, 3});
  FlowField f2 = f, g2 = g;
  for (std::size_t i = 0; i < f.size(); ++i) {
    f2.set(i, f.at(i) + Vec2{7, -2});
    g2.set(i, g.at(i) + Vec2{7, -2});
  }
  OcclusionMask occ(4, 4);
  occ.set(1, 1, true);
  const auto a = compute_epe(f, g, occ), b = compute_epe(f2, g2, occ);
  CHECK(a.epe_all == doctest::Approx(b.epe_all));
  CHECK(a.epe_occ == doctest::Approx(b.epe_occ));
  CHECK(a.epe_nocc == doctest::Approx(b.epe_nocc));
}

TEST_CASE("epe difference map colors") {
  const FlowField gt = testing::constant_flow(4, 4, {0, 0});
  auto is = [](const Image& img, int x, int y, const double* c) {
    return img.at(x, y, 0) == c[0] && img.at(x, y, 1) == c[1] && img.at(x, y, 2) == c[2];
  };
  const Image zero = epe_difference_map(gt, gt, gt);
  const Image better = epe_difference_map(gt, testing::constant_flow(4, 4, {2, 0}), gt);
  FlowField checker_b(4, 4);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) checker_b.set(x, y, (x + y) % 2 ? Vec2{2, 0} : Vec2{0, 0});
  const Image checker = epe_difference_map(gt, checker_b, gt);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      CHECK(is(zero, x, y, diffmap::kZero));
      CHECK(is(better, x, y, diffmap::kABetter));
      CHECK(is(checker, x, y, (x + y) % 2 ? diffmap::kABetter : diffmap::kZero));
    }
  CHECK_THROWS_AS(epe_difference_map(gt, testing::constant_flow(3, 4, {0, 0}), gt), InvalidArgument);
}

TEST_CASE("mask scoring") {
  OcclusionMask p(4, 1), t(4, 1);
  p.set(0, true);
  p.set(1, true);
  t.set(1, true);
  t.set(2, true);
  const auto s = score_mask(p, t);
  CHECK(s.precision == doctest::Approx(0.5));
  CHECK(s.recall == doctest::Approx(0.5));
  CHECK(s.f1 == doctest::Approx(0.5));
}

TEST_CASE("image invariants") {
  CHECK_THROWS_AS(Image(2, 2, 2), InvalidArgument);
  CHECK_THROWS_AS(Image(1, 1, 1, {1.5}), InvalidArgument);
  CHECK_THROWS_AS(Image(2, 1, 1, {0.5}), InvalidArgument);
  FlowField f(2, 2);
  CHECK_FALSE(f.get(0, 0).has_value());
  CHECK_THROWS(f.at(0, 0));
}

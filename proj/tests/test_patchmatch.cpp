#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <limits>

#include "msgpm/error.hpp"
#include "msgpm/patchmatch.hpp"
#include "support.hpp"

using namespace msgpm;

namespace {

// Brute-force reference cost with border clamping, written from the
// definition rather than shared with the library.
double ref_cost(const Image& a, const Image& b, Pixel p, Pixel q, int r) {
  double s = 0.0;
  const int c = a.channels();
  for (int dy = -r; dy <= r; ++dy)
    for (int dx = -r; dx <= r; ++dx) {
      const int ax = std::clamp(p.x + dx, 0, a.width() - 1), ay = std::clamp(p.y + dy, 0, a.height() - 1);
      const int bx = std::clamp(q.x + dx, 0, b.width() - 1), by = std::clamp(q.y + dy, 0, b.height() - 1);
      double d = 0.0;
      for (int k = 0; k < c; ++k) d += std::abs(a.at(ax, ay, k) - b.at(bx, by, k));
      s += d / c;
    }
  return s / double((2 * r + 1) * (2 * r + 1));
}

// Exhaustive minimum cost per pixel.
std::vector<double> ref_min_cost(const Image& a, const Image& b, int r) {
  std::vector<double> out;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x) {
      double best = std::numeric_limits<double>::infinity();
      for (int qy = 0; qy < b.height(); ++qy)
        for (int qx = 0; qx < b.width(); ++qx) best = std::min(best, ref_cost(a, b, {x, y}, {qx, qy}, r));
      out.push_back(best);
    }
  return out;
}

Image circular_shift(const Image& a, int sx) {
  std::vector<double> d;
  for (int y = 0; y < a.height(); ++y)
    for (int x = 0; x < a.width(); ++x)
      for (int c = 0; c < a.channels(); ++c) d.push_back(a.at(((x - sx) % a.width() + a.width()) % a.width(), y, c));
  return Image(a.width(), a.height(), a.channels(), d);
}

}  // namespace

TEST_CASE("patch_cost examples") {
  const Image a = testing::noise_image(9, 9, 3, 3);
  CHECK(patch_cost(a, a, {4, 4}, {4, 4}, 3) == 0.0);
  CHECK(patch_cost(testing::constant_image(5, 5, 1, 0.0), testing::constant_image(5, 5, 1, 1.0), {0, 0}, {4, 2}, 2) == 1.0);

  std::vector<double> da(9, 0.5), db(9, 0.5);
  for (int i : {0, 2, 4, 8}) db[std::size_t(i)] += 0.1;
  const Image pa(3, 3, 1, da), pb(3, 3, 1, db);
  CHECK(patch_cost(pa, pb, {1, 1}, {1, 1}, 1) == doctest::Approx(0.1 * 4.0 / 9.0).epsilon(1e-12));

  const Image b = testing::noise_image(9, 9, 3, 4);
  for (Pixel p : {Pixel{0, 0}, Pixel{8, 3}, Pixel{4, 4}})
    for (Pixel q : {Pixel{0, 8}, Pixel{2, 2}, Pixel{7, 7}})
      CHECK(patch_cost(a, b, p, q, 3) == doctest::Approx(ref_cost(a, b, p, q, 3)).epsilon(1e-12));
}

TEST_CASE("zero seed on identical images is a fixed point") {
  const Image a = testing::noise_image(20, 16, 3, 5);
  const FlowField zero = testing::constant_flow(20, 16, {0, 0});
  const Nnf n = compute_nnf(a, a, {}, {}, &zero);
  for (std::size_t i = 0; i < n.cost.size(); ++i) {
    CHECK(n.offsets.at(i) == Vec2{0, 0});
    CHECK(n.cost[i] == 0.0);
  }
}

TEST_CASE("circular shift matches the exhaustive oracle on interior pixels") {
  const Image a = testing::noise_image(32, 32, 1, 7);
  const Image b = circular_shift(a, 4);
  PatchMatchConfig cfg;
  cfg.iterations = 8;
  const Nnf n = compute_nnf(a, b, cfg);
  const auto oracle = ref_min_cost(a, b, cfg.patch_radius);
  int checked = 0;
  for (int y = 3; y <= 28; ++y)
    for (int x = 3; x + 4 + 3 <= 31; ++x) {
      const std::size_t i = std::size_t(y) * 32 + std::size_t(x);
      CHECK(oracle[i] == 0.0);
      CHECK(n.offsets.at(i) == Vec2{4, 0});
      CHECK(n.cost[i] == 0.0);
      ++checked;
    }
  CHECK(checked > 500);
  // Library brute force agrees with the independent oracle everywhere.
  const Nnf ex = exhaustive_nnf(a, b, cfg.patch_radius);
  for (std::size_t i = 0; i < oracle.size(); ++i) CHECK(ex.cost[i] == doctest::Approx(oracle[i]).epsilon(1e-12));
}

TEST_CASE("in-bounds translation converges on 48x48") {
  const Image big = testing::noise_image(60, 60, 3, 11);
  const Image a = testing::crop(big, 6, 6, 48, 48);
  const Image b = testing::crop(big, 3, 4, 48, 48);  // a(p) = b(p + (3,2))
  PatchMatchConfig cfg;
  cfg.iterations = 8;
  const Nnf n = compute_nnf(a, b, cfg);
  for (int y = 3; y + 2 + 3 <= 47; ++y)
    for (int x = 3; x + 3 + 3 <= 47; ++x) {
      const std::size_t i = std::size_t(y) * 48 + std::size_t(x);
      CHECK(n.offsets.at(i) == Vec2{3, 2});
      CHECK(n.cost[i] == 0.0);
    }
}

TEST_CASE("fully frozen call returns the seed") {
  const Image a = testing::noise_image(12, 10, 3, 1), b = testing::noise_image(12, 10, 3, 2);
  FlowField seed(12, 10);
  for (int y = 0; y < 10; ++y)
    for (int x = 0; x < 12; ++x) seed.set(x, y, {double((x * 7) % 12 - x), double((y * 3) % 10 - y)});
  const std::vector<std::uint8_t> all(120, 1);
  const Nnf n = compute_nnf(a, b, {}, all, &seed);
  CHECK(n.offsets == seed);
  CHECK(verify_nnf(n, a, b, {}));
}

TEST_CASE("frozen pixels act as propagation sources") {
  const Image big = testing::noise_image(40, 40, 1, 21);
  const Image a = testing::crop(big, 4, 4, 32, 32);
  const Image b = testing::crop(big, 2, 4, 32, 32);  // truth (2,0)
  FlowField seed(32, 32);
  std::vector<std::uint8_t> frozen(32 * 32, 0);
  for (int y = 0; y < 32; ++y)
    for (int x = 0; x < 32; ++x)
      if (x == 10) {
        seed.set(x, y, {2, 0});
        frozen[std::size_t(y) * 32 + std::size_t(x)] = 1;
      }
  PatchMatchConfig cfg;
  cfg.iterations = 1;
  const Nnf n = compute_nnf(a, b, cfg, frozen, &seed);
  int right = 0;
  for (int y = 3; y < 29; ++y)
    for (int x = 11; x < 27; ++x) right += n.offsets.at(x, y) == Vec2{2, 0};
  CHECK(right == 26 * 16);
}

TEST_CASE("verify_nnf") {
  const Image a = testing::noise_image(16, 16, 3, 8), b = testing::noise_image(16, 16, 3, 9);
  Nnf n = compute_nnf(a, b, {});
  CHECK(verify_nnf(n, a, b, {}));
  Nnf bumped = n;
  bumped.cost[17] += 1.0;
  CHECK_FALSE(verify_nnf(bumped, a, b, {}));
  Nnf out = n;
  out.offsets.set(0, 0, {-5, 0});
  CHECK_FALSE(verify_nnf(out, a, b, {}));
}

TEST_CASE("total cost is non-increasing across iterations") {
  const Image big = testing::noise_image(48, 48, 3, 31);
  const Image a = testing::crop(big, 0, 0, 40, 40), b = testing::crop(big, 5, 3, 40, 40);
  double prev = std::numeric_limits<double>::infinity();
  for (int it = 1; it <= 6; ++it) {
    PatchMatchConfig cfg;
    cfg.iterations = it;
    const double total = compute_nnf(a, b, cfg).total_cost();
    CHECK(total <= prev);
    prev = total;
  }
}

TEST_CASE("determinism and validation") {
  const Image a = testing::noise_image(20, 20, 3, 1), b = testing::noise_image(20, 20, 3, 2);
  PatchMatchConfig cfg;
  cfg.rng_seed = 99;
  const Nnf x = compute_nnf(a, b, cfg), y = compute_nnf(a, b, cfg);
  CHECK(x.offsets == y.offsets);
  CHECK(x.cost == y.cost);
  PatchMatchConfig bad;
  bad.search_decay = 1.0;
  CHECK_THROWS_AS(compute_nnf(a, b, bad), InvalidArgument);
  CHECK_THROWS_AS(compute_nnf(a, testing::noise_image(20, 20, 1, 3), cfg), InvalidArgument);
}

TEST_CASE("nnf cache files round trip") {
  const auto dir = testing::temp_dir("nnf");
  const Image a = testing::noise_image(10, 8, 3, 1), b = testing::noise_image(10, 8, 3, 2);
  const Nnf n = compute_nnf(a, b, {});
  save_nnf(n, dir / "n.flo", dir / "n.cost");
  const Nnf m = load_nnf(dir / "n.flo", dir / "n.cost");
  CHECK(m.offsets == n.offsets);
  for (std::size_t i = 0; i < n.cost.size(); ++i) CHECK(m.cost[i] == doctest::Approx(n.cost[i]).epsilon(1e-6));
}

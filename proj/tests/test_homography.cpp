#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <chrono>
#include <random>
#include <set>

#include "msgpm/error.hpp"
#include "msgpm/homography.hpp"

using namespace msgpm;

namespace {

Vec2 project(const Eigen::Matrix3d& m, Vec2 p) {
  const Eigen::Vector3d r = m * Eigen::Vector3d(p.x, p.y, 1.0);
  return {r(0) / r(2), r(1) / r(2)};
}

Eigen::Matrix3d planted() {
  Eigen::Matrix3d m;
  m << 1.02, 0.03, 4.0, -0.02, 0.98, -3.0, 0.001, -0.0005, 1.0;
  return m;
}

}  // namespace

TEST_CASE("apply examples") {
  CHECK(apply(Homography(), {7.5, 3.0}).x == doctest::Approx(7.5));
  CHECK(apply(Homography(), {7.5, 3.0}).y == doctest::Approx(3.0));
  const Vec2 t = apply(Homography::translation(2, -1), {0, 0});
  CHECK(t.x == doctest::Approx(2.0));
  CHECK(t.y == doctest::Approx(-1.0));
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(0, 0) = d(1, 1) = 2.0;
  const Vec2 s = apply(Homography(d), {3, 4});
  CHECK(s.x == doctest::Approx(6.0));
  CHECK(s.y == doctest::Approx(8.0));

  Eigen::Matrix3d horizon;
  horizon << 1, 0, 0, 0, 1, 0, 1, 0, 1;
  CHECK_THROWS_AS(apply(Homography(horizon), {-1.0, 5.0}), NumericError);
}

TEST_CASE("storage normalization") {
  const Homography h(planted());
  CHECK(h.matrix().norm() == doctest::Approx(1.0));
  CHECK(h.matrix()(2, 2) > 0.0);
  const Homography neg(Eigen::Matrix3d(-3.0 * planted()));
  CHECK((neg.matrix() - h.matrix()).norm() < 1e-15);
  CHECK_THROWS_AS(Homography(Eigen::Matrix3d::Zero()), NumericError);
  Eigen::Matrix3d rank2 = Eigen::Matrix3d::Identity();
  rank2(2, 2) = 0.0;
  CHECK_THROWS_AS(Homography{rank2}, NumericError);
}

TEST_CASE("inverse round trip") {
  const Homography h(planted());
  const Homography inv = h.inverse();
  for (Vec2 p : {Vec2{0, 0}, Vec2{100, 50}, Vec2{-20, 300}}) {
    const Vec2 back = apply(inv, apply(h, p));
    CHECK(std::abs(back.x - p.x) < 1e-9);
    CHECK(std::abs(back.y - p.y) < 1e-9);
  }
}

TEST_CASE("fit_dlt minimal and degenerate cases") {
  std::vector<Correspondence> sq;
  for (Vec2 p : {Vec2{0, 0}, Vec2{1, 0}, Vec2{1, 1}, Vec2{0, 1}}) sq.push_back({p, p + Vec2{3.5, -1.25}});
  const Homography h = fit_dlt(sq);
  const Homography t = Homography::translation(3.5, -1.25);
  CHECK((h.matrix() - t.matrix()).cwiseAbs().maxCoeff() < 1e-9);

  std::vector<Correspondence> exact;
  for (Vec2 p : {Vec2{10, 20}, Vec2{200, 15}, Vec2{180, 160}, Vec2{30, 140}}) exact.push_back({p, project(planted(), p)});
  const Homography e = fit_dlt(exact);
  const Homography e_inv = e.inverse();
  for (const auto& c : exact) CHECK(symmetric_transfer_error(e, e_inv, c) < 1e-6);

  std::vector<Correspondence> line;
  for (double x : {0.0, 1.0, 2.0, 3.0}) line.push_back({{x, 2 * x}, {x + 1, 2 * x}});
  CHECK_THROWS_AS(fit_dlt(line), NumericError);
  CHECK_THROWS_AS(fit_dlt(std::span(sq).first(3)), InvalidArgument);
}

TEST_CASE("fit_dlt with noise reprojects within half a pixel") {
  Eigen::Matrix3d m = planted();
  m(2, 0) = 0.001;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0, 200);
  std::normal_distribution<double> n(0, 0.1);
  std::vector<Correspondence> pairs;
  for (int i = 0; i < 20; ++i) {
    const Vec2 p{u(rng), u(rng)};
    const Vec2 q = project(m, p);
    pairs.push_back({p, {q.x + n(rng), q.y + n(rng)}});
  }
  const Homography h = fit_dlt(pairs);
  for (const auto& c : pairs) {
    const Vec2 truth = project(m, c.src);
    CHECK((apply(h, c.src) - truth).norm() < 0.5);
  }
}

TEST_CASE("fit_dlt is equivariant under similarities") {
  std::vector<Correspondence> pairs, moved;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 100);
  Eigen::Matrix3d s1, s2;
  s1 << 2 * std::cos(0.3), -2 * std::sin(0.3), 15, 2 * std::sin(0.3), 2 * std::cos(0.3), -7, 0, 0, 1;
  s2 << 0.5, 0, 40, 0, 0.5, 3, 0, 0, 1;
  for (int i = 0; i < 12; ++i) {
    const Vec2 p{u(rng), u(rng)};
    const Vec2 q = project(planted(), p) + Vec2{0.05 * (i % 3), -0.04 * (i % 2)};
    pairs.push_back({p, q});
    moved.push_back({project(s1, p), project(s2, q)});
  }
  const Homography h = fit_dlt(pairs);
  const Homography hm = fit_dlt(moved);
  const Homography conj(Eigen::Matrix3d(s2 * h.matrix() * s1.inverse()));
  CHECK((hm.matrix() - conj.matrix()).cwiseAbs().maxCoeff() < 1e-9);
}

TEST_CASE("ransac examples") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 200);
  std::vector<Correspondence> clean;
  for (int i = 0; i < 100; ++i) {
    const Vec2 p{u(rng), u(rng)};
    clean.push_back({p, project(planted(), p)});
  }
  const auto all = ransac_homography(clean, {});
  REQUIRE(all.has_value());
  CHECK(all->inlier_indices.size() == 100);
  CHECK((all->model.matrix() - Homography(planted()).matrix()).cwiseAbs().maxCoeff() < 1e-9);

  std::vector<Correspondence> junk;
  for (int i = 0; i < 10; ++i) junk.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
  CHECK_FALSE(ransac_homography(junk, {}).has_value());

  RansacConfig cfg;
  cfg.rng_seed = 17;
  const auto r1 = ransac_homography(clean, cfg), r2 = ransac_homography(clean, cfg);
  CHECK(r1->inlier_indices == r2->inlier_indices);
  CHECK(r1->model.matrix() == r2->model.matrix());
}

TEST_CASE("ransac recovers planted inliers under 50% outliers") {
  const auto start = std::chrono::steady_clock::now();
  int good_runs = 0;
  for (std::uint64_t seed = 1; seed <= 200; ++seed) {
    std::mt19937_64 rng(seed * 7919);
    std::uniform_real_distribution<double> u(0, 200);
    std::vector<Correspondence> pairs;
    for (int i = 0; i < 50; ++i) {
      const Vec2 p{u(rng), u(rng)};
      pairs.push_back({p, project(planted(), p)});
    }
    for (int i = 0; i < 50; ++i) pairs.push_back({{u(rng), u(rng)}, {u(rng), u(rng)}});
    RansacConfig cfg;
    cfg.rng_seed = seed;
    const auto r = ransac_homography(pairs, cfg);
    if (!r) continue;
    const std::set<std::size_t> in(r->inlier_indices.begin(), r->inlier_indices.end());
    int found = 0;
    for (std::size_t i = 0; i < 50; ++i) found += in.count(i);
    const Homography inv = r->model.inverse();
    bool within = true;
    for (std::size_t i = 0; i < 50; ++i)
      if (in.count(i)) within = within && symmetric_transfer_error(r->model, inv, pairs[i]) <= cfg.inlier_px;
    good_runs += found >= 48 && within;
  }
  CHECK(good_runs >= 198);
  CHECK(std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() < 5.0);
}

TEST_CASE("induced flow") {
  const std::vector<Pixel> region = {{0, 0}, {3, 1}, {5, 5}};
  const FlowField zero = induced_flow(Homography(), region, 8, 8);
  for (Pixel p : region) CHECK(zero.at(p.x, p.y).norm() < 1e-12);
  const FlowField t = induced_flow(Homography::translation(3, 2), region, 8, 8);
  for (Pixel p : region) CHECK((t.at(p.x, p.y) - Vec2{3, 2}).norm() < 1e-12);
  CHECK_FALSE(t.valid(1, 1));
  Eigen::Matrix3d d = Eigen::Matrix3d::Identity();
  d(0, 0) = d(1, 1) = 2.0;
  const Vec2 f = induced_flow(Homography(d), Pixel{5, 5});
  CHECK(f.x == doctest::Approx(5.0));
  CHECK(f.y == doctest::Approx(5.0));
  Eigen::Matrix3d horizon;
  horizon << 1, 0, 0, 0, 1, 0, 1, 0, 1;
  CHECK_THROWS_AS(induced_flow(Homography(horizon), Pixel{-1, 0}), NumericError);
}

TEST_CASE("format_homography round trips") {
  const Homography h(planted());
  const std::string s = format_homography(h);
  std::array<double, 9> v{};
  std::istringstream in(s);
  for (double& x : v) in >> x;
  CHECK(Homography::from_row_major(v).matrix() == h.matrix());
}

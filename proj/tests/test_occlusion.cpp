#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msgpm/occlusion.hpp"
#include "msgpm/synth.hpp"
#include "support.hpp"

using namespace msgpm;

namespace {

std::vector<Pixel> block(int x0, int y0, int w, int h) {
  std::vector<Pixel> r;
  for (int y = y0; y < y0 + h; ++y)
    for (int x = x0; x < x0 + w; ++x) r.push_back({x, y});
  return r;
}

PlaneModel model(int id, Homography h) {
  PlaneModel m;
  m.id = id;
  m.h_fwd = h;
  m.h_bwd = h.inverse();
  return m;
}

void assign_block(PlaneAssignment& a, const std::vector<Pixel>& px, int id, double loss) {
  for (Pixel p : px) a.assign(std::size_t(p.y) * std::size_t(a.width()) + std::size_t(p.x), id, loss, 1);
}

}  // namespace

TEST_CASE("symmetry check") {
  const auto inl = block(20, 20, 30, 30);
  const PlaneModel exact = model(0, tilted_translation({35, 35}, {4, -2}, 3e-4, 1e-4));
  CHECK(symmetry_check(exact, inl, 100, 100) >= 0.95);
  PlaneModel disjoint = model(1, Homography::translation(3, 0));
  disjoint.h_bwd = Homography::translation(40, 40);
  CHECK(symmetry_check(disjoint, inl, 100, 100) < 0.01);
  PlaneModel none = exact;
  none.h_bwd.reset();
  CHECK(symmetry_check(none, inl, 100, 100) == 0.0);
}

TEST_CASE("symmetry check rejects an occluder's accidental match") {
  // The occluded strip of a foreground sliding right is matched forward to
  // background texture that moves with the background, not with the strip.
  const auto strip = block(60, 30, 10, 40);
  PlaneModel accidental;
  accidental.id = 0;
  accidental.h_fwd = Homography::translation(-3, 0);
  accidental.h_bwd = Homography::translation(-10, 0);  // background's backward motion
  CHECK(symmetry_check(accidental, strip, 128, 128) < 0.5);
}

TEST_CASE("agreement check") {
  const auto g = block(0, 0, 10, 10);
  CHECK(agreement_check(g, g, 20) == 1.0);
  CHECK(agreement_check(g, block(10, 10, 5, 5), 20) == 0.0);
  std::vector<Pixel> p = block(0, 0, 10, 7);  // 70 shared
  for (int x = 0; x < 10; ++x) p.push_back({x, 12});
  CHECK(p.size() == 80);
  CHECK(agreement_check(g, p, 20) == doctest::Approx(70.0 / 110.0).epsilon(1e-12));
}

TEST_CASE("multiplicity filter") {
  const std::vector<PlaneModel> models = {model(0, Homography::translation(10, 0)),
                                          model(1, Homography::translation(-10, 0))};
  const auto r0 = block(10, 10, 10, 10);  // -> 20..29
  const auto r1 = block(30, 10, 10, 10);  // -> 20..29

  SUBCASE("disjoint targets") {
    PlaneAssignment a(64, 32);
    assign_block(a, r0, 0, 0.001);
    assign_block(a, block(40, 10, 10, 10), 1, 0.030);
    CHECK(multiplicity_demotions(a, models, 0.01).empty());
  }
  SUBCASE("higher loss loses the contested pixels") {
    PlaneAssignment a(64, 32);
    assign_block(a, r0, 0, 0.001);
    assign_block(a, r1, 1, 0.030);
    const auto d = multiplicity_demotions(a, models, 0.01);
    CHECK(d.size() == 100);
    for (std::size_t i : d) CHECK(a.model_id(i) == 1);
    CHECK(multiplicity_filter(a, models, 0.01) == 100);
    CHECK(a.count_assigned() == 100);
    for (Pixel p : r0) CHECK(a.assigned(std::size_t(p.y) * 64 + std::size_t(p.x)));
  }
  SUBCASE("equal losses keep both") {
    PlaneAssignment a(64, 32);
    assign_block(a, r0, 0, 0.02);
    assign_block(a, r1, 1, 0.02);
    CHECK(multiplicity_demotions(a, models, 0.01).empty());
  }
  SUBCASE("difference within the margin keeps both") {
    PlaneAssignment a(64, 32);
    assign_block(a, r0, 0, 0.010);
    assign_block(a, r1, 1, 0.019);
    CHECK(multiplicity_demotions(a, models, 0.01).empty());
  }
  SUBCASE("strictly minimal model is never demoted") {
    const std::vector<PlaneModel> three = {models[0], models[1], model(2, Homography::translation(0, 5))};
    PlaneAssignment a(64, 32);
    assign_block(a, r0, 0, 0.005);
    assign_block(a, r1, 1, 0.030);
    assign_block(a, block(20, 5, 10, 10), 2, 0.035);
    for (std::size_t i : multiplicity_demotions(a, three, 0.01)) CHECK(a.model_id(i) != 0);
  }
}

TEST_CASE("final occlusion map") {
  const Image a = testing::noise_image(30, 20, 3, 2);
  const FlowField zero = testing::constant_flow(30, 20, {0, 0});
  CHECK(final_occlusion_map(zero, a, a, 0.08).count() == 0);

  const FlowField out = testing::constant_flow(30, 20, {5, 0});
  const OcclusionMask m = final_occlusion_map(out, a, a, 100.0);
  for (int y = 0; y < 20; ++y)
    for (int x = 0; x < 30; ++x) CHECK(m.occluded(x, y) == (x + 5 > 29));

  std::vector<std::uint8_t> forced(600, 0);
  forced[7] = 1;
  const OcclusionMask f = final_occlusion_map(zero, a, a, 0.08, forced);
  CHECK(f.count() == 1);
  CHECK(f.occluded(7));
}

TEST_CASE("final occlusion map is monotone in the threshold") {
  const Image a = testing::noise_image(40, 30, 3, 5), b = testing::noise_image(40, 30, 3, 6);
  const FlowField f = testing::constant_flow(40, 30, {0.5, -0.25});
  std::size_t prev = 40 * 30 + 1;
  for (double t : {0.0, 0.02, 0.05, 0.1, 0.2, 0.4, 1.0}) {
    const OcclusionMask m = final_occlusion_map(f, a, b, t);
    CHECK(m.count() <= prev);
    prev = m.count();
  }
  const OcclusionMask lo = final_occlusion_map(f, a, b, 0.1), hi = final_occlusion_map(f, a, b, 0.2);
  for (std::size_t i = 0; i < lo.size(); ++i)
    if (hi.occluded(i)) CHECK(lo.occluded(i));
}

TEST_CASE("ground truth flow yields the planted occlusion band") {
  const SynthScene s = two_plane_fixture(1);
  const OcclusionMask m = final_occlusion_map(s.gt, s.a, s.b, 0.08);
  std::size_t tp = 0, fp = 0, fn = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    tp += m.occluded(i) && s.occ.occluded(i);
    fp += m.occluded(i) && !s.occ.occluded(i);
    fn += !m.occluded(i) && s.occ.occluded(i);
  }
  const double f1 = 2.0 * double(tp) / double(2 * tp + fp + fn);
  CHECK(f1 >= 0.8);
}

TEST_CASE("occlusion config validation") {
  OcclusionConfig c;
  c.delta_m = -1.0;
  CHECK_THROWS(c.validate());
}

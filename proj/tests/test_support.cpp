#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cstdlib>

#include <nlohmann/json.hpp>

#include "sdsr/metrics.hpp"
#include "sdsr/raw_io.hpp"
#include "sdsr/support.hpp"
#include "support/test_util.hpp"

using namespace sdsr;

namespace {

SupportMask random_mask(int levels, int h, int w, std::uint64_t seed) {
  SupportMask m(levels, h, w, false);
  std::mt19937_64 rng(seed);
  auto f = m.flags();
  for (std::size_t i = 0; i < m.highpass_size(); ++i) f[i] = rng() % 3 == 0 ? 1 : 0;
  return m;
}

std::size_t hamming(const SupportMask& a, const SupportMask& b) {
  std::size_t d = 0;
  for (std::size_t i = 0; i < a.highpass_size(); ++i) d += a.flags()[i] != b.flags()[i];
  return d;
}

}  // namespace

TEST_CASE("mask construction keeps the low-pass band in the support") {
  const SupportMask m(2, 4, 5, false);
  CHECK(m.size() == 17u * 20u);
  CHECK(m.highpass_size() == 16u * 20u);
  CHECK(m.support_count() == 0);
  for (std::size_t i = m.highpass_size(); i < m.size(); ++i) CHECK(m.in_support(i));
  const SupportMask c = m.complement();
  CHECK(c.support_count() == c.highpass_size());
  for (std::size_t i = c.highpass_size(); i < c.size(); ++i) CHECK(c.in_support(i));
}

TEST_CASE("rho = 1 leaves no high-pass coefficient in the support") {
  const Image u = test::random_image(32, 32, 4);
  const FrameletSystem sys(1);
  CHECK(detect_support(u, sys, 1.0).support_count() == 0);
  // with only the high-pass bands defining the threshold, exactly the maximum would tie and still be excluded
  CHECK(detect_support(u, sys, 1.0, false).support_count() == 0);
  CHECK_THROWS(detect_support(u, sys, 0.5));
}

TEST_CASE("constant reference image has an empty high-pass support") {
  for (bool lowpass : {true, false}) {
    const SupportMask m = detect_support(Image(24, 24, 90.0), FrameletSystem(2), 200.0, lowpass);
    CHECK(m.support_count() == 0);
  }
}

TEST_CASE("mask is invariant under positive scaling of the reference") {
  const Image u = load_image(test::data_path("cameraman.pgm"));
  for (int levels : {1, 4}) {
    const FrameletSystem sys(levels);
    const SupportMask base = detect_support(u, sys, 200.0);
    for (double c : {0.25, 4.0, 1024.0}) CHECK(hamming(detect_support(scale(c, u), sys, 200.0), base) == 0);
    // a non-dyadic factor may flip coefficients sitting within rounding of the threshold
    CHECK(hamming(detect_support(scale(3.7, u), sys, 200.0), base) <= 2);
  }
}

TEST_CASE("support size is monotone in rho") {
  const Image u = load_image(test::data_path("coins.pgm"));
  const FrameletSystem sys(1);
  std::size_t previous = 0;
  for (double rho : {1.0, 2.0, 10.0, 50.0, 200.0, 1000.0, 1e5}) {
    const std::size_t n = detect_support(u, sys, rho).support_count();
    CHECK(n >= previous);
    previous = n;
  }
}

TEST_CASE("accuracy rate") {
  const SupportMask a = random_mask(2, 10, 9, 1);
  const SupportMask b = random_mask(2, 10, 9, 2);
  CHECK(accuracy_rate(a, a) == 1.0);
  CHECK(accuracy_rate(a, a.complement()) == 0.0);
  CHECK(accuracy_rate(a, b) == accuracy_rate(b, a));
  const double expect = 1.0 - static_cast<double>(hamming(a, b)) / static_cast<double>(a.highpass_size());
  CHECK(accuracy_rate(a, b) == doctest::Approx(expect).epsilon(1e-15));

  // the counting formula (|Id n It| + |Td n Tt|) / (|It| + |Tt|)
  std::size_t both_in = 0, both_out = 0;
  for (std::size_t i = 0; i < a.highpass_size(); ++i) {
    both_in += a.flags()[i] && b.flags()[i];
    both_out += !a.flags()[i] && !b.flags()[i];
  }
  CHECK(accuracy_rate(a, b) ==
        doctest::Approx(static_cast<double>(both_in + both_out) / static_cast<double>(a.highpass_size())));
  CHECK_THROWS_AS(accuracy_rate(a, random_mask(1, 10, 9, 3)), ShapeError);
}

TEST_CASE("support map of an empty mask is zero") {
  const FrameletSystem sys(2);
  const Image m = support_map_image(SupportMask(2, 16, 16, false), sys);
  for (double v : m.pixels()) CHECK(v == 0.0);
}

TEST_CASE("support map of the all-true L=1 mask matches the golden file") {
  const FrameletSystem sys(1);
  const Image m = support_map_image(SupportMask(1, 16, 16, true), sys);
  const std::string golden = std::string(SDSR_GOLDEN_DIR) + "/support_map_all_true_L1_16x16.f64";
  if (std::getenv("SDSR_UPDATE_GOLDEN") != nullptr) save_raw(m, golden);
  const Image expect = load_raw(golden);
  REQUIRE(expect.same_shape(m));
  CHECK(test::max_abs_diff(m, expect) <= 1e-12);
  double lo = 1e300, hi = -1e300;
  for (double v : m.pixels()) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == 0.0);
  CHECK(hi == 255.0);
}

TEST_CASE("support map of a vertical edge concentrates on the edge column") {
  Image edge(32, 40);
  for (int r = 0; r < 32; ++r)
    for (int c = 20; c < 40; ++c) edge(r, c) = 200.0;
  const FrameletSystem sys(1);
  const Image map = support_map(detect_support(edge, sys, 200.0), sys);
  std::vector<double> energy(40, 0.0);
  for (int r = 0; r < 32; ++r)
    for (int c = 0; c < 40; ++c) energy[c] += map(r, c) * map(r, c);
  const auto peak = std::max_element(energy.begin(), energy.end()) - energy.begin();
  CHECK(peak >= 19);
  CHECK(peak <= 20);
  CHECK(energy[5] == 0.0);
  CHECK(energy[35] == 0.0);
}

TEST_CASE("back projection") {
  const Image u = load_image(test::data_path("cameraman.pgm"));
  const FrameletSystem sys(1);
  CHECK(test::max_abs_diff(back_projection(u, SupportMask(1, 256, 256, true), sys), u) <= 1e-10);

  CoefficientPyramid low_only(1, 256, 256);
  const CoefficientPyramid c = sys.analyze(u);
  std::copy(c.lowpass().begin(), c.lowpass().end(), low_only.lowpass().begin());
  CHECK(test::max_abs_diff(back_projection(u, SupportMask(1, 256, 256, false), sys), sys.synthesize(low_only)) <=
        1e-10);

  CHECK_THROWS_AS(back_projection(u, SupportMask(1, 8, 8, true), sys), ShapeError);
}

TEST_CASE("back-projection PSNR is nondecreasing in rho") {
  const Image u = load_image(test::data_path("cameraman.pgm"));
  for (int levels : {1, 4}) {
    const FrameletSystem sys(levels);
    double previous = -1.0;
    for (double rho : {10.0, 50.0, 200.0, 1000.0}) {
      const double p = psnr(back_projection(u, detect_support(u, sys, rho), sys), u);
      CHECK(p >= previous);
      previous = p;
    }
  }
}

TEST_CASE("mask dump writes 0/255 bands and a manifest") {
  const auto dir = test::scratch_dir("mask_dump");
  const SupportMask m = random_mask(1, 6, 7, 9);
  dump_mask(m, dir.string());
  std::ifstream in(dir / "manifest.json");
  const auto manifest = nlohmann::json::parse(in);
  CHECK(manifest["format"] == "sdsr-support-mask");
  CHECK(manifest["bands"].size() == 9);
  CHECK(manifest["support_count"] == m.support_count());
  const Image band0 = load_image((dir / "band_000.pgm").string());
  for (int i = 0; i < 42; ++i) CHECK(band0.pixels()[i] == (m.flags()[i] ? 255.0 : 0.0));
  const Image low = load_image((dir / "band_008.pgm").string());
  for (double v : low.pixels()) CHECK(v == 255.0);
}

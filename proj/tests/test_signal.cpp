#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <set>

#include "mavgram/rng.hpp"
#include "mavgram/waveform.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mavgram;

TEST_CASE("minmax_normalize maps endpoints to -1 and +1") {
  Waveform x{{-2.0f, 0.0f, 2.0f}, 100.0};
  const Waveform y = minmax_normalize(x);
  CHECK(y.samples[0] == doctest::Approx(-1.0));
  CHECK(y.samples[1] == doctest::Approx(0.0));
  CHECK(y.samples[2] == doctest::Approx(1.0));
  CHECK(y.rate == 100.0);
}

TEST_CASE("minmax_normalize flags constant signals and returns zeros") {
  Waveform x{{5.0f, 5.0f, 5.0f}, 100.0};
  bool degenerate = false;
  const Waveform y = minmax_normalize(x, &degenerate);
  CHECK(degenerate);
  for (float s : y.samples) CHECK(s == 0.0f);
}

TEST_CASE("minmax_normalize hits both endpoints exactly on random input") {
  const Waveform x = support::noise(42, 1000, 48000.0);
  const Waveform y = minmax_normalize(x);
  const auto [mn, mx] = std::minmax_element(y.samples.begin(), y.samples.end());
  CHECK(*mn == -1.0f);
  CHECK(*mx == 1.0f);
}

TEST_CASE("minmax_normalize is idempotent once the range spans [-1, 1]") {
  const Waveform y = minmax_normalize(support::noise(7, 512, 1000.0));
  const Waveform z = minmax_normalize(y);
  for (size_t i = 0; i < y.samples.size(); ++i) CHECK(z.samples[i] == y.samples[i]);
}

TEST_CASE("minmax_normalize rejects invalid waveforms") {
  CHECK_THROWS_AS(minmax_normalize(Waveform{{}, 100.0}), std::invalid_argument);
  CHECK_THROWS_AS(minmax_normalize(Waveform{{1.0f}, 0.0}), std::invalid_argument);
}

TEST_CASE("resample at the input rate is a bit-identical identity") {
  const Waveform x = support::noise(3, 777, 48000.0);
  const Waveform y = resample(x, 48000.0);
  REQUIRE(y.samples.size() == x.samples.size());
  for (size_t i = 0; i < x.samples.size(); ++i) CHECK(y.samples[i] == x.samples[i]);
}

TEST_CASE("resample preserves a tone's dominant frequency") {
  const Waveform x = support::tone(100.0, 48000.0, 1.0);
  const Waveform y = resample(x, 24000.0);
  CHECK(y.rate == 24000.0);
  const double peak = oracle::dft_peak_hz(y.samples, y.rate);
  CHECK(std::abs(peak - 100.0) <= oracle::dft_bin_hz(y.samples, y.rate));
}

TEST_CASE("resample output length is round(len * to_rate / rate)") {
  Waveform x;
  x.rate = 48000.0;
  x.samples.assign(192000, 0.25f);
  CHECK(resample(x, 42000.0).samples.size() == 168000);
}

TEST_CASE("resample then resample back preserves a tone") {
  const Waveform x = support::tone(440.0, 32000.0, 0.5);
  const Waveform y = resample(resample(x, 48000.0), 32000.0);
  const double peak = oracle::dft_peak_hz(y.samples, y.rate);
  CHECK(std::abs(peak - 440.0) <= oracle::dft_bin_hz(y.samples, y.rate));
}

TEST_CASE("resample rejects a non-positive target rate") {
  CHECK_THROWS_AS(resample(support::tone(10, 100, 0.1), 0.0), std::invalid_argument);
}

TEST_CASE("speed_perturb with factor 1 returns the input exactly") {
  const Waveform x = support::noise(11, 4096, 16000.0);
  const Waveform y = speed_perturb(x, 1.0);
  REQUIRE(y.samples.size() == x.samples.size());
  for (size_t i = 0; i < x.samples.size(); ++i) CHECK(y.samples[i] == x.samples[i]);
}

TEST_CASE("speed_perturb scales a tone's frequency by the factor") {
  const Waveform x = support::tone(100.0, 48000.0, 1.0);
  const Waveform y = speed_perturb(x, 1.1);
  CHECK(y.rate == x.rate);
  const double peak = oracle::dft_peak_hz(y.samples, y.rate);
  CHECK(std::abs(peak - 110.0) <= oracle::dft_bin_hz(y.samples, y.rate));
}

TEST_CASE("speed_perturb keeps the original length for every factor") {
  const Waveform x = support::noise(5, 10000, 8000.0);
  for (double f : {0.9, 1.0, 1.1, 1.3, 0.7}) {
    CHECK(speed_perturb(x, f).samples.size() == x.samples.size());
  }
}

TEST_CASE("speed_perturb shifts a tone for every factor of the wide grid") {
  const Waveform x = support::tone(100.0, 48000.0, 1.0);
  for (double f : speed_grid(7, 0.1).factors) {
    const Waveform y = speed_perturb(x, f);
    const double peak = oracle::dft_peak_hz(y.samples, y.rate);
    CHECK(std::abs(peak - 100.0 * f) <= oracle::dft_bin_hz(y.samples, y.rate));
  }
}

TEST_CASE("speed_grid lays out symmetric factors around 1") {
  const SpeedGrid g = speed_grid(3, 0.1);
  REQUIRE(g.factors.size() == 3);
  CHECK(g.factors[0] == doctest::Approx(0.9));
  CHECK(g.factors[1] == doctest::Approx(1.0));
  CHECK(g.factors[2] == doctest::Approx(1.1));
}

TEST_CASE("speed_grid of one is the identity grid") {
  const SpeedGrid g = speed_grid(1, 0.1);
  REQUIRE(g.factors.size() == 1);
  CHECK(g.factors[0] == 1.0);
}

TEST_CASE("speed_grid covers the wide seven-point row") {
  const SpeedGrid g = speed_grid(7, 0.1);
  REQUIRE(g.factors.size() == 7);
  const double want[] = {0.7, 0.8, 0.9, 1.0, 1.1, 1.2, 1.3};
  for (int i = 0; i < 7; ++i) CHECK(g.factors[i] == doctest::Approx(want[i]));
  CHECK(std::is_sorted(g.factors.begin(), g.factors.end()));
}

TEST_CASE("speed_grid rejects even counts, bad steps and non-positive factors") {
  CHECK_THROWS_AS(speed_grid(2, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(speed_grid(3, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(speed_grid(3, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(speed_grid(0, 0.1), std::invalid_argument);
  CHECK_THROWS_AS(speed_grid(21, 0.1), std::invalid_argument);  // 1 - 10*0.1 = 0
}

TEST_CASE("virtual labels interleave base label and speed index") {
  CHECK(virtual_label(0, 0, 3) == 0);
  CHECK(virtual_label(4, 2, 3) == 14);
  CHECK(base_from_virtual(14, 3) == 4);
}

TEST_CASE("virtual labels are a bijection over (base, speed) pairs") {
  std::set<int> seen;
  for (int base = 0; base < 5; ++base)
    for (int speed = 0; speed < 3; ++speed) {
      const int v = virtual_label(base, speed, 3);
      CHECK(v >= 0);
      CHECK(v < 15);
      CHECK(base_from_virtual(v, 3) == base);
      seen.insert(v);
    }
  CHECK(seen.size() == 15);
}

TEST_CASE("fit_length tiles short input and center-crops long input") {
  const std::vector<float> x{1.0f, 2.0f, 3.0f};
  const std::vector<float> tiled = fit_length(x, 7);
  const std::vector<float> want{1.0f, 2.0f, 3.0f, 1.0f, 2.0f, 3.0f, 1.0f};
  CHECK(tiled == want);
  const std::vector<float> long_in{1, 2, 3, 4, 5, 6, 7, 8};
  const std::vector<float> cropped = fit_length(long_in, 4);
  CHECK(cropped == std::vector<float>{3, 4, 5, 6});
}

TEST_CASE("rng streams are deterministic and label-separated") {
  Rng a(9), b(9);
  CHECK(a.stream("x").next_u64() == b.stream("x").next_u64());
  CHECK(Rng(9).stream("x").next_u64() != Rng(9).stream("y").next_u64());
  Rng u(1234);
  for (int i = 0; i < 1000; ++i) {
    const double v = u.uniform(-1.0, 2.0);
    CHECK(v >= -1.0);
    CHECK(v < 2.0);
  }
  Rng n(77);
  for (int i = 0; i < 100; ++i) CHECK(std::isfinite(n.normal()));
  Rng ui(5);
  for (int i = 0; i < 200; ++i) CHECK(ui.uniform_int(7) < 7);
}

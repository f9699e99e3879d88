#include <cmath>
#include <vector>

#include "csat/audio_frontend.hpp"
#include "csat/errors.hpp"
#include "csat/rng.hpp"
#include "csat/wav.hpp"
#include "doctest.h"
#include "lfbe_reference.hpp"

namespace {

std::vector<double> tone(double freq, double seconds, int rate,
                         double amplitude = 0.5) {
  std::vector<double> s(static_cast<std::size_t>(seconds * rate));
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = amplitude *
           std::sin(2.0 * 3.14159265358979323846 * freq * i / rate);
  }
  return s;
}

void check_against_reference(const std::vector<double>& samples, int rate) {
  const Eigen::MatrixXd lfbe =
      csat::compute_lfbe(csat::frame_signal(samples, rate), rate);
  const auto ref = lfbe_reference::compute(samples, rate);
  REQUIRE(lfbe.rows() == static_cast<long>(ref.size()));
  REQUIRE(lfbe.cols() == 40);
  for (long t = 0; t < lfbe.rows(); ++t) {
    for (long m = 0; m < 40; ++m) {
      const double a = lfbe(t, m);
      const double b = ref[static_cast<std::size_t>(t)]
                          [static_cast<std::size_t>(m)];
      CHECK(std::abs(a - b) <= 1e-6 * std::max(1.0, std::abs(b)));
    }
  }
}

}  // namespace

TEST_CASE("framing: one second at 16 kHz gives 98 frames of 400 samples") {
  const auto s = tone(440.0, 1.0, 16000);
  const Eigen::MatrixXd frames = csat::frame_signal(s, 16000);
  CHECK(frames.rows() == 98);  // floor((16000 - 400) / 160) + 1
  CHECK(frames.cols() == 400);
}

TEST_CASE("framing: rejects bad rates and too-short signals") {
  const auto s = tone(440.0, 1.0, 16000);
  CHECK_THROWS_AS(csat::frame_signal(s, 44100), csat::ConfigError);
  CHECK_THROWS_AS(csat::frame_signal(std::vector<double>(100, 0.0), 16000),
                  csat::DataError);
}

TEST_CASE("lfbe: silence hits the energy floor everywhere") {
  const std::vector<double> zeros(16000, 0.0);
  const Eigen::MatrixXd lfbe =
      csat::compute_lfbe(csat::frame_signal(zeros, 16000), 16000);
  const double floor_log = std::log(1e-10);
  for (long t = 0; t < lfbe.rows(); ++t) {
    for (long m = 0; m < lfbe.cols(); ++m) {
      CHECK(lfbe(t, m) == floor_log);
    }
  }
}

TEST_CASE("lfbe: matches the direct-DFT reference on a tone") {
  check_against_reference(tone(440.0, 0.3, 16000), 16000);
}

TEST_CASE("lfbe: matches the direct-DFT reference on noise at 8 kHz") {
  csat::Rng rng(21);
  std::vector<double> noise(2400);
  for (auto& x : noise) x = 0.3 * rng.normal();
  check_against_reference(noise, 8000);
}

TEST_CASE("lfbe: scaling the signal shifts log energies by 2 ln a") {
  const auto s = tone(300.0, 0.2, 16000, 0.3);
  auto scaled = s;
  for (auto& x : scaled) x *= 2.0;
  const Eigen::MatrixXd a =
      csat::compute_lfbe(csat::frame_signal(s, 16000), 16000);
  const Eigen::MatrixXd b =
      csat::compute_lfbe(csat::frame_signal(scaled, 16000), 16000);
  const double shift = 2.0 * std::log(2.0);
  for (long t = 0; t < a.rows(); ++t) {
    for (long m = 0; m < a.cols(); ++m) {
      if (a(t, m) > std::log(1e-10) + shift + 0.1) {
        CHECK(b(t, m) == doctest::Approx(a(t, m) + shift).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("stack_context: triples width, keeps rows, replicates edges") {
  Eigen::MatrixXd m(3, 2);
  m << 1, 2, 3, 4, 5, 6;
  const Eigen::MatrixXd s = csat::stack_context(m);
  REQUIRE(s.rows() == 3);
  REQUIRE(s.cols() == 6);
  // Row 0: [row0 | row0 | row1] (left edge replicated).
  CHECK(s.row(0).head(2) == m.row(0));
  CHECK(s.row(0).segment(2, 2) == m.row(0));
  CHECK(s.row(0).tail(2) == m.row(1));
  // Row 1: [row0 | row1 | row2].
  CHECK(s.row(1).head(2) == m.row(0));
  CHECK(s.row(1).segment(2, 2) == m.row(1));
  CHECK(s.row(1).tail(2) == m.row(2));
  // Row 2: [row1 | row2 | row2] (right edge replicated).
  CHECK(s.row(2).head(2) == m.row(1));
  CHECK(s.row(2).segment(2, 2) == m.row(2));
  CHECK(s.row(2).tail(2) == m.row(2));
}

TEST_CASE("full frontend: 120 columns, one row per frame") {
  const auto s = tone(500.0, 0.5, 16000);
  const Eigen::MatrixXd f = csat::extract_stacked_lfbe(s, 16000);
  CHECK(f.rows() == 48);  // floor((8000 - 400) / 160) + 1
  CHECK(f.cols() == 120);
}

TEST_CASE("feature file round trip") {
  const auto s = tone(350.0, 0.2, 16000);
  const Eigen::MatrixXd f = csat::extract_stacked_lfbe(s, 16000);
  const std::string path = "/tmp/csat_test_features.bin";
  csat::write_feature_file(path, f, 10.0, 16000);
  double hop = 0.0;
  int rate = 0;
  const Eigen::MatrixXd g = csat::read_feature_file(path, &hop, &rate);
  CHECK(hop == 10.0);
  CHECK(rate == 16000);
  REQUIRE(g.rows() == f.rows());
  REQUIRE(g.cols() == f.cols());
  CHECK((g - f).lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("wav round trip with 16-bit quantization error only") {
  csat::WavData w;
  w.sample_rate = 16000;
  w.samples = tone(440.0, 0.1, 16000, 0.8);
  const std::string path = "/tmp/csat_test_tone.wav";
  csat::write_wav(path, w);
  const csat::WavData r = csat::read_wav(path);
  CHECK(r.sample_rate == 16000);
  REQUIRE(r.samples.size() == w.samples.size());
  for (std::size_t i = 0; i < r.samples.size(); ++i) {
    CHECK(std::abs(r.samples[i] - w.samples[i]) < 1.0 / 16384.0);
  }
}

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include "mavgram/config.hpp"
#include "mavgram/manifest.hpp"
#include "mavgram/rng.hpp"
#include "mavgram/splits.hpp"
#include "mavgram/synth.hpp"
#include "mavgram/train.hpp"
#include "mavgram/wav_io.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mavgram;

namespace {

void push_u32(std::string& s, uint32_t v) {
  for (int i = 0; i < 4; ++i) s.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}
void push_u16(std::string& s, uint16_t v) {
  s.push_back(static_cast<char>(v & 0xff));
  s.push_back(static_cast<char>((v >> 8) & 0xff));
}

// Hand-rolled RIFF writer so reader conventions are pinned independently of
// write_wav.
std::string raw_wav_bytes(const std::vector<int16_t>& frames, uint32_t rate,
                          uint16_t channels, uint16_t format, uint16_t bits) {
  std::string d;
  for (int16_t f : frames) push_u16(d, static_cast<uint16_t>(f));
  std::string out = "RIFF";
  push_u32(out, 36 + static_cast<uint32_t>(d.size()));
  out += "WAVEfmt ";
  push_u32(out, 16);
  push_u16(out, format);
  push_u16(out, channels);
  push_u32(out, rate);
  push_u32(out, rate * channels * bits / 8);
  push_u16(out, static_cast<uint16_t>(channels * bits / 8));
  push_u16(out, bits);
  out += "data";
  push_u32(out, static_cast<uint32_t>(d.size()));
  out += d;
  return out;
}

SampleRecord make_record(const std::string& id, const std::string& apath,
                         const std::string& vpath, int label,
                         SplitTag split = SplitTag::train) {
  SampleRecord r;
  r.id = id;
  r.acoustic_path = apath;
  r.vibration_path = vpath;
  r.acoustic_rate = 48000.0;
  r.vibration_rate = 5120.0;
  r.label = label;
  r.split = split;
  return r;
}

std::string manifest_line(const std::string& id, const std::string& apath,
                          const std::string& vpath, int label) {
  return "{\"id\":\"" + id + "\",\"acoustic_path\":\"" + apath +
         "\",\"vibration_path\":\"" + vpath +
         "\",\"acoustic_rate\":48000,\"vibration_rate\":5120,\"label\":" +
         std::to_string(label) + ",\"split\":\"train\"}\n";
}

std::vector<SampleRecord> synthetic_records(const std::vector<int>& class_counts) {
  std::vector<SampleRecord> recs;
  int n = 0;
  for (int label = 0; label < static_cast<int>(class_counts.size()); ++label)
    for (int i = 0; i < class_counts[label]; ++i)
      recs.push_back(make_record("r" + std::to_string(n++), "a.wav", "v.txt", label));
  return recs;
}

std::set<std::string> id_set(const std::vector<SampleRecord>& recs) {
  std::set<std::string> out;
  for (const auto& r : recs) out.insert(r.id);
  return out;
}

}  // namespace

TEST_CASE("full-scale square wave reads back as +-32767/32768") {
  support::TempDir dir("wav");
  const std::vector<int16_t> frames{32767, -32767, 32767, -32767};
  support::write_text(dir.str("sq.wav"), raw_wav_bytes(frames, 48000, 1, 1, 16));
  const Waveform w = read_wav(dir.str("sq.wav"));
  REQUIRE(w.samples.size() == 4);
  CHECK(w.rate == 48000.0);
  CHECK(w.samples[0] == doctest::Approx(32767.0 / 32768.0).epsilon(1e-9));
  CHECK(w.samples[1] == doctest::Approx(-32767.0 / 32768.0).epsilon(1e-9));
  CHECK(w.samples[0] == -w.samples[1]);
}

TEST_CASE("text vibration file parses one sample per line") {
  support::TempDir dir("vib");
  support::write_text(dir.str("v.txt"), "0.0\n1.0\n-1.0\n");
  const Waveform w = read_vibration_text(dir.str("v.txt"), 5120.0);
  REQUIRE(w.samples.size() == 3);
  CHECK(w.rate == 5120.0);
  CHECK(w.samples[0] == 0.0f);
  CHECK(w.samples[1] == 1.0f);
  CHECK(w.samples[2] == -1.0f);
  support::write_text(dir.str("blank.txt"), "\n0.5\n\n-0.25\n\n");
  CHECK(read_vibration_text(dir.str("blank.txt"), 5120.0).samples.size() == 2);
}

TEST_CASE("wav round-trip stays within the quantization bound") {
  support::TempDir dir("wavrt");
  Waveform w = support::noise(3, 4096, 48000.0);
  write_wav(dir.str("n.wav"), w);
  const Waveform back = read_wav(dir.str("n.wav"));
  REQUIRE(back.samples.size() == w.samples.size());
  CHECK(back.rate == w.rate);
  float worst = 0.0f;
  for (size_t i = 0; i < w.samples.size(); ++i)
    worst = std::max(worst, std::abs(back.samples[i] - w.samples[i]));
  CHECK(worst <= 1.0f / 32768.0f);
}

TEST_CASE("vibration text round-trip is accurate to printed precision") {
  support::TempDir dir("vibrt");
  Waveform w = support::noise(4, 513, 5120.0);
  write_vibration_text(dir.str("v.txt"), w);
  const Waveform back = read_vibration_text(dir.str("v.txt"), 5120.0);
  REQUIRE(back.samples.size() == w.samples.size());
  for (size_t i = 0; i < w.samples.size(); ++i)
    CHECK(std::abs(back.samples[i] - w.samples[i]) <= 1e-6f);
}

TEST_CASE("unsupported wav layouts are rejected with the reason") {
  support::TempDir dir("wavbad");
  support::write_text(dir.str("stereo.wav"),
                   raw_wav_bytes({0, 0, 0, 0}, 48000, 2, 1, 16));
  CHECK_THROWS_WITH_AS(read_wav(dir.str("stereo.wav")),
                       doctest::Contains("mono"), std::runtime_error);
  support::write_text(dir.str("float.wav"), raw_wav_bytes({0, 0}, 48000, 1, 3, 16));
  CHECK_THROWS_WITH_AS(read_wav(dir.str("float.wav")),
                       doctest::Contains("PCM"), std::runtime_error);
  support::write_text(dir.str("w8.wav"), raw_wav_bytes({0, 0}, 48000, 1, 1, 8));
  CHECK_THROWS_AS(read_wav(dir.str("w8.wav")), std::runtime_error);
  support::write_text(dir.str("trunc.wav"),
                   raw_wav_bytes({1, 2, 3, 4}, 48000, 1, 1, 16).substr(0, 30));
  CHECK_THROWS_AS(read_wav(dir.str("trunc.wav")), std::runtime_error);
  CHECK_THROWS_AS(read_wav(dir.str("absent.wav")), std::runtime_error);
}

TEST_CASE("an empty manifest is an empty dataset") {
  support::TempDir dir("mf");
  support::write_text(dir.str("m.jsonl"), "");
  CHECK(load_manifest(dir.str("m.jsonl")).empty());
  support::write_text(dir.str("ws.jsonl"), "\n  \n\t\n");
  CHECK(load_manifest(dir.str("ws.jsonl")).empty());
}

TEST_CASE("manifest errors carry the offending line number") {
  support::TempDir dir("mfbad");
  write_wav(dir.str("a.wav"), support::tone(100.0, 48000.0, 0.01));
  write_vibration_text(dir.str("v.txt"), support::tone(50.0, 5120.0, 0.01));

  std::string text = manifest_line("ok1", "a.wav", "v.txt", 0) +
                     manifest_line("ok2", "a.wav", "v.txt", 4) +
                     manifest_line("bad", "a.wav", "v.txt", 7);
  support::write_text(dir.str("label.jsonl"), text);
  CHECK_THROWS_WITH_AS(load_manifest(dir.str("label.jsonl")),
                       doctest::Contains("label out of range at line 3"),
                       std::runtime_error);

  support::write_text(dir.str("missing.jsonl"),
                   "{\"id\":\"x\",\"label\":1}\n");
  CHECK_THROWS_WITH_AS(load_manifest(dir.str("missing.jsonl")),
                       doctest::Contains("line 1"), std::runtime_error);

  support::write_text(dir.str("garbled.jsonl"),
                   manifest_line("ok", "a.wav", "v.txt", 0) + "not json\n");
  CHECK_THROWS_WITH_AS(load_manifest(dir.str("garbled.jsonl")),
                       doctest::Contains("line 2"), std::runtime_error);

  support::write_text(dir.str("dup.jsonl"), manifest_line("same", "a.wav", "v.txt", 0) +
                                             manifest_line("same", "a.wav", "v.txt", 1));
  CHECK_THROWS_WITH_AS(load_manifest(dir.str("dup.jsonl")),
                       doctest::Contains("duplicate id"), std::runtime_error);

  support::write_text(dir.str("lost.jsonl"),
                   manifest_line("x", "nowhere.wav", "v.txt", 0));
  CHECK_THROWS_WITH_AS(load_manifest(dir.str("lost.jsonl")),
                       doctest::Contains("not found"), std::runtime_error);

  CHECK_THROWS_AS(load_manifest(dir.str("absent.jsonl")), std::runtime_error);
}

TEST_CASE("a dataset-shaped manifest loads with the expected per-class counts") {
  support::TempDir dir("mfuo");
  write_wav(dir.str("a.wav"), support::tone(100.0, 48000.0, 0.01));
  write_vibration_text(dir.str("v.txt"), support::tone(50.0, 5120.0, 0.01));
  const std::vector<int> counts{380, 190, 190, 190, 190};
  std::string text;
  int n = 0;
  for (int label = 0; label < 5; ++label)
    for (int i = 0; i < counts[label]; ++i)
      text += manifest_line("rec" + std::to_string(n++), "a.wav", "v.txt", label);
  support::write_text(dir.str("uo.jsonl"), text);

  const auto recs = load_manifest(dir.str("uo.jsonl"));
  REQUIRE(recs.size() == 1140);
  std::vector<int> got(5, 0);
  for (const auto& r : recs) {
    got[r.label]++;
    CHECK(r.acoustic_path.front() == '/');  // resolved to absolute
  }
  CHECK(got == counts);
}

TEST_CASE("manifest write/load round-trip preserves records and relativizes paths") {
  support::TempDir dir("mfrt");
  std::filesystem::create_directories(dir.str("deep"));
  write_wav(dir.str("deep/a.wav"), support::tone(100.0, 48000.0, 0.01));
  write_vibration_text(dir.str("deep/v.txt"), support::tone(50.0, 5120.0, 0.01));
  std::vector<SampleRecord> recs;
  recs.push_back(make_record("one", dir.str("deep/a.wav"), dir.str("deep/v.txt"), 2,
                             SplitTag::finetune));
  recs.push_back(
      make_record("two", dir.str("deep/a.wav"), dir.str("deep/v.txt"), 0, SplitTag::test));
  write_manifest(dir.str("m.jsonl"), recs);

  const std::string raw = support::read_text(dir.str("m.jsonl"));
  CHECK(raw.find("deep/a.wav") != std::string::npos);
  CHECK(raw.find(dir.str("deep/a.wav")) == std::string::npos);  // no absolute paths

  const auto back = load_manifest(dir.str("m.jsonl"));
  REQUIRE(back.size() == 2);
  CHECK(back[0].id == "one");
  CHECK(back[0].label == 2);
  CHECK(back[0].split == SplitTag::finetune);
  CHECK(back[0].acoustic_rate == 48000.0);
  CHECK(back[1].split == SplitTag::test);
  CHECK(read_wav(back[0].acoustic_path).samples.size() == 480);
}

TEST_CASE("split tags round-trip through their names") {
  for (SplitTag t : {SplitTag::train, SplitTag::finetune, SplitTag::test})
    CHECK(split_from_string(split_name(t)) == t);
  CHECK_THROWS_AS(split_from_string("validation"), std::invalid_argument);
}

TEST_CASE("a one-second 42 kHz pair canonicalizes to four seconds at 48 kHz") {
  support::TempDir dir("canon");
  write_wav(dir.str("a.wav"), support::tone(440.0, 42000.0, 1.0));
  write_vibration_text(dir.str("v.txt"), support::tone(80.0, 42000.0, 1.0));
  SampleRecord rec = make_record("x", dir.str("a.wav"), dir.str("v.txt"), 1);
  rec.acoustic_rate = 42000.0;
  rec.vibration_rate = 42000.0;

  const FeatureProfile fp = canonical_config().features;
  const LoadedSample s = load_and_canonicalize(rec, fp);
  CHECK(s.label == 1);
  CHECK(s.acoustic.rate == 48000.0);
  CHECK(s.vibration.rate == 48000.0);
  CHECK(s.acoustic.samples.size() == 192000);
  CHECK(s.vibration.samples.size() == 192000);
  // loop padding tiles the resampled second four times
  for (size_t i = 0; i < 48000; ++i)
    CHECK(s.acoustic.samples[i] == s.acoustic.samples[i + 96000]);
}

TEST_CASE("an already-canonical pair only gets normalized") {
  support::TempDir dir("canon2");
  Waveform a = support::tone(300.0, 48000.0, 4.0, 0.25f);
  write_wav(dir.str("a.wav"), a);
  write_vibration_text(dir.str("v.txt"), support::tone(90.0, 48000.0, 4.0, 0.5f));
  SampleRecord rec = make_record("x", dir.str("a.wav"), dir.str("v.txt"), 0);
  rec.vibration_rate = 48000.0;

  const FeatureProfile fp = canonical_config().features;
  const LoadedSample s = load_and_canonicalize(rec, fp);
  const Waveform disk = read_wav(dir.str("a.wav"));
  const Waveform want = minmax_normalize(disk, nullptr);
  CHECK(s.acoustic.samples == want.samples);
  float lo = 1e9f, hi = -1e9f;
  for (float v : s.vibration.samples) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  CHECK(lo == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(hi == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("a slow-rate vibration tone survives canonicalization in place") {
  support::TempDir dir("canon3");
  write_wav(dir.str("a.wav"), support::tone(500.0, 48000.0, 4.0));
  write_vibration_text(dir.str("v.txt"), support::tone(80.0, 5120.0, 4.0));
  SampleRecord rec = make_record("x", dir.str("a.wav"), dir.str("v.txt"), 3);

  const LoadedSample s = load_and_canonicalize(rec, canonical_config().features);
  REQUIRE(s.vibration.samples.size() == 192000);
  const double peak = oracle::dft_peak_hz(s.vibration.samples, 48000.0);
  const double bin = oracle::dft_bin_hz(s.vibration.samples, 48000.0);
  CHECK(std::abs(peak - 80.0) <= bin + 1e-9);
}

TEST_CASE("synthetic profiles differ where the domain shift lives") {
  const SynthProfile src = source_profile();
  const SynthProfile tgt = target_profile();
  CHECK(src.name == "source");
  CHECK(tgt.name == "target");
  CHECK(src.shaft_hz != tgt.shaft_hz);
  CHECK(src.res_hz != tgt.res_hz);
  CHECK(src.snr_db != tgt.snr_db);
  CHECK(src.vibration_rate != tgt.vibration_rate);
  CHECK_NOTHROW(src.validate());
  CHECK_NOTHROW(tgt.validate());
  CHECK(profile_by_name("source").res_hz == src.res_hz);
  CHECK(profile_by_name("target").duration == tgt.duration);
  CHECK_THROWS_AS(profile_by_name("bogus"), std::invalid_argument);

  SynthProfile bad = src;
  bad.hum_hz = 3000.0;  // above the vibration Nyquist
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad = src;
  bad.duration = 0.0;
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("characteristic multipliers are the documented bearing ratios") {
  CHECK(characteristic_multiplier(1) == 3.6);
  CHECK(characteristic_multiplier(2) == 5.4);
  CHECK(characteristic_multiplier(3) == 2.4);
  CHECK(characteristic_multiplier(4) == 0.4);
  CHECK_THROWS_AS(characteristic_multiplier(0), std::invalid_argument);
  CHECK_THROWS_AS(characteristic_multiplier(5), std::invalid_argument);
}

TEST_CASE("each fault class rings at its characteristic frequency") {
  const SynthProfile prof = source_profile();
  Rng rng(41);
  const auto fir = synth_fir(prof, rng.stream("fir"));
  for (int label = 1; label <= 4; ++label) {
    const auto s = synth_sample(prof, label, fir, rng.stream("sample" + std::to_string(label)));
    CHECK(s.vibration.rate == prof.vibration_rate);
    CHECK(s.acoustic.rate == prof.acoustic_rate);
    CHECK(s.vibration.samples.size() ==
          static_cast<size_t>(prof.duration * prof.vibration_rate));

    const double want = prof.shaft_hz * characteristic_multiplier(label);
    const auto env = oracle::envelope_spectrum(s.vibration.samples, prof.vibration_rate);
    const double got = env.peak_hz(want * 0.5, want * 1.5);
    CHECK(std::abs(got - want) <= 0.02 * want);
  }
}

TEST_CASE("the healthy class shows no characteristic-frequency peak") {
  const SynthProfile prof = source_profile();
  Rng rng(42);
  const auto fir = synth_fir(prof, rng.stream("fir"));
  const auto s = synth_sample(prof, 0, fir, rng.stream("sample0"));
  const auto env = oracle::envelope_spectrum(s.vibration.samples, prof.vibration_rate);
  for (int label = 1; label <= 4; ++label) {
    const double f = prof.shaft_hz * characteristic_multiplier(label);
    CHECK(env.band_to_median(f, 0.02) < 3.0);
  }
}

TEST_CASE("synthesis is bitwise deterministic per seed") {
  support::TempDir dir("synd");
  const SynthProfile prof = target_profile();
  const auto recs1 = synth_dataset(prof, 5, 1, 99, dir.str("one"));
  const auto recs2 = synth_dataset(prof, 5, 1, 99, dir.str("two"));
  const auto recs3 = synth_dataset(prof, 5, 1, 100, dir.str("three"));
  REQUIRE(recs1.size() == 5);
  REQUIRE(recs2.size() == 5);

  for (size_t i = 0; i < recs1.size(); ++i) {
    CHECK(recs1[i].id == recs2[i].id);
    CHECK(recs1[i].label == recs2[i].label);
    CHECK(support::read_text(recs1[i].acoustic_path) ==
          support::read_text(recs2[i].acoustic_path));
    CHECK(support::read_text(recs1[i].vibration_path) ==
          support::read_text(recs2[i].vibration_path));
  }
  // a different seed actually changes the data
  CHECK(support::read_text(recs1[0].acoustic_path) !=
        support::read_text(recs3[0].acoustic_path));
  // manifests byte-identical modulo directory
  CHECK(support::read_text(dir.str("one/manifest.jsonl")) ==
        support::read_text(dir.str("two/manifest.jsonl")));
}

TEST_CASE("the documented split sizes come out of a 1900-record dataset") {
  const auto recs = synthetic_records({380, 380, 380, 380, 380});
  const SplitResult sr = split_finetune(recs, 25.0, 7);
  CHECK(sr.finetune.size() == 475);
  CHECK(sr.test.size() == 1425);
  auto fset = id_set(sr.finetune);
  auto tset = id_set(sr.test);
  CHECK(fset.size() == 475);
  CHECK(tset.size() == 1425);
  for (const auto& id : fset) CHECK(tset.count(id) == 0);
}

TEST_CASE("splits are reproducible for a fixed seed") {
  const auto recs = synthetic_records({40, 40, 40, 40, 40});
  const SplitResult a = split_finetune(recs, 5.0, 3);
  const SplitResult b = split_finetune(recs, 5.0, 3);
  CHECK(id_set(a.finetune) == id_set(b.finetune));
  CHECK(id_set(a.test) == id_set(b.test));
  const SplitResult c = split_finetune(recs, 5.0, 4);
  CHECK(id_set(c.finetune) != id_set(a.finetune));
}

TEST_CASE("fine-tune sets nest as the percentage grows") {
  const auto recs = synthetic_records({380, 380, 380, 380, 380});
  std::set<std::string> prev;
  std::set<std::string> test_ids;
  for (double pct : {5.0, 10.0, 15.0, 20.0, 25.0}) {
    const SplitResult sr = split_finetune(recs, pct, 11);
    const auto ids = id_set(sr.finetune);
    CHECK(ids.size() == static_cast<size_t>(1900 * pct / 100.0));
    for (const auto& id : prev) CHECK(ids.count(id) == 1);
    prev = ids;
    if (test_ids.empty())
      test_ids = id_set(sr.test);
    else
      CHECK(id_set(sr.test) == test_ids);  // test membership fixed across percents
  }
}

TEST_CASE("both splits stay stratified within one sample per class") {
  const auto recs = synthetic_records({17, 23, 40, 9, 11});
  const double total = 100.0;
  for (double pct : {5.0, 15.0, 25.0}) {
    const SplitResult sr = split_finetune(recs, pct, 13);
    std::vector<int> fcount(5, 0), tcount(5, 0);
    for (const auto& r : sr.finetune) fcount[r.label]++;
    for (const auto& r : sr.test) tcount[r.label]++;
    const std::vector<int> klass{17, 23, 40, 9, 11};
    for (int c = 0; c < 5; ++c) {
      const double fshare = static_cast<double>(sr.finetune.size()) * klass[c] / total;
      const double tshare = static_cast<double>(sr.test.size()) * klass[c] / total;
      CHECK(std::abs(fcount[c] - fshare) <= 1.0);
      CHECK(std::abs(tcount[c] - tshare) <= 1.0);
    }
  }
}

TEST_CASE("out-of-range fine-tune percentages are rejected") {
  const auto recs = synthetic_records({8, 8, 8, 8, 8});
  CHECK_THROWS_AS(split_finetune(recs, 30.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_finetune(recs, 0.0, 1), std::invalid_argument);
  CHECK_THROWS_AS(split_finetune(recs, -5.0, 1), std::invalid_argument);
  CHECK_NOTHROW(split_finetune(recs, 25.0, 1));
}

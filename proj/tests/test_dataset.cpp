#include <catch2/catch_amalgamated.hpp>

#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <set>

#include "evade/dataset.hpp"
#include "evade/synth.hpp"
#include "support/oracles.hpp"

using namespace evade;
namespace fs = std::filesystem;

namespace {

// Fresh scratch directory per test case, removed on destruction.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("evade_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& body) {
  std::ofstream out(path, std::ios::trunc);
  out << body;
}

}  // namespace

TEST_CASE("load_idx reads a crafted fixture") {
  TempDir dir;
  // 4 tiny 28x28 images written by the independent byte-writer
  std::vector<std::vector<unsigned char>> images(4, std::vector<unsigned char>(784, 0));
  images[0][0] = 255;
  images[1][783] = 7;
  images[2][100] = 128;
  oracle::write_idx_images(dir.file("img"), images, 28, 28);
  oracle::write_idx_labels(dir.file("lab"), {3, 1, 4, 1});

  Dataset ds = load_idx(dir.file("img"), dir.file("lab"));
  REQUIRE(ds.size() == 4);
  REQUIRE(ds.feature_count == 784);
  CHECK(ds.samples[0].features[0] == 255.0);
  CHECK(ds.samples[1].features[783] == 7.0);
  CHECK(ds.samples[2].features[100] == 128.0);
  CHECK(ds.samples[3].features == std::vector<double>(784, 0.0));
  CHECK(ds.samples[0].label == 3);
  CHECK(ds.samples[3].label == 1);
  CHECK(ds.classes == std::vector<int>{1, 3, 4});
  CHECK(ds.feature_range == Interval{0.0, 255.0});
}

TEST_CASE("load_idx rejects malformed containers") {
  TempDir dir;
  std::vector<std::vector<unsigned char>> images(2, std::vector<unsigned char>(9, 1));
  oracle::write_idx_images(dir.file("img"), images, 3, 3);
  oracle::write_idx_labels(dir.file("lab"), {0, 1});

  SECTION("missing file") {
    CHECK_THROWS_AS(load_idx(dir.file("nope"), dir.file("lab")), IoError);
  }
  SECTION("bad image magic") {
    std::ofstream out(dir.file("badmagic"), std::ios::binary);
    oracle::put_be32(out, 0xdeadbeefu);
    out.close();
    CHECK_THROWS_WITH(load_idx(dir.file("badmagic"), dir.file("lab")),
                      Catch::Matchers::ContainsSubstring("magic"));
  }
  SECTION("label count mismatch") {
    oracle::write_idx_labels(dir.file("lab3"), {0, 1, 2});
    CHECK_THROWS_WITH(load_idx(dir.file("img"), dir.file("lab3")),
                      Catch::Matchers::ContainsSubstring("mismatch"));
  }
  SECTION("empty label file means zero counts") {
    oracle::write_idx_labels(dir.file("lab0"), {});
    CHECK_THROWS_AS(load_idx(dir.file("img"), dir.file("lab0")), FormatError);
  }
  SECTION("truncated payload") {
    // claim 2 images but provide bytes for only 1
    std::vector<std::vector<unsigned char>> one(1, std::vector<unsigned char>(9, 1));
    std::ofstream out(dir.file("trunc"), std::ios::binary);
    oracle::put_be32(out, 0x00000803u);
    oracle::put_be32(out, 2);
    oracle::put_be32(out, 3);
    oracle::put_be32(out, 3);
    out.write(reinterpret_cast<const char*>(one[0].data()), 9);
    out.close();
    CHECK_THROWS_WITH(load_idx(dir.file("trunc"), dir.file("lab")),
                      Catch::Matchers::ContainsSubstring("truncated"));
  }
}

TEST_CASE("write_idx round-trips through load_idx") {
  TempDir dir;
  DigitSynthConfig cfg;
  cfg.classes = {2, 7};
  cfg.per_class = 12;
  cfg.seed = 5;
  Dataset ds = synth_digits(cfg);
  write_idx(ds, dir.file("img"), dir.file("lab"));
  Dataset back = load_idx(dir.file("img"), dir.file("lab"));
  REQUIRE(back.size() == ds.size());
  REQUIRE(back.feature_count == ds.feature_count);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[i].label == ds.samples[i].label);
    CHECK(back.samples[i].features == ds.samples[i].features);  // already integral bytes
  }
}

TEST_CASE("load_sparse_text parses and validates") {
  TempDir dir;
  SECTION("missing indices read back as zero") {
    write_text(dir.file("s"), "3 1:0.5 4:2\n-1 2:1.25\n\n7\n");
    Dataset ds = load_sparse_text(dir.file("s"), 5);
    REQUIRE(ds.size() == 3);
    REQUIRE(ds.feature_count == 5);
    CHECK(ds.samples[0].features == std::vector<double>{0.5, 0, 0, 2, 0});
    CHECK(ds.samples[1].features == std::vector<double>{0, 1.25, 0, 0, 0});
    CHECK(ds.samples[2].features == std::vector<double>(5, 0.0));
    CHECK(ds.classes == std::vector<int>{-1, 3, 7});
    // feature_range reflects observed values
    CHECK(ds.feature_range.lo == 0.0);
    CHECK(ds.feature_range.hi == 2.0);
  }
  SECTION("non-increasing index is an error with a line number") {
    write_text(dir.file("s"), "1 1:1 3:1\n1 2:1 2:5\n");
    CHECK_THROWS_WITH(load_sparse_text(dir.file("s"), 4),
                      Catch::Matchers::ContainsSubstring("line 2"));
  }
  SECTION("index above feature_count is an error") {
    write_text(dir.file("s"), "1 9:1\n");
    CHECK_THROWS_AS(load_sparse_text(dir.file("s"), 4), FormatError);
  }
  SECTION("token without a colon is an error") {
    write_text(dir.file("s"), "1 17\n");
    CHECK_THROWS_WITH(load_sparse_text(dir.file("s"), 4),
                      Catch::Matchers::ContainsSubstring("idx:val"));
  }
  SECTION("empty file is an error") {
    write_text(dir.file("s"), "");
    CHECK_THROWS_AS(load_sparse_text(dir.file("s"), 4), FormatError);
  }
  SECTION("round trip drops explicit zeros") {
    Dataset ds;
    ds.feature_count = 3;
    ds.samples = {{{1.5, 0.0, -2.0}, 4}, {{0.0, 0.0, 0.0}, 2}};
    ds.classes = {2, 4};
    write_sparse_text(ds, dir.file("out"));
    Dataset back = load_sparse_text(dir.file("out"), 3);
    REQUIRE(back.size() == 2);
    CHECK(back.samples[0].features == ds.samples[0].features);
    CHECK(back.samples[1].features == ds.samples[1].features);
    CHECK(back.samples[0].label == 4);
  }
}

TEST_CASE("load_csv_labeled parses and validates") {
  TempDir dir;
  SECTION("label column is excised from features") {
    write_text(dir.file("c"), "1.5,2,0\n-0.25,3,1\n");
    Dataset ds = load_csv_labeled(dir.file("c"), 2);
    REQUIRE(ds.size() == 2);
    REQUIRE(ds.feature_count == 2);
    CHECK(ds.samples[0].features == std::vector<double>{1.5, 2.0});
    CHECK(ds.samples[0].label == 0);
    CHECK(ds.samples[1].label == 1);
    CHECK(ds.feature_range.lo == -0.25);
    CHECK(ds.feature_range.hi == 3.0);
  }
  SECTION("label column first") {
    write_text(dir.file("c"), "7,0.5,0.25\r\n8,1,2\n");
    Dataset ds = load_csv_labeled(dir.file("c"), 0);
    CHECK(ds.samples[0].label == 7);
    CHECK(ds.samples[0].features == std::vector<double>{0.5, 0.25});
    CHECK(ds.classes == std::vector<int>{7, 8});
  }
  SECTION("ragged row is an error naming the row") {
    write_text(dir.file("c"), "1,2,0\n1,0\n");
    CHECK_THROWS_WITH(load_csv_labeled(dir.file("c"), 2),
                      Catch::Matchers::ContainsSubstring("row 2"));
  }
  SECTION("unparsable cell is an error") {
    write_text(dir.file("c"), "1,x,0\n");
    CHECK_THROWS_AS(load_csv_labeled(dir.file("c"), 2), FormatError);
  }
  SECTION("label column out of range is an error") {
    write_text(dir.file("c"), "1,2\n");
    CHECK_THROWS_AS(load_csv_labeled(dir.file("c"), 5), FormatError);
  }
  SECTION("round trip preserves values") {
    Dataset ds;
    ds.feature_count = 2;
    ds.samples = {{{0.125, -3.5}, 1}, {{2.0, 0.0}, 0}};
    ds.classes = {0, 1};
    write_csv_labeled(ds, dir.file("out"), 1);
    Dataset back = load_csv_labeled(dir.file("out"), 1);
    CHECK(back.samples[0].features == ds.samples[0].features);
    CHECK(back.samples[1].features == ds.samples[1].features);
    CHECK(back.samples[0].label == 1);
    CHECK(back.samples[1].label == 0);
  }
}

TEST_CASE("scaling maps observed extrema onto the target interval") {
  Dataset ds;
  ds.feature_count = 3;
  ds.samples = {{{0.0, 5.0, 2.0}, 0}, {{10.0, 5.0, 4.0}, 1}};
  ds.classes = {0, 1};
  ds.feature_range = Interval{0.0, 10.0};

  SECTION("unit target") {
    ScaleParams p = fit_scaling(ds, Interval{0.0, 1.0});
    CHECK(p.lo == std::vector<double>{0.0, 5.0, 2.0});
    CHECK(p.hi == std::vector<double>{10.0, 5.0, 4.0});
    Dataset out = apply_scaling(ds, p);
    CHECK(out.feature_range == Interval{0.0, 1.0});
    CHECK(out.samples[0].features[0] == 0.0);
    CHECK(out.samples[1].features[0] == 1.0);
    // constant feature lands on the midpoint
    CHECK(out.samples[0].features[1] == 0.5);
    CHECK(out.samples[1].features[1] == 0.5);
    CHECK(out.samples[0].features[2] == 0.0);
    CHECK(out.samples[1].features[2] == 1.0);
    // source dataset untouched
    CHECK(ds.samples[0].features[0] == 0.0);
    CHECK(ds.feature_range.hi == 10.0);
  }
  SECTION("symmetric target") {
    Dataset out = scale_features(ds, Interval{-1.0, 1.0});
    CHECK(out.samples[0].features[0] == -1.0);
    CHECK(out.samples[1].features[0] == 1.0);
    CHECK(out.samples[0].features[1] == 0.0);
  }
  SECTION("foreign data is clamped into the target") {
    ScaleParams p = fit_scaling(ds, Interval{0.0, 1.0});
    Dataset other = ds;
    other.samples[0].features = {-5.0, 9.0, 3.0};  // below lo, above hi, interior
    Dataset out = apply_scaling(other, p);
    CHECK(out.samples[0].features[0] == 0.0);
    CHECK(out.samples[0].features[1] == 0.5);  // constant feature still midpoint
    CHECK(out.samples[0].features[2] == 0.5);
  }
  SECTION("dimension mismatch is an error") {
    ScaleParams p = fit_scaling(ds, Interval{0.0, 1.0});
    Dataset narrow;
    narrow.feature_count = 2;
    narrow.samples = {{{1.0, 2.0}, 0}};
    CHECK_THROWS_AS(apply_scaling(narrow, p), FormatError);
  }
  SECTION("empty dataset cannot be fitted") {
    Dataset empty;
    empty.feature_count = 3;
    CHECK_THROWS_AS(fit_scaling(empty, Interval{0.0, 1.0}), EmptyWorkError);
  }
}

TEST_CASE("filter_classes keeps the requested labels in order") {
  Dataset ds;
  ds.feature_count = 1;
  for (int c : {0, 1, 2, 1, 0, 3})
    ds.samples.push_back({{double(c)}, c});
  ds.classes = {0, 1, 2, 3};

  SECTION("pair filter pins direction order") {
    Dataset out = filter_classes(ds, 2, 0);
    CHECK(out.classes == std::vector<int>{2, 0});
    CHECK(out.size() == 3);
    for (const auto& s : out.samples) CHECK((s.label == 0 || s.label == 2));
  }
  SECTION("multi-class filter") {
    Dataset out = filter_classes(ds, {3, 1, 0});
    CHECK(out.classes == std::vector<int>{3, 1, 0});
    CHECK(out.size() == 5);
  }
  SECTION("absent class is empty work") {
    CHECK_THROWS_AS(filter_classes(ds, 0, 9), EmptyWorkError);
  }
  SECTION("duplicate class is a format error") {
    CHECK_THROWS_AS(filter_classes(ds, 1, 1), FormatError);
  }
  SECTION("fewer than two classes is a format error") {
    CHECK_THROWS_AS(filter_classes(ds, std::vector<int>{1}), FormatError);
  }
}

TEST_CASE("partition splits deterministically") {
  Dataset ds;
  ds.feature_count = 1;
  for (int i = 0; i < 100; ++i) ds.samples.push_back({{double(i)}, i % 4});
  ds.classes = {0, 1, 2, 3};

  SECTION("parts are disjoint and sized") {
    auto parts = partition(ds, {70, 30}, 42);
    REQUIRE(parts.size() == 2);
    CHECK(parts[0].size() == 70);
    CHECK(parts[1].size() == 30);
    CHECK(parts[0].classes == ds.classes);
    std::set<double> seen;
    for (const auto& part : parts)
      for (const auto& s : part.samples) seen.insert(s.features[0]);
    CHECK(seen.size() == 100);  // disjoint cover of the pool
  }
  SECTION("same seed, same split; different seed, different split") {
    auto a = partition(ds, {50}, 7);
    auto b = partition(ds, {50}, 7);
    auto c = partition(ds, {50}, 8);
    CHECK(a[0].samples[0].features == b[0].samples[0].features);
    bool any_diff = false;
    for (std::size_t i = 0; i < 50; ++i)
      any_diff = any_diff || a[0].samples[i].features != c[0].samples[i].features;
    CHECK(any_diff);
  }
  SECTION("oversubscription is an error") {
    CHECK_THROWS_AS(partition(ds, {80, 30}, 1), FormatError);
  }
  SECTION("zero-size part is an error") {
    CHECK_THROWS_AS(partition(ds, {0, 10}, 1), FormatError);
  }
}

TEST_CASE("synth_digits renders deterministic byte images") {
  DigitSynthConfig cfg;
  cfg.classes = {0, 8};
  cfg.per_class = 6;
  cfg.seed = 3;

  Dataset a = synth_digits(cfg);
  Dataset b = synth_digits(cfg);
  REQUIRE(a.size() == 12);
  REQUIRE(a.feature_count == 784);
  CHECK(a.feature_range == Interval{0.0, 255.0});
  CHECK(a.classes == std::vector<int>{0, 8});
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a.samples[i].features == b.samples[i].features);
    for (double v : a.samples[i].features) {
      CHECK(v >= 0.0);
      CHECK(v <= 255.0);
      CHECK(v == std::floor(v));  // integral bytes
    }
  }
  CHECK(a.count_label(0) == 6);
  CHECK(a.count_label(8) == 6);

  SECTION("intensity caps the brightest pixel") {
    cfg.intensity = 0.4;
    Dataset dim = synth_digits(cfg);
    double peak = 0.0;
    for (const auto& s : dim.samples)
      for (double v : s.features) peak = std::max(peak, v);
    CHECK(peak <= std::lround(255.0 * 0.4));
    CHECK(peak > 0.0);
  }
  SECTION("class_count overrides per_class") {
    cfg.class_count = {{8, 2}};
    Dataset mixed = synth_digits(cfg);
    CHECK(mixed.count_label(0) == 6);
    CHECK(mixed.count_label(8) == 2);
  }
  SECTION("invalid digits and morph specs are rejected") {
    DigitSynthConfig bad = cfg;
    bad.classes = {0, 11};
    CHECK_THROWS_AS(synth_digits(bad), FormatError);
    bad = cfg;
    bad.class_morph[0] = {{8, 1.5, 0.3, 0.7}};
    CHECK_THROWS_AS(synth_digits(bad), FormatError);
    bad = cfg;
    bad.class_morph[0] = {{8, 0.5, 0.8, 0.2}};  // reversed blend range
    CHECK_THROWS_AS(synth_digits(bad), FormatError);
    bad = cfg;
    bad.class_morph[0] = {{8, 0.7, 0.1, 0.2}, {8, 0.7, 0.1, 0.2}};  // fractions sum > 1
    CHECK_THROWS_AS(synth_digits(bad), FormatError);
    bad = cfg;
    bad.intensity = 0.0;
    CHECK_THROWS_AS(synth_digits(bad), FormatError);
  }
  SECTION("morphed slice blends toward the other skeleton") {
    DigitSynthConfig plain = cfg;
    DigitSynthConfig morphed = cfg;
    morphed.class_morph[0] = {{8, 0.5, 0.9, 0.9}};
    Dataset p = synth_digits(plain);
    Dataset q = synth_digits(morphed);
    REQUIRE(q.size() == p.size());
    CHECK(q.samples[0].label == 0);  // label survives the drift
    // a 0.9 blend lands the drifted zero visibly closer to an eight; the gap
    // floor is the affine jitter between any two renders of the same digit
    const auto& an_eight = q.samples[6].features;
    double d_plain = oracle::euclid(p.samples[0].features, an_eight);
    double d_morph = oracle::euclid(q.samples[0].features, an_eight);
    CHECK(d_morph < 0.8 * d_plain);
  }
}

TEST_CASE("toy_two_cluster emits two labeled gaussian blobs") {
  ToyConfig cfg;
  cfg.n_first = 40;
  cfg.n_second = 25;
  Dataset ds = toy_two_cluster(cfg);
  REQUIRE(ds.size() == 65);
  REQUIRE(ds.feature_count == 2);
  CHECK(ds.classes == std::vector<int>{1, 2});
  CHECK(ds.count_label(1) == 40);
  CHECK(ds.count_label(2) == 25);
  for (const auto& s : ds.samples)
    for (double v : s.features) {
      CHECK(v >= -1.0);
      CHECK(v <= 1.0);
    }
  // deterministic for a fixed seed
  Dataset again = toy_two_cluster(cfg);
  CHECK(again.samples[0].features == ds.samples[0].features);
  ToyConfig bad = cfg;
  bad.n_first = 0;
  CHECK_THROWS_AS(toy_two_cluster(bad), FormatError);
}

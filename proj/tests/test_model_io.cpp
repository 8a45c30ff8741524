#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <string>

#include "evade/model_io.hpp"
#include "evade/svm.hpp"
#include "evade/synth.hpp"

using namespace evade;

namespace {

namespace fs = std::filesystem;

SvmBinaryModel small_binary_model() {
  ToyConfig tc;
  tc.n_first = 40;
  tc.n_second = 40;
  const Dataset ds = toy_two_cluster(tc);
  TrainConfig trc;
  trc.cost = 2.0;
  return train_binary(ds, KernelSpec::rbf(5.0), trc);
}

MulticlassModel small_multiclass_model() {
  Rng rng(3);
  Dataset ds;
  ds.feature_count = 2;
  ds.feature_range = Interval{-2.0, 2.0};
  ds.classes = {0, 1, 2};
  const double centers[3][2] = {{-1.0, -1.0}, {1.0, -1.0}, {0.0, 1.2}};
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < 30; ++i)
      ds.samples.push_back(
          {{centers[c][0] + 0.25 * rng.normal(), centers[c][1] + 0.25 * rng.normal()}, c});
  TrainConfig trc;
  trc.cost = 5.0;
  return train_multiclass(ds, KernelSpec::rbf(1.0), trc);
}

// Fresh directory under the system temp root; removed by the destructor.
struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("evade_io_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

}  // namespace

TEST_CASE("binary model text round-trip is exact") {
  const SvmBinaryModel m = small_binary_model();
  const std::string text = model_to_string(m);

  const AnyModel any = model_from_string(text);
  REQUIRE(std::holds_alternative<SvmBinaryModel>(any));
  const SvmBinaryModel& r = std::get<SvmBinaryModel>(any);

  CHECK(r.kernel.kind == m.kernel.kind);
  CHECK(r.kernel.gamma == m.kernel.gamma);
  CHECK(r.cost == m.cost);
  CHECK(r.bias == m.bias);
  CHECK(r.positive_class == m.positive_class);
  CHECK(r.negative_class == m.negative_class);
  CHECK(r.feature_count == m.feature_count);
  REQUIRE(r.n_sv() == m.n_sv());
  for (std::size_t i = 0; i < m.n_sv(); ++i) {
    CHECK(r.dual_coefs[i] == m.dual_coefs[i]);
    for (std::size_t k = 0; k < m.feature_count; ++k)
      CHECK(r.support_vectors.row(i)[k] == m.support_vectors.row(i)[k]);
  }

  // 17 significant digits reproduce the bit pattern, so re-serialization is
  // byte-identical and decision values agree exactly.
  CHECK(model_to_string(r) == text);
  Rng rng(11);
  for (int p = 0; p < 10; ++p) {
    const std::vector<double> x = {rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0)};
    CHECK(decision_value(r, x) == decision_value(m, x));
  }
}

TEST_CASE("multiclass model round-trip preserves structure") {
  const MulticlassModel m = small_multiclass_model();
  const std::string text = model_to_string(m);
  CHECK(text.find("multiclass 3") != std::string::npos);
  CHECK(text.find("rest") != std::string::npos);  // one-vs-all negative side

  const AnyModel any = model_from_string(text);
  REQUIRE(std::holds_alternative<MulticlassModel>(any));
  const MulticlassModel& r = std::get<MulticlassModel>(any);

  CHECK(r.classes == m.classes);
  REQUIRE(r.per_class_models.size() == m.per_class_models.size());
  CHECK(r.feature_count == m.feature_count);
  for (std::size_t i = 0; i < m.per_class_models.size(); ++i) {
    CHECK(r.per_class_models[i].positive_class == m.classes[i]);
    CHECK(r.per_class_models[i].negative_class == kRestClass);
    CHECK(r.per_class_models[i].bias == m.per_class_models[i].bias);
  }
  CHECK(model_to_string(r) == text);

  Rng rng(12);
  for (int p = 0; p < 10; ++p) {
    const std::vector<double> x = {rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
    CHECK(predict(r, x) == predict(m, x));
    CHECK(class_scores(r, x) == class_scores(m, x));
  }
}

TEST_CASE("model files survive a disk round trip") {
  TempDir dir;
  const SvmBinaryModel bin = small_binary_model();
  const MulticlassModel multi = small_multiclass_model();

  save_model(bin, dir.path / "bin.txt");
  save_model(multi, dir.path / "multi.txt");
  REQUIRE(fs::exists(dir.path / "bin.txt"));
  REQUIRE(fs::exists(dir.path / "multi.txt"));

  const AnyModel b = load_model(dir.path / "bin.txt");
  const AnyModel m = load_model(dir.path / "multi.txt");
  REQUIRE(std::holds_alternative<SvmBinaryModel>(b));
  REQUIRE(std::holds_alternative<MulticlassModel>(m));
  CHECK(model_to_string(std::get<SvmBinaryModel>(b)) == model_to_string(bin));
  CHECK(model_to_string(std::get<MulticlassModel>(m)) == model_to_string(multi));

  CHECK_THROWS_AS(load_model(dir.path / "missing.txt"), IoError);
}

TEST_CASE("scaling parameters round-trip exactly") {
  ToyConfig tc;
  tc.n_first = 30;
  tc.n_second = 30;
  const Dataset ds = toy_two_cluster(tc);
  const ScaleParams p = fit_scaling(ds, Interval{0.0, 1.0});

  const std::string text = scaling_to_string(p);
  const ScaleParams r = scaling_from_string(text);
  CHECK(r.target.lo == p.target.lo);
  CHECK(r.target.hi == p.target.hi);
  CHECK(r.lo == p.lo);
  CHECK(r.hi == p.hi);
  CHECK(scaling_to_string(r) == text);

  TempDir dir;
  save_scaling(p, dir.path / "scaling.txt");
  const ScaleParams rf = load_scaling(dir.path / "scaling.txt");
  CHECK(rf.lo == p.lo);
  CHECK(rf.hi == p.hi);

  CHECK_THROWS_AS(scaling_from_string("evadescale 2\n"), FormatError);
  CHECK_THROWS_AS(scaling_from_string("wrongmagic 1\n"), FormatError);
  CHECK_THROWS_AS(scaling_from_string("evadescale 1\ntarget 0 1\ndim 0\n"), FormatError);
}

TEST_CASE("malformed model text is rejected") {
  const std::string good = model_to_string(small_binary_model());
  auto mutate = [&](const std::string& from, const std::string& to) {
    std::string s = good;
    const auto at = s.find(from);
    REQUIRE(at != std::string::npos);
    s.replace(at, from.size(), to);
    return s;
  };

  CHECK_THROWS_AS(model_from_string(mutate("evadesvm 1", "othermagic 1")), FormatError);
  CHECK_THROWS_AS(model_from_string(mutate("evadesvm 1", "evadesvm 2")), FormatError);
  CHECK_THROWS_AS(model_from_string(mutate("binary", "ensemble")), FormatError);
  CHECK_THROWS_AS(model_from_string(mutate("kernel rbf", "kernel poly")), FormatError);
  CHECK_THROWS_AS(model_from_string(mutate("nsv", "svcount")), FormatError);
  CHECK_THROWS_AS(model_from_string(good.substr(0, good.size() - 4)), FormatError);  // no "end"
  CHECK_THROWS_AS(model_from_string(""), FormatError);

  // nsv / dim must be positive, rbf gamma must be positive.
  {
    std::string s = good;
    const auto at = s.find("nsv ");
    const auto eol = s.find('\n', at);
    s.replace(at, eol - at, "nsv 0");
    CHECK_THROWS_AS(model_from_string(s), FormatError);
  }
  {
    std::string s = good;
    const auto at = s.find("kernel rbf ");
    const auto eol = s.find('\n', at);
    s.replace(at, eol - at, "kernel rbf -2");
    CHECK_THROWS_AS(model_from_string(s), FormatError);
  }

  // Multiclass headers: zero class count and truncated model list.
  CHECK_THROWS_AS(model_from_string("evadesvm 1\nmulticlass 0\nclasses\n"), FormatError);
  {
    const std::string multi = model_to_string(small_multiclass_model());
    const auto last = multi.rfind("model\n");
    CHECK_THROWS_AS(model_from_string(multi.substr(0, last)), FormatError);
  }
}

TEST_CASE("class ids outside the plain-integer form are rejected") {
  const std::string good = model_to_string(small_binary_model());
  std::string s = good;
  const auto at = s.find("classes ");
  const auto eol = s.find('\n', at);
  s.replace(at, eol - at, "classes one 2");
  CHECK_THROWS_AS(model_from_string(s), FormatError);
}

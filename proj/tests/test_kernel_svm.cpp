#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evade/svm.hpp"
#include "evade/synth.hpp"
#include "support/oracles.hpp"

using namespace evade;

namespace {

// Model with random support vectors and coefficients; no training involved,
// exercises only the decision function and its gradient.
SvmBinaryModel make_random_rbf_model(Rng& rng, std::size_t d, std::size_t n_sv, double gamma) {
  SvmBinaryModel m;
  m.kernel = KernelSpec::rbf(gamma);
  m.feature_count = d;
  m.support_vectors = Matrix(n_sv, d);
  m.dual_coefs.resize(n_sv);
  for (std::size_t i = 0; i < n_sv; ++i) {
    for (std::size_t k = 0; k < d; ++k) m.support_vectors.row(i)[k] = rng.uniform(-1.0, 1.0);
    m.dual_coefs[i] = rng.uniform(-2.0, 2.0);
  }
  m.bias = rng.uniform(-0.5, 0.5);
  return m;
}

Dataset three_blob_dataset(std::size_t per_class, std::uint64_t seed) {
  Rng rng(seed);
  Dataset ds;
  ds.feature_count = 2;
  ds.feature_range = Interval{-2.0, 2.0};
  ds.classes = {0, 1, 2};
  const double centers[3][2] = {{-1.0, -1.0}, {1.0, -1.0}, {0.0, 1.2}};
  for (int c = 0; c < 3; ++c)
    for (std::size_t i = 0; i < per_class; ++i)
      ds.samples.push_back(
          {{centers[c][0] + 0.25 * rng.normal(), centers[c][1] + 0.25 * rng.normal()}, c});
  return ds;
}

}  // namespace

TEST_CASE("kernel_eval computes rbf and linear kernels") {
  const std::vector<double> x{1.0, 2.0, 3.0};
  const std::vector<double> z{1.0, 0.0, 3.0};
  CHECK(kernel_eval(KernelSpec::rbf(0.7), x, x) == 1.0);
  CHECK(kernel_eval(KernelSpec::rbf(0.7), x, z) == Catch::Approx(std::exp(-0.7 * 4.0)));
  CHECK(kernel_eval(KernelSpec::linear(), x, z) == Catch::Approx(1.0 + 0.0 + 9.0));
  CHECK(KernelSpec::rbf(0.5).width() == Catch::Approx(2.0));
  CHECK_THROWS_AS(kernel_eval(KernelSpec::linear(), x, std::vector<double>{1.0}), FormatError);
}

TEST_CASE("two-point problem matches the closed form") {
  // one point per class; alpha* = min(C, 1/(1-k12)), bias 0 by symmetry
  Dataset ds;
  ds.feature_count = 2;
  ds.classes = {1, -1};
  ds.samples = {{{0.0, 0.0}, 1}, {{1.0, 1.0}, -1}};

  const double gamma = 0.4;
  const double k12 = std::exp(-gamma * 2.0);

  SECTION("interior solution") {
    TrainConfig cfg;
    cfg.cost = 50.0;
    cfg.tolerance = 1e-9;
    SvmBinaryModel m = train_binary(ds, KernelSpec::rbf(gamma), cfg);
    const auto expect = oracle::two_point_solution(k12, cfg.cost);
    REQUIRE(m.n_sv() == 2);
    CHECK(m.dual_coefs[0] == Catch::Approx(expect.alpha).epsilon(1e-6));
    CHECK(m.dual_coefs[1] == Catch::Approx(-expect.alpha).epsilon(1e-6));
    CHECK(m.bias == Catch::Approx(0.0).margin(1e-9));
    // margins are exactly +-1 at the two points
    CHECK(decision_value(m, ds.samples[0].features) == Catch::Approx(1.0).epsilon(1e-6));
    CHECK(decision_value(m, ds.samples[1].features) == Catch::Approx(-1.0).epsilon(1e-6));
  }
  SECTION("box-capped solution") {
    TrainConfig cfg;
    cfg.cost = 0.5;  // cap below 1/(1-k12)
    cfg.tolerance = 1e-9;
    SvmBinaryModel m = train_binary(ds, KernelSpec::rbf(gamma), cfg);
    REQUIRE(m.n_sv() == 2);
    CHECK(m.dual_coefs[0] == Catch::Approx(0.5));
    CHECK(m.dual_coefs[1] == Catch::Approx(-0.5));
  }
}

TEST_CASE("smo dual objective matches a projected-gradient oracle") {
  Rng rng(202);
  for (int trial = 0; trial < 5; ++trial) {
    const std::size_t n = 12 + 2 * std::size_t(trial);
    const std::size_t d = 3;
    const double gamma = rng.uniform(0.2, 1.5);
    const double C = (trial % 2 == 0) ? 1.0 : 10.0;

    Matrix pts(n, d);
    std::vector<signed char> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = (i % 2 == 0) ? +1 : -1;
      for (std::size_t k = 0; k < d; ++k)
        pts.row(i)[k] = rng.uniform(-1.0, 1.0) + (y[i] > 0 ? 0.3 : -0.3);
    }

    KernelCache cache(pts, KernelSpec::rbf(gamma), n, 8);
    SolveResult solved = smo_solve(cache, y, C, 1e-6, 200000);
    REQUIRE(solved.converged);

    oracle::QpProblem qp;
    qp.C = C;
    qp.y = y;
    qp.K.resize(n * n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        qp.K[i * n + j] = kernel_eval(KernelSpec::rbf(gamma), pts.row(i), pts.row(j));
    const auto ref = oracle::qp_solve(qp);

    const double got = dual_objective(cache, y, solved.alphas);
    const double want = oracle::qp_objective(qp, ref);
    INFO("trial " << trial << " n=" << n << " gamma=" << gamma << " C=" << C);
    CHECK(got == Catch::Approx(want).margin(1e-4));

    // equality constraint holds
    double ya = 0.0;
    for (std::size_t i = 0; i < n; ++i) ya += double(y[i]) * solved.alphas[i];
    CHECK(std::abs(ya) < 1e-9);
  }
}

TEST_CASE("trained model satisfies the KKT conditions") {
  Dataset ds;
  ds.feature_count = 2;
  ds.classes = {1, 2};
  Rng rng(7);
  for (int i = 0; i < 30; ++i)
    ds.samples.push_back({{rng.uniform(-1.0, 0.2), rng.uniform(-1.0, 1.0)}, 1});
  for (int i = 0; i < 30; ++i)
    ds.samples.push_back({{rng.uniform(-0.2, 1.0), rng.uniform(-1.0, 1.0)}, 2});

  TrainConfig cfg;
  cfg.cost = 5.0;
  cfg.tolerance = 1e-5;
  SvmBinaryModel m = train_binary(ds, KernelSpec::rbf(0.8), cfg);

  const double tol = 1e-3;
  std::size_t checked = 0;
  for (std::size_t i = 0; i < m.n_sv(); ++i) {
    const double coef = m.dual_coefs[i];
    const double alpha = std::abs(coef);
    const double yi = coef > 0.0 ? 1.0 : -1.0;
    const double margin = yi * decision_value(m, m.support_vectors.row(i));
    if (alpha < cfg.cost - 1e-9) {
      CHECK(margin == Catch::Approx(1.0).margin(tol));  // free vector sits on the margin
    } else {
      CHECK(margin <= 1.0 + tol);  // bounded vector inside or on the margin
    }
    ++checked;
  }
  CHECK(checked == m.n_sv());
  // sum of dual coefs vanishes (equality constraint)
  double s = 0.0;
  for (double c : m.dual_coefs) s += c;
  CHECK(std::abs(s) < 1e-6);
}

TEST_CASE("train_binary maps class order onto the sign convention") {
  Dataset ds;
  ds.feature_count = 1;
  ds.classes = {7, 3};  // 7 is the positive class by position
  for (int i = 0; i < 10; ++i) ds.samples.push_back({{1.0 + 0.01 * i}, 7});
  for (int i = 0; i < 10; ++i) ds.samples.push_back({{-1.0 - 0.01 * i}, 3});

  TrainConfig cfg;
  SvmBinaryModel m = train_binary(ds, KernelSpec::rbf(0.5), cfg);
  CHECK(m.positive_class == 7);
  CHECK(m.negative_class == 3);
  CHECK(decision_value(m, std::vector<double>{1.1}) > 0.0);
  CHECK(predict(m, std::vector<double>{1.1}) == 7);
  CHECK(predict(m, std::vector<double>{-1.1}) == 3);

  SECTION("wrong class counts are train errors") {
    Dataset one;
    one.feature_count = 1;
    one.classes = {7, 3};
    one.samples = {{{1.0}, 7}, {{2.0}, 7}};
    CHECK_THROWS_AS(train_binary(one, KernelSpec::rbf(0.5), cfg), TrainError);
    Dataset three = ds;
    three.classes = {7, 3, 4};
    CHECK_THROWS_AS(train_binary(three, KernelSpec::rbf(0.5), cfg), TrainError);
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  Rng rng(99);
  for (int trial = 0; trial < 10; ++trial) {
    const std::size_t d = 2 + std::size_t(trial % 4);
    SvmBinaryModel m = make_random_rbf_model(rng, d, 6 + std::size_t(trial), 0.3 + 0.2 * trial);
    std::vector<double> x(d);
    for (auto& v : x) v = rng.uniform(-1.0, 1.0);

    double value = 0.0;
    std::vector<double> grad(d);
    decision_gradient_into(m, x, grad, &value);
    CHECK(value == Catch::Approx(decision_value(m, x)));

    const auto fd = oracle::fd_gradient(m, x);
    for (std::size_t k = 0; k < d; ++k)
      CHECK(grad[k] == Catch::Approx(fd[k]).epsilon(1e-6).margin(1e-9));
  }
}

TEST_CASE("linear kernel gradient is the constant primal weight vector") {
  Rng rng(5);
  SvmBinaryModel m;
  m.kernel = KernelSpec::linear();
  m.feature_count = 3;
  m.support_vectors = Matrix(4, 3);
  m.dual_coefs = {0.5, -1.0, 0.25, 0.75};
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 3; ++k) m.support_vectors.row(i)[k] = rng.uniform(-1.0, 1.0);

  std::vector<double> w(3, 0.0);
  for (std::size_t i = 0; i < 4; ++i)
    for (std::size_t k = 0; k < 3; ++k) w[k] += m.dual_coefs[i] * m.support_vectors.row(i)[k];

  const std::vector<double> x1{0.1, 0.2, 0.3}, x2{-0.7, 0.9, 0.0};
  CHECK(decision_gradient(m, x1) == decision_gradient(m, x2));
  const auto g = decision_gradient(m, x1);
  for (std::size_t k = 0; k < 3; ++k) CHECK(g[k] == Catch::Approx(w[k]));

  CHECK_THROWS_AS(decision_value(m, std::vector<double>{1.0}), FormatError);
  std::vector<double> small(1);
  CHECK_THROWS_AS(decision_gradient_into(m, std::vector<double>{1.0}, small), FormatError);
}

TEST_CASE("kernel cache serves identical rows dense and via lru") {
  Rng rng(31);
  Matrix pts(20, 3);
  for (std::size_t i = 0; i < 20; ++i)
    for (std::size_t k = 0; k < 3; ++k) pts.row(i)[k] = rng.uniform(-1.0, 1.0);

  KernelCache dense(pts, KernelSpec::rbf(0.6), 100, 4);
  KernelCache lru(pts, KernelSpec::rbf(0.6), 0, 4);  // capacity 4 forces eviction
  CHECK(dense.dense());
  CHECK(!lru.dense());
  // visit rows in a pattern that cycles the lru
  for (std::size_t pass = 0; pass < 2; ++pass)
    for (std::size_t i = 0; i < 20; ++i) {
      const double* a = dense.row(i);
      const double* b = lru.row(i);
      for (std::size_t j = 0; j < 20; ++j) REQUIRE(a[j] == b[j]);
    }
}

TEST_CASE("one-vs-all multiclass trains, scores, and predicts") {
  Dataset ds = three_blob_dataset(40, 13);
  TrainConfig cfg;
  cfg.cost = 10.0;

  MulticlassModel m = train_multiclass(ds, KernelSpec::rbf(1.0), cfg);
  REQUIRE(m.per_class_models.size() == 3);
  CHECK(m.classes == std::vector<int>{0, 1, 2});
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(m.per_class_models[i].positive_class == int(i));
    CHECK(m.per_class_models[i].negative_class == kRestClass);
  }
  CHECK(model_accuracy(m, ds) >= 99.0);

  SECTION("scores pick the right class at the blob centers") {
    const std::vector<double> at1{1.0, -1.0};
    const auto scores = class_scores(m, at1);
    REQUIRE(scores.size() == 3);
    CHECK(argmax_score(scores) == 1);
    CHECK(predict(m, at1) == 1);
    const std::size_t ru = runner_up_score(scores, 1);
    CHECK(ru != 1);
    CHECK(scores[ru] <= scores[1]);
  }
  SECTION("argmax and runner-up break ties toward the lowest index") {
    const std::vector<double> tied{0.5, 0.5, 0.1};
    CHECK(argmax_score(tied) == 0);
    CHECK(runner_up_score(tied, 0) == 1);
    CHECK(runner_up_score(std::vector<double>{0.5, 0.2, 0.5}, 0) == 2);
  }
  SECTION("shared dense cache and lru path train the same model") {
    TrainConfig tiny = cfg;
    tiny.dense_gram_limit = 1;  // forces the per-solver lru path
    MulticlassModel lru_model = train_multiclass(ds, KernelSpec::rbf(1.0), tiny);
    for (std::size_t ci = 0; ci < 3; ++ci) {
      CHECK(lru_model.per_class_models[ci].bias ==
            Catch::Approx(m.per_class_models[ci].bias).margin(1e-9));
      CHECK(lru_model.per_class_models[ci].n_sv() == m.per_class_models[ci].n_sv());
    }
  }
  SECTION("fewer than three classes is a train error") {
    Dataset two = ds;
    two.classes = {0, 1};
    CHECK_THROWS_AS(train_multiclass(two, KernelSpec::rbf(1.0), cfg), TrainError);
  }
  SECTION("accuracy of an empty test set is empty work") {
    Dataset empty;
    empty.feature_count = 2;
    CHECK_THROWS_AS(model_accuracy(m, empty), EmptyWorkError);
  }
}

TEST_CASE("multiclass training is reproducible and parallel-stable") {
  Dataset ds = three_blob_dataset(30, 17);
  TrainConfig cfg;
  cfg.cost = 2.0;
  MulticlassModel serial = train_multiclass(ds, KernelSpec::rbf(0.9), cfg, 1);
  MulticlassModel parallel = train_multiclass(ds, KernelSpec::rbf(0.9), cfg, 4);
  for (std::size_t ci = 0; ci < 3; ++ci) {
    CHECK(serial.per_class_models[ci].bias == parallel.per_class_models[ci].bias);
    REQUIRE(serial.per_class_models[ci].dual_coefs == parallel.per_class_models[ci].dual_coefs);
  }
}

#include <doctest.h>

#include <filesystem>

#include "polybench/common.hpp"
#include "polybench/svm.hpp"

using namespace polybench;
namespace fs = std::filesystem;

namespace {

// Four well-separated Gaussian blobs in `dim` dimensions.
void make_blobs(Rng& rng, int per_class, int dim, double spread,
                Eigen::MatrixXf& X, std::vector<PolypClass>& y) {
  X.resize(4 * per_class, dim);
  y.clear();
  for (int c = 0; c < 4; ++c) {
    Eigen::VectorXf center = Eigen::VectorXf::Zero(dim);
    center[c % dim] = 4.0f;
    center[(c + 1) % dim] = c >= 2 ? -4.0f : 4.0f;
    for (int i = 0; i < per_class; ++i) {
      int row = c * per_class + i;
      for (int d = 0; d < dim; ++d)
        X(row, d) = center[d] + static_cast<float>(spread * rng.normal());
      y.push_back(static_cast<PolypClass>(c));
    }
  }
}

double accuracy(const std::vector<PolypClass>& pred,
                const std::vector<PolypClass>& truth) {
  int hits = 0;
  for (size_t i = 0; i < pred.size(); ++i) hits += pred[i] == truth[i];
  return static_cast<double>(hits) / pred.size();
}

// Dual objective 1/2 a'Qa - sum(a) with Q_ij = y_i y_j K(x_i, x_j).
double dual_objective(const Eigen::MatrixXd& K, const Eigen::VectorXd& y,
                      const Eigen::VectorXd& alpha) {
  double obj = -alpha.sum();
  for (int i = 0; i < alpha.size(); ++i)
    for (int j = 0; j < alpha.size(); ++j)
      obj += 0.5 * alpha[i] * alpha[j] * y[i] * y[j] * K(i, j);
  return obj;
}

}  // namespace

TEST_CASE("polynomial kernel matches hand arithmetic") {
  Eigen::VectorXf x(3), y(3);
  x << 1, 2, 3;
  y << 4, 5, 6;  // <x,y> = 32
  KernelConfig cfg;
  cfg.degree = 2;
  cfg.gamma = 0.1;
  cfg.coef0 = 0.3;
  // (0.1 * 32 + 0.3)^2 = 3.5^2 = 12.25
  CHECK(poly_kernel(x, y, cfg) == doctest::Approx(12.25).epsilon(1e-9));

  cfg.degree = 3;
  cfg.gamma = 1.0;
  cfg.coef0 = 0.0;
  CHECK(poly_kernel(x, y, cfg) == doctest::Approx(32768.0).epsilon(1e-9));
}

TEST_CASE("separable 4-blob problem is solved at C=1") {
  Rng rng(31);
  Eigen::MatrixXf X_train, X_test;
  std::vector<PolypClass> y_train, y_test;
  make_blobs(rng, 20, 10, 0.5, X_train, y_train);
  make_blobs(rng, 10, 10, 0.5, X_test, y_test);

  auto model = svm_fit(X_train, y_train, 1.0, KernelConfig{});
  CHECK(model.pairs.size() == 6);
  for (const auto& p : model.pairs) CHECK(p.converged);

  CHECK(accuracy(svm_predict(model, X_test), y_test) >= 0.95);
  CHECK(accuracy(svm_predict(model, X_train), y_train) >= 0.95);

  SUBCASE("dual coefficients respect the box constraint") {
    for (const auto& p : model.pairs) {
      REQUIRE(p.dual_coef.size() ==
              static_cast<Eigen::Index>(p.sv_rows.size()));
      for (int i = 0; i < p.dual_coef.size(); ++i) {
        double alpha = std::abs(p.dual_coef[i]);  // dual_coef = alpha * y
        CHECK(alpha >= 0.0);
        CHECK(alpha <= 1.0 + 1e-8);
      }
    }
  }

  SUBCASE("model round-trips through its JSON container") {
    fs::path dir = fs::temp_directory_path() / "pb_svm";
    fs::create_directories(dir);
    auto path = (dir / "model.json").string();
    model.save(path);
    auto back = SVMModel::load(path);
    CHECK(back.C == model.C);
    CHECK(back.resolved_gamma == doctest::Approx(model.resolved_gamma));
    CHECK(back.kernel.degree == model.kernel.degree);
    auto p1 = svm_predict(model, X_test);
    auto p2 = svm_predict(back, X_test);
    CHECK(p1 == p2);
    fs::remove_all(dir);
  }
}

TEST_CASE("SMO reaches the brute-force dual optimum on a tiny problem") {
  // 6 points, 2 classes, 2D; fine grid over the feasible alphas is tractable.
  Eigen::MatrixXf X(6, 2);
  X << 1.0, 1.2, 1.5, 0.8, 2.0, 1.0, -1.0, -0.9, -1.4, -1.2, -0.8, -1.6;
  std::vector<PolypClass> y = {PolypClass::T1, PolypClass::T1, PolypClass::T1,
                               PolypClass::T2, PolypClass::T2, PolypClass::T2};
  double C = 10.0;
  KernelConfig cfg;
  cfg.degree = 2;
  cfg.gamma = 0.5;
  cfg.coef0 = 1.0;
  auto model = svm_fit(X, y, C, cfg);
  REQUIRE(model.pairs.size() == 1);
  const auto& pair = model.pairs[0];

  Eigen::VectorXd yv(6);
  yv << 1, 1, 1, -1, -1, -1;
  Eigen::MatrixXd K(6, 6);
  KernelConfig rcfg = cfg;
  rcfg.gamma = model.resolved_gamma > 0 ? model.resolved_gamma : cfg.gamma;
  for (int i = 0; i < 6; ++i) {
    Eigen::VectorXf xi = X.row(i).transpose();
    for (int j = 0; j < 6; ++j) {
      Eigen::VectorXf xj = X.row(j).transpose();
      K(i, j) = poly_kernel(xi, xj, rcfg);
    }
  }

  // Recover the full alpha vector from the sparse SV representation.
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(6);
  for (size_t s = 0; s < pair.train_indices.size(); ++s)
    alpha[pair.train_indices[s]] = std::abs(pair.dual_coef[s]);
  double smo_obj = dual_objective(K, yv, alpha);

  // Brute force: alpha on a grid, equality constraint enforced exactly by
  // solving for the last coordinate of each class group.
  double best = 0;
  int steps = 24;
  auto grid_val = [&](int s) { return C * s / steps; };
  for (int a0 = 0; a0 <= steps; ++a0)
    for (int a1 = 0; a1 <= steps; ++a1)
      for (int a3 = 0; a3 <= steps; ++a3)
        for (int a4 = 0; a4 <= steps; ++a4) {
          Eigen::VectorXd a(6);
          a << grid_val(a0), grid_val(a1), 0, grid_val(a3), grid_val(a4), 0;
          double pos = a[0] + a[1], neg = a[3] + a[4];
          // Balance with a2 or a5; skip infeasible configurations.
          if (pos <= neg) {
            a[2] = neg - pos;
            if (a[2] > C) continue;
          } else {
            a[5] = pos - neg;
            if (a[5] > C) continue;
          }
          best = std::min(best, dual_objective(K, yv, a));
        }

  // The SMO solution must be at least as good as the best grid point,
  // up to grid resolution.
  CHECK(smo_obj <= best + 1e-2 * C);
}

TEST_CASE("grid search evaluates the documented C grid") {
  CHECK(default_C_grid() == std::vector<double>{0.01, 0.1, 1, 10, 100, 1000});

  Rng rng(41);
  Eigen::MatrixXf X;
  std::vector<PolypClass> y;
  make_blobs(rng, 9, 8, 0.3, X, y);

  auto result = grid_search_C(X, y, default_C_grid(), 3, 17, KernelConfig{});
  REQUIRE(result.scores.size() == 6);
  for (size_t i = 0; i < result.scores.size(); ++i)
    CHECK(result.scores[i].first == default_C_grid()[i]);

  bool best_in_grid = false;
  double best_score = -1;
  for (const auto& [c, s] : result.scores) {
    best_in_grid |= c == result.best_C;
    best_score = std::max(best_score, s);
  }
  CHECK(best_in_grid);

  // Ties break toward the smallest C with the best score.
  for (const auto& [c, s] : result.scores)
    if (s == best_score) {
      CHECK(result.best_C == c);
      break;
    }
}

TEST_CASE("single-class input is rejected") {
  Eigen::MatrixXf X(3, 2);
  X.setRandom();
  std::vector<PolypClass> y(3, PolypClass::T1);
  CHECK_THROWS_AS(svm_fit(X, y, 1.0, KernelConfig{}), ConfigError);
}

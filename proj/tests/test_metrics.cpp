#include <doctest.h>

#include <nlohmann/json.hpp>

#include <filesystem>
#include <fstream>

#include "polybench/common.hpp"
#include "polybench/image.hpp"
#include "polybench/metrics.hpp"

using namespace polybench;
namespace fs = std::filesystem;

namespace {

// Independent counting implementation used as the oracle.
struct Oracle {
  double accuracy = 0, sensitivity = 0, precision = 0;
  Eigen::Matrix4d sens = Eigen::Matrix4d::Zero();
  Eigen::Matrix4d prec = Eigen::Matrix4d::Zero();
};

Oracle brute_force(const LabelPairSet& pairs) {
  Oracle o;
  double counts[4][4] = {};
  for (size_t i = 0; i < pairs.y_true.size(); ++i)
    counts[static_cast<int>(pairs.y_true[i])][static_cast<int>(pairs.y_pred[i])] += 1;

  double hits = 0, total = 0;
  for (int t = 0; t < 4; ++t)
    for (int p = 0; p < 4; ++p) {
      total += counts[t][p];
      if (t == p) hits += counts[t][p];
    }
  o.accuracy = total > 0 ? hits / total : 0;

  double sens_sum = 0, prec_sum = 0;
  int sens_n = 0, prec_n = 0;
  for (int t = 0; t < 4; ++t) {
    double row = counts[t][0] + counts[t][1] + counts[t][2] + counts[t][3];
    if (row > 0) {
      for (int p = 0; p < 4; ++p) o.sens(t, p) = counts[t][p] / row;
      sens_sum += counts[t][t] / row;
      ++sens_n;
    }
  }
  for (int p = 0; p < 4; ++p) {
    double col = counts[0][p] + counts[1][p] + counts[2][p] + counts[3][p];
    if (col > 0) {
      for (int t = 0; t < 4; ++t) o.prec(t, p) = counts[t][p] / col;
      prec_sum += counts[p][p] / col;
      ++prec_n;
    }
  }
  o.sensitivity = sens_n > 0 ? sens_sum / sens_n : 0;
  o.precision = prec_n > 0 ? prec_sum / prec_n : 0;
  return o;
}

LabelPairSet random_pairs(Rng& rng, int n) {
  LabelPairSet p;
  for (int i = 0; i < n; ++i) {
    p.y_true.push_back(static_cast<PolypClass>(rng.uniform_int(4)));
    p.y_pred.push_back(static_cast<PolypClass>(rng.uniform_int(4)));
  }
  return p;
}

}  // namespace

TEST_CASE("summary and pairwise metrics match a brute-force oracle exactly") {
  Rng rng(2024);
  for (int trial = 0; trial < 200; ++trial) {
    auto pairs = random_pairs(rng, 96);
    auto counts = confusion_counts(pairs);
    auto summary = summary_metrics(counts);
    auto mats = pairwise_matrices(counts);
    auto oracle = brute_force(pairs);

    CHECK(summary.accuracy == doctest::Approx(oracle.accuracy).epsilon(1e-13));
    CHECK(summary.sensitivity ==
          doctest::Approx(oracle.sensitivity).epsilon(1e-13));
    CHECK(summary.precision == doctest::Approx(oracle.precision).epsilon(1e-13));
    CHECK((mats.sensitivity - oracle.sens).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((mats.precision - oracle.prec).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("hand-computed example") {
  // counts: T1 {3 true: 2 right, 1 as T2}; T2 {2 true: both right};
  //         T3 {1 true, predicted T1}; T4 absent.
  LabelPairSet p;
  auto add = [&](PolypClass t, PolypClass pr) {
    p.y_true.push_back(t);
    p.y_pred.push_back(pr);
  };
  add(PolypClass::T1, PolypClass::T1);
  add(PolypClass::T1, PolypClass::T1);
  add(PolypClass::T1, PolypClass::T2);
  add(PolypClass::T2, PolypClass::T2);
  add(PolypClass::T2, PolypClass::T2);
  add(PolypClass::T3, PolypClass::T1);

  auto counts = confusion_counts(p);
  CHECK(counts(0, 0) == 2);
  CHECK(counts(0, 1) == 1);
  CHECK(counts(2, 0) == 1);

  auto s = summary_metrics(counts);
  CHECK(s.accuracy == doctest::Approx(4.0 / 6.0));
  // macro sensitivity over T1..T3 (T4 has no true samples): (2/3 + 1 + 0) / 3.
  CHECK(s.sensitivity == doctest::Approx((2.0 / 3.0 + 1.0 + 0.0) / 3.0));
  // macro precision over predicted T1, T2: (2/3 + 2/3) / 2.
  CHECK(s.precision == doctest::Approx(2.0 / 3.0));

  auto m = pairwise_matrices(counts);
  CHECK(m.sensitivity(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(m.sensitivity(2, 0) == doctest::Approx(1.0));
  CHECK(m.precision(0, 0) == doctest::Approx(2.0 / 3.0));
  CHECK(m.precision(0, 1) == doctest::Approx(1.0 / 3.0));
  REQUIRE(m.zero_true_classes.size() == 1);
  CHECK(m.zero_true_classes[0] == PolypClass::T4);
  REQUIRE(m.zero_predicted_classes.size() == 2);
}

TEST_CASE("metrics are invariant under sample permutation") {
  Rng rng(5);
  auto pairs = random_pairs(rng, 96);
  auto shuffled = pairs;
  std::vector<int> order(pairs.y_true.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
  rng.shuffle(order);
  for (size_t i = 0; i < order.size(); ++i) {
    shuffled.y_true[i] = pairs.y_true[order[i]];
    shuffled.y_pred[i] = pairs.y_pred[order[i]];
  }
  CHECK((confusion_counts(pairs).array() == confusion_counts(shuffled).array()).all());
}

TEST_CASE("relabeling permutes the matrices consistently") {
  Rng rng(6);
  auto pairs = random_pairs(rng, 96);
  auto swapped = pairs;  // swap classes T1 <-> T3 everywhere
  auto swap_cls = [](PolypClass c) {
    if (c == PolypClass::T1) return PolypClass::T3;
    if (c == PolypClass::T3) return PolypClass::T1;
    return c;
  };
  for (auto& c : swapped.y_true) c = swap_cls(c);
  for (auto& c : swapped.y_pred) c = swap_cls(c);

  auto a = pairwise_matrices(confusion_counts(pairs));
  auto b = pairwise_matrices(confusion_counts(swapped));
  Eigen::Matrix4d perm = Eigen::Matrix4d::Zero();
  perm(0, 2) = perm(2, 0) = perm(1, 1) = perm(3, 3) = 1;
  CHECK((perm * a.sensitivity * perm - b.sensitivity).cwiseAbs().maxCoeff() <
        1e-12);
  CHECK((perm * a.precision * perm - b.precision).cwiseAbs().maxCoeff() < 1e-12);

  // Macro scalars are permutation-invariant.
  auto sa = summary_metrics(confusion_counts(pairs));
  auto sb = summary_metrics(confusion_counts(swapped));
  CHECK(sa.sensitivity == doctest::Approx(sb.sensitivity).epsilon(1e-13));
  CHECK(sa.precision == doctest::Approx(sb.precision).epsilon(1e-13));
}

TEST_CASE("evaluate round-trips through JSON") {
  Rng rng(8);
  auto report = evaluate(random_pairs(rng, 96));
  report.val_accuracy = 0.75;
  nlohmann::json j;
  report_to_json(report, j);
  auto back = report_from_json(j);
  CHECK(back == report);

  // NaN val_accuracy survives as "missing".
  report.val_accuracy = std::nan("");
  report_to_json(report, j);
  auto back2 = report_from_json(j);
  CHECK(std::isnan(back2.val_accuracy));
}

TEST_CASE("aggregation pools counts and averages scalars") {
  LabelPairSet perfect;
  LabelPairSet wrong;
  for (int i = 0; i < 4; ++i) {
    perfect.y_true.push_back(static_cast<PolypClass>(i));
    perfect.y_pred.push_back(static_cast<PolypClass>(i));
    wrong.y_true.push_back(static_cast<PolypClass>(i));
    wrong.y_pred.push_back(static_cast<PolypClass>((i + 1) % 4));
  }
  auto agg = aggregate_folds({evaluate(perfect), evaluate(wrong)});
  CHECK(agg.mean_accuracy == doctest::Approx(0.5));
  CHECK(agg.pooled.n_samples == 8);
  CHECK(agg.pooled.accuracy == doctest::Approx(0.5));
  CHECK(agg.per_fold.size() == 2);
  // Mean matrix = average of a diagonal and a cyclic permutation matrix.
  CHECK(agg.mean_sensitivity_matrix(0, 0) == doctest::Approx(0.5));
  CHECK(agg.mean_sensitivity_matrix(0, 1) == doctest::Approx(0.5));
}

TEST_CASE("render_report emits table, metrics.json and heatmaps") {
  fs::path dir = fs::temp_directory_path() / "pb_report";
  fs::remove_all(dir);

  Rng rng(12);
  auto r = evaluate(random_pairs(rng, 96));
  auto agg = aggregate_folds({r});
  auto with_val = agg;
  with_val.mean_val_accuracy = 0.625;

  render_report({{"svm", agg}, {"resnet_scratch", with_val}}, dir.string());
  CHECK(fs::exists(dir / "metrics.json"));
  CHECK(fs::exists(dir / "table.csv"));
  CHECK(fs::exists(dir / "svm_sensitivity.png"));
  CHECK(fs::exists(dir / "resnet_scratch_precision.png"));

  std::ifstream in(dir / "table.csv");
  std::string csv((std::istreambuf_iterator<char>(in)),
                  std::istreambuf_iterator<char>());
  CHECK(csv.find("Validation Acc.") != std::string::npos);
  CHECK(csv.find("Test Acc.") != std::string::npos);
  CHECK(csv.find("N/A") != std::string::npos);
  CHECK(csv.find("62.50%") != std::string::npos);

  auto j = nlohmann::json::parse(std::ifstream(dir / "metrics.json"));
  CHECK(j["svm"]["mean_val_accuracy"].is_null());
  CHECK(j["resnet_scratch"]["mean_val_accuracy"].get<double>() ==
        doctest::Approx(0.625));

  // Heatmaps decode as 8-bit RGB PNGs.
  auto png = read_png((dir / "svm_sensitivity.png").string());
  CHECK(png.rows() > 0);
  fs::remove_all(dir);
}

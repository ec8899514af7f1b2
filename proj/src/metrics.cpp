#include "polybench/metrics.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include <nlohmann/json.hpp>

#include "polybench/common.hpp"
#include "polybench/dataset.hpp"
#include "polybench/image.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace polybench {

ConfusionCounts confusion_counts(const LabelPairSet& pairs) {
  if (pairs.y_true.empty()) throw ConfigError("empty label set");
  if (pairs.y_true.size() != pairs.y_pred.size())
    throw ConfigError("label length mismatch: " +
                      std::to_string(pairs.y_true.size()) + " vs " +
                      std::to_string(pairs.y_pred.size()));
  ConfusionCounts counts = ConfusionCounts::Zero();
  for (size_t i = 0; i < pairs.y_true.size(); ++i) {
    int t = static_cast<int>(pairs.y_true[i]);
    int p = static_cast<int>(pairs.y_pred[i]);
    if (t < 0 || t >= 4 || p < 0 || p >= 4)
      throw ConfigError("label outside T1..T4 at index " + std::to_string(i));
    counts(t, p) += 1;
  }
  return counts;
}

PairwiseMatrices pairwise_matrices(const ConfusionCounts& counts) {
  PairwiseMatrices out;
  out.sensitivity.setZero();
  out.precision.setZero();
  for (int t = 0; t < 4; ++t) {
    int64_t row_total = counts.row(t).sum();
    if (row_total == 0) {
      out.zero_true_classes.push_back(static_cast<PolypClass>(t));
    } else {
      for (int p = 0; p < 4; ++p)
        out.sensitivity(t, p) =
            static_cast<double>(counts(t, p)) / static_cast<double>(row_total);
    }
  }
  for (int p = 0; p < 4; ++p) {
    int64_t col_total = counts.col(p).sum();
    if (col_total == 0) {
      out.zero_predicted_classes.push_back(static_cast<PolypClass>(p));
    } else {
      for (int t = 0; t < 4; ++t)
        out.precision(t, p) =
            static_cast<double>(counts(t, p)) / static_cast<double>(col_total);
    }
  }
  return out;
}

SummaryMetrics summary_metrics(const ConfusionCounts& counts) {
  int64_t total = counts.sum();
  if (total == 0) throw ConfigError("zero total count");
  SummaryMetrics m;
  m.accuracy = static_cast<double>(counts.trace()) / static_cast<double>(total);

  double recall_sum = 0, prec_sum = 0;
  int recall_n = 0, prec_n = 0;
  for (int c = 0; c < 4; ++c) {
    int64_t row = counts.row(c).sum();
    if (row > 0) {
      recall_sum += static_cast<double>(counts(c, c)) / static_cast<double>(row);
      ++recall_n;
    }
    int64_t col = counts.col(c).sum();
    if (col > 0) {
      prec_sum += static_cast<double>(counts(c, c)) / static_cast<double>(col);
      ++prec_n;
    }
  }
  m.sensitivity = recall_n ? recall_sum / recall_n : 0.0;
  m.precision = prec_n ? prec_sum / prec_n : 0.0;
  return m;
}

namespace {

bool nan_or_equal(double a, double b) {
  return (std::isnan(a) && std::isnan(b)) || a == b;
}

}  // namespace

bool EvalReport::operator==(const EvalReport& o) const {
  return accuracy == o.accuracy && sensitivity == o.sensitivity &&
         precision == o.precision && sensitivity_matrix == o.sensitivity_matrix &&
         precision_matrix == o.precision_matrix && counts == o.counts &&
         n_samples == o.n_samples && nan_or_equal(val_accuracy, o.val_accuracy);
}

EvalReport evaluate(const LabelPairSet& pairs) {
  EvalReport r;
  r.counts = confusion_counts(pairs);
  r.n_samples = r.counts.sum();
  auto pw = pairwise_matrices(r.counts);
  r.sensitivity_matrix = pw.sensitivity;
  r.precision_matrix = pw.precision;
  auto s = summary_metrics(r.counts);
  r.accuracy = s.accuracy;
  r.sensitivity = s.sensitivity;
  r.precision = s.precision;
  return r;
}

AggregateReport aggregate_folds(const std::vector<EvalReport>& reports) {
  if (reports.empty()) throw ConfigError("no reports to aggregate");
  AggregateReport agg;
  agg.per_fold = reports;

  ConfusionCounts total = ConfusionCounts::Zero();
  double acc = 0, sens = 0, prec = 0, val = 0;
  int val_n = 0;
  agg.mean_sensitivity_matrix.setZero();
  agg.mean_precision_matrix.setZero();
  for (const auto& r : reports) {
    total += r.counts;
    acc += r.accuracy;
    sens += r.sensitivity;
    prec += r.precision;
    if (!std::isnan(r.val_accuracy)) {
      val += r.val_accuracy;
      ++val_n;
    }
    agg.mean_sensitivity_matrix += r.sensitivity_matrix;
    agg.mean_precision_matrix += r.precision_matrix;
  }
  double n = static_cast<double>(reports.size());
  agg.mean_accuracy = acc / n;
  agg.mean_sensitivity = sens / n;
  agg.mean_precision = prec / n;
  if (val_n) agg.mean_val_accuracy = val / val_n;
  agg.mean_sensitivity_matrix /= n;
  agg.mean_precision_matrix /= n;

  agg.pooled.counts = total;
  agg.pooled.n_samples = total.sum();
  auto pw = pairwise_matrices(total);
  agg.pooled.sensitivity_matrix = pw.sensitivity;
  agg.pooled.precision_matrix = pw.precision;
  auto s = summary_metrics(total);
  agg.pooled.accuracy = s.accuracy;
  agg.pooled.sensitivity = s.sensitivity;
  agg.pooled.precision = s.precision;
  agg.pooled.val_accuracy = agg.mean_val_accuracy;
  return agg;
}

namespace {

json matrix_to_json(const Eigen::Matrix4d& m) {
  json rows = json::array();
  for (int r = 0; r < 4; ++r) {
    json row = json::array();
    for (int c = 0; c < 4; ++c) row.push_back(m(r, c));
    rows.push_back(row);
  }
  return rows;
}

Eigen::Matrix4d matrix_from_json(const json& j) {
  Eigen::Matrix4d m;
  for (int r = 0; r < 4; ++r)
    for (int c = 0; c < 4; ++c) m(r, c) = j.at(r).at(c).get<double>();
  return m;
}

}  // namespace

void report_to_json(const EvalReport& r, json& j) {
  j["accuracy"] = r.accuracy;
  j["sensitivity"] = r.sensitivity;
  j["precision"] = r.precision;
  j["sensitivity_matrix"] = matrix_to_json(r.sensitivity_matrix);
  j["precision_matrix"] = matrix_to_json(r.precision_matrix);
  json counts = json::array();
  for (int t = 0; t < 4; ++t) {
    json row = json::array();
    for (int p = 0; p < 4; ++p) row.push_back(r.counts(t, p));
    counts.push_back(row);
  }
  j["counts"] = counts;
  j["n_samples"] = r.n_samples;
  if (std::isnan(r.val_accuracy))
    j["val_accuracy"] = nullptr;
  else
    j["val_accuracy"] = r.val_accuracy;
}

EvalReport report_from_json(const json& j) {
  EvalReport r;
  r.accuracy = j.at("accuracy").get<double>();
  r.sensitivity = j.at("sensitivity").get<double>();
  r.precision = j.at("precision").get<double>();
  r.sensitivity_matrix = matrix_from_json(j.at("sensitivity_matrix"));
  r.precision_matrix = matrix_from_json(j.at("precision_matrix"));
  for (int t = 0; t < 4; ++t)
    for (int p = 0; p < 4; ++p)
      r.counts(t, p) = j.at("counts").at(t).at(p).get<int64_t>();
  r.n_samples = j.at("n_samples").get<int64_t>();
  if (!j.at("val_accuracy").is_null())
    r.val_accuracy = j.at("val_accuracy").get<double>();
  return r;
}

namespace {

// 5x7 glyphs for heatmap cell annotations.
const uint8_t* glyph(char c) {
  static const uint8_t digits[12][7] = {
      {0x0e, 0x11, 0x13, 0x15, 0x19, 0x11, 0x0e},  // 0
      {0x04, 0x0c, 0x04, 0x04, 0x04, 0x04, 0x0e},  // 1
      {0x0e, 0x11, 0x01, 0x02, 0x04, 0x08, 0x1f},  // 2
      {0x1f, 0x02, 0x04, 0x02, 0x01, 0x11, 0x0e},  // 3
      {0x02, 0x06, 0x0a, 0x12, 0x1f, 0x02, 0x02},  // 4
      {0x1f, 0x10, 0x1e, 0x01, 0x01, 0x11, 0x0e},  // 5
      {0x06, 0x08, 0x10, 0x1e, 0x11, 0x11, 0x0e},  // 6
      {0x1f, 0x01, 0x02, 0x04, 0x08, 0x08, 0x08},  // 7
      {0x0e, 0x11, 0x11, 0x0e, 0x11, 0x11, 0x0e},  // 8
      {0x0e, 0x11, 0x11, 0x0f, 0x01, 0x02, 0x0c},  // 9
      {0x00, 0x00, 0x00, 0x00, 0x00, 0x0c, 0x0c},  // .
      {0x00, 0x00, 0x00, 0x00, 0x00, 0x00, 0x00},  // space
  };
  if (c >= '0' && c <= '9') return digits[c - '0'];
  if (c == '.') return digits[10];
  return digits[11];
}

void draw_text(TexturalImage& img, int x, int y, const std::string& text,
               uint8_t value, int px = 2) {
  for (char c : text) {
    const uint8_t* g = glyph(c);
    for (int gy = 0; gy < 7; ++gy)
      for (int gx = 0; gx < 5; ++gx)
        if (g[gy] & (1 << (4 - gx)))
          for (int sy = 0; sy < px; ++sy)
            for (int sx = 0; sx < px; ++sx) {
              int yy = y + gy * px + sy, xx = x + gx * px + sx;
              if (yy >= 0 && yy < img.rows() && xx >= 0 && xx < img.cols())
                for (int ch = 0; ch < 3; ++ch) img.ch[ch](yy, xx) = value;
            }
    x += 6 * px;
  }
}

std::string format2(double v) {
  std::ostringstream ss;
  ss << std::fixed << std::setprecision(2) << v;
  return ss.str();
}

}  // namespace

void write_heatmap_png(const Eigen::Matrix4d& matrix, const std::string& title,
                       const std::string& path) {
  const int cell = 52, margin = 16;
  const int size = margin * 2 + cell * 4;
  TexturalImage img = TexturalImage::zero(size, size);
  for (auto& p : img.ch) p.setConstant(255);

  for (int r = 0; r < 4; ++r) {
    for (int c = 0; c < 4; ++c) {
      double v = std::clamp(matrix(r, c), 0.0, 1.0);
      // White-to-blue ramp.
      uint8_t red = static_cast<uint8_t>(std::lround(255 - 205 * v));
      uint8_t green = static_cast<uint8_t>(std::lround(255 - 155 * v));
      uint8_t blue = static_cast<uint8_t>(std::lround(255 - 55 * v));
      int y0 = margin + r * cell, x0 = margin + c * cell;
      for (int y = y0; y < y0 + cell; ++y)
        for (int x = x0; x < x0 + cell; ++x) {
          img.ch[0](y, x) = red;
          img.ch[1](y, x) = green;
          img.ch[2](y, x) = blue;
        }
      std::string label = format2(matrix(r, c));
      uint8_t ink = v > 0.6 ? 255 : 16;
      draw_text(img, x0 + 2, y0 + cell / 2 - 7, label, ink);
    }
  }
  (void)title;
  write_png(path, img);
}

void render_report(const std::map<std::string, AggregateReport>& by_classifier,
                   const std::string& out_dir) {
  fs::create_directories(out_dir);

  json j;
  for (const auto& [name, agg] : by_classifier) {
    json cj;
    cj["mean_accuracy"] = agg.mean_accuracy;
    cj["mean_sensitivity"] = agg.mean_sensitivity;
    cj["mean_precision"] = agg.mean_precision;
    if (std::isnan(agg.mean_val_accuracy))
      cj["mean_val_accuracy"] = nullptr;
    else
      cj["mean_val_accuracy"] = agg.mean_val_accuracy;
    json pooled;
    report_to_json(agg.pooled, pooled);
    cj["pooled"] = pooled;
    cj["mean_sensitivity_matrix"] = matrix_to_json(agg.mean_sensitivity_matrix);
    cj["mean_precision_matrix"] = matrix_to_json(agg.mean_precision_matrix);
    cj["folds"] = json::array();
    for (const auto& fr : agg.per_fold) {
      json fj;
      report_to_json(fr, fj);
      cj["folds"].push_back(fj);
    }
    j[name] = cj;
  }
  atomic_write_file((fs::path(out_dir) / "metrics.json").string(),
                    j.dump(2) + "\n");

  auto pct = [](double v) -> std::string {
    if (std::isnan(v)) return "N/A";
    std::ostringstream ss;
    ss << std::fixed << std::setprecision(2) << v * 100.0 << "%";
    return ss.str();
  };
  std::ostringstream csv;
  csv << "metric";
  for (const auto& [name, agg] : by_classifier) csv << ',' << name;
  csv << "\n";
  const char* row_names[] = {"Validation Acc.", "Test Acc.", "Sensitivity",
                             "Precision"};
  for (int row = 0; row < 4; ++row) {
    csv << row_names[row];
    for (const auto& [name, agg] : by_classifier) {
      double v = row == 0   ? agg.mean_val_accuracy
                 : row == 1 ? agg.mean_accuracy
                 : row == 2 ? agg.mean_sensitivity
                            : agg.mean_precision;
      csv << ',' << pct(v);
    }
    csv << "\n";
  }
  atomic_write_file((fs::path(out_dir) / "table.csv").string(), csv.str());

  for (const auto& [name, agg] : by_classifier) {
    write_heatmap_png(agg.pooled.sensitivity_matrix, name + " sensitivity",
                      (fs::path(out_dir) / (name + "_sensitivity.png")).string());
    write_heatmap_png(agg.pooled.precision_matrix, name + " precision",
                      (fs::path(out_dir) / (name + "_precision.png")).string());
  }
}

}  // namespace polybench

#include "polybench/svm.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "polybench/common.hpp"
#include "polybench/dataset.hpp"

using json = nlohmann::json;

namespace polybench {

Eigen::VectorXf flatten_features(const TexturalImage& img) {
  if (!img.is_standard())
    throw ConfigError("flatten_features: expected 224x224 image");
  Eigen::VectorXf v(kFlatFeatures);
  int k = 0;
  for (int y = 0; y < kImageSize; ++y)
    for (int x = 0; x < kImageSize; ++x)
      for (int c = 0; c < 3; ++c)
        v[k++] = static_cast<float>(img.ch[c](y, x)) / 255.0f;
  return v;
}

double poly_kernel(const Eigen::VectorXf& x, const Eigen::VectorXf& y,
                   const KernelConfig& cfg) {
  if (x.size() != y.size())
    throw ConfigError("poly_kernel: length mismatch " +
                      std::to_string(x.size()) + " vs " +
                      std::to_string(y.size()));
  double dot = x.cast<double>().dot(y.cast<double>());
  return std::pow(cfg.gamma * dot + cfg.coef0, cfg.degree);
}

namespace {

double resolve_gamma(const Eigen::MatrixXf& X, const KernelConfig& cfg) {
  if (cfg.gamma > 0) return cfg.gamma;
  double mean = X.cast<double>().mean();
  double var = (X.cast<double>().array() - mean).square().mean();
  if (var <= 0) var = 1.0;
  return 1.0 / (X.cols() * var);
}

// SMO with maximal-violating-pair working-set selection on the dual
//   min 1/2 a^T Q a - e^T a,  0 <= a <= C,  y^T a = 0,  Q_ij = y_i y_j K_ij.
struct SmoResult {
  Eigen::VectorXd alpha;
  double bias = 0;
  int iterations = 0;
  bool converged = false;
};

SmoResult smo_solve(const Eigen::MatrixXd& K, const std::vector<int>& y,
                    double C, const SmoOptions& opts) {
  const int n = static_cast<int>(y.size());
  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd grad = Eigen::VectorXd::Constant(n, -1.0);

  SmoResult res;
  int it = 0;
  for (; it < opts.max_iterations; ++it) {
    // i: argmax -y_i grad_i over I_up, j: argmin over I_low.
    int best_i = -1, best_j = -1;
    double gmax = -std::numeric_limits<double>::infinity();
    double gmin = std::numeric_limits<double>::infinity();
    for (int t = 0; t < n; ++t) {
      bool up = (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0);
      bool low = (y[t] == 1 && alpha[t] > 0) || (y[t] == -1 && alpha[t] < C);
      double v = -y[t] * grad[t];
      if (up && v > gmax) {
        gmax = v;
        best_i = t;
      }
      if (low && v < gmin) {
        gmin = v;
        best_j = t;
      }
    }
    if (best_i < 0 || best_j < 0 || gmax - gmin < opts.kkt_tol) {
      res.converged = true;
      break;
    }
    int i = best_i, j = best_j;

    double quad = K(i, i) + K(j, j) - 2.0 * y[i] * y[j] * K(i, j);
    if (quad <= 0) quad = 1e-12;
    double delta = (gmax - gmin) / quad;

    // Step in alpha_i along y_i, alpha_j along -y_j, clipped to the box.
    double ai_old = alpha[i], aj_old = alpha[j];
    double step = delta;
    if (y[i] == 1)
      step = std::min(step, C - ai_old);
    else
      step = std::min(step, ai_old);
    if (y[j] == 1)
      step = std::min(step, aj_old);
    else
      step = std::min(step, C - aj_old);

    alpha[i] += y[i] * step;
    alpha[j] -= y[j] * step;

    double di = alpha[i] - ai_old;  // signed changes; grad_t += Q_ti di + Q_tj dj
    double dj = alpha[j] - aj_old;
    for (int t = 0; t < n; ++t)
      grad[t] += y[t] * (y[i] * K(t, i) * di + y[j] * K(t, j) * dj);
  }
  res.iterations = it;

  Eigen::VectorXd yd(n);
  for (int t = 0; t < n; ++t) yd[t] = y[t];
  Eigen::VectorXd f = K * (alpha.array() * yd.array()).matrix();

  // Bias from free SVs, else the midpoint of the feasible interval.
  double sum = 0;
  int nfree = 0;
  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  for (int t = 0; t < n; ++t) {
    double e = y[t] - f[t];  // bias that would put t exactly on the margin
    bool at_lower = alpha[t] <= 1e-12;
    bool at_upper = alpha[t] >= C - 1e-12;
    if (!at_lower && !at_upper) {
      sum += e;
      ++nfree;
    } else if ((at_lower && y[t] == -1) || (at_upper && y[t] == 1)) {
      ub = std::min(ub, e);
    } else {
      lb = std::max(lb, e);
    }
  }
  if (nfree > 0)
    res.bias = sum / nfree;
  else if (std::isfinite(ub) && std::isfinite(lb))
    res.bias = (ub + lb) / 2.0;
  else
    res.bias = 0.0;

  res.alpha = alpha;
  return res;
}

Eigen::MatrixXd gram_matrix(const Eigen::MatrixXf& A, const Eigen::MatrixXf& B,
                            double gamma, double coef0, int degree) {
  Eigen::MatrixXd dots = (A * B.transpose()).cast<double>();
  return ((gamma * dots.array() + coef0).pow(degree)).matrix();
}

}  // namespace

SVMModel svm_fit(const Eigen::MatrixXf& X, const std::vector<PolypClass>& y,
                 double C, const KernelConfig& cfg, const SmoOptions& opts) {
  if (C <= 0) throw ConfigError("C must be positive");
  if (static_cast<size_t>(X.rows()) != y.size())
    throw ConfigError("svm_fit: rows/labels mismatch");

  std::vector<PolypClass> classes;
  for (auto c : y)
    if (std::find(classes.begin(), classes.end(), c) == classes.end())
      classes.push_back(c);
  std::sort(classes.begin(), classes.end());
  if (classes.size() < 2) throw ConfigError("svm_fit: single-class input");

  SVMModel model;
  model.kernel = cfg;
  model.C = C;
  model.classes = classes;
  model.resolved_gamma = resolve_gamma(X, cfg);

  KernelConfig rcfg = cfg;
  rcfg.gamma = model.resolved_gamma;

  Eigen::MatrixXd K = gram_matrix(X, X, rcfg.gamma, rcfg.coef0, rcfg.degree);

  std::map<int, int> sv_row_of_train;  // training row -> support_vectors row
  std::vector<int> sv_train_rows;

  for (size_t a = 0; a < classes.size(); ++a) {
    for (size_t b = a + 1; b < classes.size(); ++b) {
      std::vector<int> idx;
      std::vector<int> sign;
      for (int r = 0; r < X.rows(); ++r) {
        if (y[r] == classes[a]) {
          idx.push_back(r);
          sign.push_back(1);
        } else if (y[r] == classes[b]) {
          idx.push_back(r);
          sign.push_back(-1);
        }
      }
      const int m = static_cast<int>(idx.size());
      Eigen::MatrixXd Kp(m, m);
      for (int r = 0; r < m; ++r)
        for (int c = 0; c < m; ++c) Kp(r, c) = K(idx[r], idx[c]);

      SmoResult sol = smo_solve(Kp, sign, C, opts);

      PairClassifier pc;
      pc.class_a = static_cast<int>(classes[a]);
      pc.class_b = static_cast<int>(classes[b]);
      pc.bias = sol.bias;
      pc.iterations = sol.iterations;
      pc.converged = sol.converged;

      std::vector<double> coefs;
      for (int r = 0; r < m; ++r) {
        if (sol.alpha[r] > 1e-10) {
          int train_row = idx[r];
          auto [pos, inserted] =
              sv_row_of_train.try_emplace(train_row, (int)sv_train_rows.size());
          if (inserted) sv_train_rows.push_back(train_row);
          pc.sv_rows.push_back(pos->second);
          pc.train_indices.push_back(train_row);
          coefs.push_back(sol.alpha[r] * sign[r]);
        }
      }
      pc.dual_coef = Eigen::Map<Eigen::VectorXd>(coefs.data(), coefs.size());
      model.pairs.push_back(std::move(pc));
    }
  }

  model.support_vectors.resize(sv_train_rows.size(), X.cols());
  for (size_t r = 0; r < sv_train_rows.size(); ++r)
    model.support_vectors.row(r) = X.row(sv_train_rows[r]);
  return model;
}

std::vector<PolypClass> svm_predict(const SVMModel& model,
                                    const Eigen::MatrixXf& X) {
  if (X.rows() == 0) return {};
  if (X.cols() != model.support_vectors.cols() && model.support_vectors.rows() > 0)
    throw ConfigError("svm_predict: feature dimension mismatch");

  Eigen::MatrixXd Kt =
      gram_matrix(X, model.support_vectors, model.resolved_gamma,
                  model.kernel.coef0, model.kernel.degree);

  std::vector<PolypClass> out(X.rows());
  for (int r = 0; r < X.rows(); ++r) {
    std::array<int, kNumClasses> votes{};
    std::array<double, kNumClasses> magnitude{};
    for (const auto& pc : model.pairs) {
      double d = pc.bias;
      for (size_t s = 0; s < pc.sv_rows.size(); ++s)
        d += pc.dual_coef[s] * Kt(r, pc.sv_rows[s]);
      int winner = d >= 0 ? pc.class_a : pc.class_b;
      votes[winner] += 1;
      magnitude[pc.class_a] += d;
      magnitude[pc.class_b] -= d;
    }
    int best = 0;
    for (int c = 1; c < kNumClasses; ++c) {
      if (votes[c] > votes[best] ||
          (votes[c] == votes[best] && magnitude[c] > magnitude[best]))
        best = c;
    }
    out[r] = static_cast<PolypClass>(best);
  }
  return out;
}

GridSearchResult grid_search_C(const Eigen::MatrixXf& X,
                               const std::vector<PolypClass>& y,
                               const std::vector<double>& grid, int folds_inner,
                               uint64_t seed, const KernelConfig& cfg,
                               const SmoOptions& opts) {
  if (grid.empty()) throw ConfigError("empty C grid");
  if (folds_inner < 2) throw ConfigError("need at least 2 inner folds");

  // Stratified assignment of rows to inner folds, seeded.
  std::vector<int> fold_of(y.size(), 0);
  for (int c = 0; c < kNumClasses; ++c) {
    std::vector<int> rows;
    for (size_t r = 0; r < y.size(); ++r)
      if (static_cast<int>(y[r]) == c) rows.push_back((int)r);
    Rng rng(stable_hash64(seed, std::string("inner_cv/") +
                                    class_code(static_cast<PolypClass>(c))));
    rng.shuffle(rows);
    for (size_t i = 0; i < rows.size(); ++i)
      fold_of[rows[i]] = static_cast<int>(i % folds_inner);
  }

  GridSearchResult res;
  double best_score = -1;
  for (double C : grid) {
    double acc_sum = 0;
    int acc_n = 0;
    for (int f = 0; f < folds_inner; ++f) {
      std::vector<int> tr, te;
      for (size_t r = 0; r < y.size(); ++r)
        (fold_of[r] == f ? te : tr).push_back((int)r);
      if (te.empty() || tr.empty()) continue;

      Eigen::MatrixXf Xtr((int)tr.size(), X.cols()), Xte((int)te.size(), X.cols());
      std::vector<PolypClass> ytr, yte;
      for (size_t i = 0; i < tr.size(); ++i) {
        Xtr.row((int)i) = X.row(tr[i]);
        ytr.push_back(y[tr[i]]);
      }
      for (size_t i = 0; i < te.size(); ++i) {
        Xte.row((int)i) = X.row(te[i]);
        yte.push_back(y[te[i]]);
      }
      SVMModel m = svm_fit(Xtr, ytr, C, cfg, opts);
      auto pred = svm_predict(m, Xte);
      int hit = 0;
      for (size_t i = 0; i < yte.size(); ++i)
        if (pred[i] == yte[i]) ++hit;
      acc_sum += static_cast<double>(hit) / yte.size();
      ++acc_n;
    }
    double score = acc_n ? acc_sum / acc_n : 0.0;
    res.scores.emplace_back(C, score);
    if (score > best_score + 1e-12) {  // strict improvement; ties keep smaller C
      best_score = score;
      res.best_C = C;
    }
  }
  return res;
}

namespace {

const char kB64[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";

std::string b64_encode(const uint8_t* data, size_t n) {
  std::string out;
  out.reserve((n + 2) / 3 * 4);
  for (size_t i = 0; i < n; i += 3) {
    uint32_t v = data[i] << 16;
    if (i + 1 < n) v |= data[i + 1] << 8;
    if (i + 2 < n) v |= data[i + 2];
    out.push_back(kB64[(v >> 18) & 63]);
    out.push_back(kB64[(v >> 12) & 63]);
    out.push_back(i + 1 < n ? kB64[(v >> 6) & 63] : '=');
    out.push_back(i + 2 < n ? kB64[v & 63] : '=');
  }
  return out;
}

std::vector<uint8_t> b64_decode(const std::string& s) {
  auto val = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<uint8_t> out;
  int buf = 0, bits = 0;
  for (char c : s) {
    if (c == '=') break;
    int v = val(c);
    if (v < 0) throw IoError("invalid base64");
    buf = (buf << 6) | v;
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<uint8_t>((buf >> bits) & 0xff));
    }
  }
  return out;
}

}  // namespace

void SVMModel::save(const std::string& path) const {
  json j;
  j["kernel"] = {{"kind", "polynomial"},
                 {"degree", kernel.degree},
                 {"gamma", kernel.gamma},
                 {"coef0", kernel.coef0}};
  j["resolved_gamma"] = resolved_gamma;
  j["C"] = C;
  json cls = json::array();
  for (auto c : classes) cls.push_back(class_code(c));
  j["classes"] = cls;
  j["feature_norm"] = feature_norm;

  // Support vectors are [0,1] floats; serialized as little-endian float32.
  const auto& sv = support_vectors;
  j["support_vectors"] = {
      {"rows", sv.rows()},
      {"cols", sv.cols()},
      {"dtype", "f32le"},
      {"data", b64_encode(reinterpret_cast<const uint8_t*>(sv.data()),
                          sizeof(float) * sv.size())}};

  j["pairs"] = json::array();
  for (const auto& pc : pairs) {
    std::vector<double> coefs(pc.dual_coef.data(),
                              pc.dual_coef.data() + pc.dual_coef.size());
    j["pairs"].push_back({{"class_a", pc.class_a},
                          {"class_b", pc.class_b},
                          {"sv_rows", pc.sv_rows},
                          {"train_indices", pc.train_indices},
                          {"dual_coef", coefs},
                          {"bias", pc.bias},
                          {"iterations", pc.iterations},
                          {"converged", pc.converged}});
  }
  atomic_write_file(path, j.dump() + "\n");
}

SVMModel SVMModel::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open model: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed SVM model " + path + ": " + e.what());
  }
  SVMModel m;
  m.kernel.degree = j.at("kernel").at("degree").get<int>();
  m.kernel.gamma = j.at("kernel").at("gamma").get<double>();
  m.kernel.coef0 = j.at("kernel").at("coef0").get<double>();
  m.resolved_gamma = j.at("resolved_gamma").get<double>();
  m.C = j.at("C").get<double>();
  for (const auto& c : j.at("classes"))
    m.classes.push_back(class_from_code(c.get<std::string>()));
  m.feature_norm = j.at("feature_norm").get<std::string>();

  const auto& svj = j.at("support_vectors");
  int rows = svj.at("rows").get<int>();
  int cols = svj.at("cols").get<int>();
  auto bytes = b64_decode(svj.at("data").get<std::string>());
  if (bytes.size() != sizeof(float) * static_cast<size_t>(rows) * cols)
    throw IoError("support vector payload size mismatch in " + path);
  m.support_vectors.resize(rows, cols);
  std::memcpy(m.support_vectors.data(), bytes.data(), bytes.size());

  for (const auto& pj : j.at("pairs")) {
    PairClassifier pc;
    pc.class_a = pj.at("class_a").get<int>();
    pc.class_b = pj.at("class_b").get<int>();
    pc.sv_rows = pj.at("sv_rows").get<std::vector<int>>();
    pc.train_indices = pj.at("train_indices").get<std::vector<int>>();
    auto coefs = pj.at("dual_coef").get<std::vector<double>>();
    pc.dual_coef = Eigen::Map<Eigen::VectorXd>(coefs.data(), coefs.size());
    pc.bias = pj.at("bias").get<double>();
    pc.iterations = pj.at("iterations").get<int>();
    pc.converged = pj.at("converged").get<bool>();
    m.pairs.push_back(std::move(pc));
  }
  return m;
}

}  // namespace polybench

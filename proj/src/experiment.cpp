#include "polybench/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "polybench/sha256.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace polybench {

namespace {

std::string join_csv(const std::vector<std::string>& v) {
  std::string out;
  for (size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + v[i];
  return out;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string tok;
  while (std::getline(ss, tok, ','))
    if (!tok.empty()) out.push_back(tok);
  return out;
}

std::string join_doubles(const std::vector<double>& v) {
  std::ostringstream ss;
  for (size_t i = 0; i < v.size(); ++i) ss << (i ? "," : "") << v[i];
  return ss.str();
}

std::vector<double> split_doubles(const std::string& s) {
  std::vector<double> out;
  for (const auto& tok : split_csv(s)) out.push_back(std::stod(tok));
  return out;
}

}  // namespace

void ExperimentConfig::apply_quick_profile() {
  quick = true;
  fold_begin = 0;
  fold_end = 1;
  scratch_cfg.max_epochs = 6;
  scratch_cfg.patience = 6;
  pretrained_cfg.max_epochs = 6;
  pretrained_cfg.patience = 6;
  // The paper-rate fine-tune schedule cannot move a fresh head in 6 epochs;
  // the quick profile trades its conservatism for a faster rate.
  pretrained_cfg.learning_rate = 0.001;
  proxy_cfg.epochs = 16;
  proxy_cfg.images_per_class = 64;
}

KvFile ExperimentConfig::to_kv() const {
  KvFile kv;
  kv.set("master_seed", std::to_string(master_seed));
  kv.set("difficulty", difficulty_name(difficulty));
  kv.set("fold_mode", fold_mode_name(fold_mode));
  kv.set("classifiers", join_csv(classifiers));
  kv.set("svm.kernel.degree", std::to_string(kernel.degree));
  kv.set("svm.kernel.gamma", std::to_string(kernel.gamma));
  kv.set("svm.kernel.coef0", std::to_string(kernel.coef0));
  kv.set("svm.c_grid", join_doubles(c_grid));
  kv.set("svm.inner_folds", std::to_string(inner_folds));
  auto put_cnn = [&](const char* prefix, const CNNConfig& c) {
    std::string p(prefix);
    kv.set(p + ".learning_rate", std::to_string(c.learning_rate));
    kv.set(p + ".max_epochs", std::to_string(c.max_epochs));
    kv.set(p + ".batch_size", std::to_string(c.batch_size));
    kv.set(p + ".momentum", std::to_string(c.momentum));
    kv.set(p + ".patience", std::to_string(c.patience));
  };
  put_cnn("resnet_scratch", scratch_cfg);
  put_cnn("resnet_pretrained", pretrained_cfg);
  kv.set("proxy.seed", std::to_string(proxy_cfg.seed));
  kv.set("proxy.num_classes", std::to_string(proxy_cfg.num_classes));
  kv.set("proxy.images_per_class", std::to_string(proxy_cfg.images_per_class));
  kv.set("proxy.epochs", std::to_string(proxy_cfg.epochs));
  kv.set("proxy.learning_rate", std::to_string(proxy_cfg.learning_rate));
  kv.set("pretrained_weights", pretrained_weights);
  kv.set("fold_begin", std::to_string(fold_begin));
  kv.set("fold_end", std::to_string(fold_end));
  kv.set("quick", quick ? "true" : "false");
  kv.set("output_dir", output_dir);
  kv.set("jobs", std::to_string(jobs));
  return kv;
}

ExperimentConfig ExperimentConfig::from_kv(const KvFile& kv) {
  ExperimentConfig cfg;
  if (kv.has("master_seed")) cfg.master_seed = std::stoull(kv.get("master_seed"));
  if (kv.has("difficulty"))
    cfg.difficulty = difficulty_from_name(kv.get("difficulty"));
  if (kv.has("fold_mode")) cfg.fold_mode = fold_mode_from_name(kv.get("fold_mode"));
  if (kv.has("classifiers")) cfg.classifiers = split_csv(kv.get("classifiers"));
  if (kv.has("svm.kernel.degree"))
    cfg.kernel.degree = std::stoi(kv.get("svm.kernel.degree"));
  if (kv.has("svm.kernel.gamma"))
    cfg.kernel.gamma = std::stod(kv.get("svm.kernel.gamma"));
  if (kv.has("svm.kernel.coef0"))
    cfg.kernel.coef0 = std::stod(kv.get("svm.kernel.coef0"));
  if (kv.has("svm.c_grid")) cfg.c_grid = split_doubles(kv.get("svm.c_grid"));
  if (kv.has("svm.inner_folds"))
    cfg.inner_folds = std::stoi(kv.get("svm.inner_folds"));
  auto get_cnn = [&](const char* prefix, CNNConfig& c) {
    std::string p(prefix);
    if (kv.has(p + ".learning_rate"))
      c.learning_rate = std::stod(kv.get(p + ".learning_rate"));
    if (kv.has(p + ".max_epochs")) c.max_epochs = std::stoi(kv.get(p + ".max_epochs"));
    if (kv.has(p + ".batch_size")) c.batch_size = std::stoi(kv.get(p + ".batch_size"));
    if (kv.has(p + ".momentum")) c.momentum = std::stod(kv.get(p + ".momentum"));
    if (kv.has(p + ".patience")) c.patience = std::stoi(kv.get(p + ".patience"));
  };
  get_cnn("resnet_scratch", cfg.scratch_cfg);
  get_cnn("resnet_pretrained", cfg.pretrained_cfg);
  if (kv.has("proxy.seed")) cfg.proxy_cfg.seed = std::stoull(kv.get("proxy.seed"));
  if (kv.has("proxy.num_classes"))
    cfg.proxy_cfg.num_classes = std::stoi(kv.get("proxy.num_classes"));
  if (kv.has("proxy.images_per_class"))
    cfg.proxy_cfg.images_per_class = std::stoi(kv.get("proxy.images_per_class"));
  if (kv.has("proxy.epochs")) cfg.proxy_cfg.epochs = std::stoi(kv.get("proxy.epochs"));
  if (kv.has("proxy.learning_rate"))
    cfg.proxy_cfg.learning_rate = std::stod(kv.get("proxy.learning_rate"));
  if (kv.has("pretrained_weights"))
    cfg.pretrained_weights = kv.get("pretrained_weights");
  if (kv.has("fold_begin")) cfg.fold_begin = std::stoi(kv.get("fold_begin"));
  if (kv.has("fold_end")) cfg.fold_end = std::stoi(kv.get("fold_end"));
  if (kv.has("quick")) cfg.quick = kv.get("quick") == "true";
  if (kv.has("output_dir")) cfg.output_dir = kv.get("output_dir");
  if (kv.has("jobs")) cfg.jobs = std::stoi(kv.get("jobs"));
  if (cfg.fold_begin < 0 || cfg.fold_end > 12 || cfg.fold_begin >= cfg.fold_end)
    throw ConfigError("invalid fold range");
  for (const auto& c : cfg.classifiers)
    if (c != "svm" && c != "resnet_scratch" && c != "resnet_pretrained")
      throw ConfigError("unknown classifier: " + c);
  return cfg;
}

void ExperimentConfig::save(const std::string& path) const { to_kv().save(path); }

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  return from_kv(KvFile::load(path));
}

std::string ExperimentConfig::digest() const {
  // Protocol-affecting keys only; execution knobs (output_dir, jobs, force)
  // do not change the run identity.
  KvFile kv = to_kv();
  KvFile canonical;
  for (const auto& [k, v] : kv.entries())
    if (k != "output_dir" && k != "jobs") canonical.set(k, v);
  return sha256_hex(canonical.serialize());
}

std::string ExperimentConfig::run_id() const {
  return "run-" + digest().substr(0, 12);
}

std::string ExperimentConfig::run_dir() const {
  return (fs::path(output_dir) / run_id()).string();
}

RunPaths RunPaths::for_config(const ExperimentConfig& cfg) {
  RunPaths p;
  p.root = cfg.run_dir();
  p.manifest = (fs::path(p.root) / "manifest.csv").string();
  p.foldplan = (fs::path(p.root) / "foldplan.json").string();
  p.images_dir = (fs::path(p.root) / "images").string();
  p.models_dir = (fs::path(p.root) / "models").string();
  p.reports_dir = (fs::path(p.root) / "reports").string();
  p.record = (fs::path(p.root) / "run_record.json").string();
  return p;
}

uint64_t stage_seed(uint64_t master_seed, const std::string& stage, int fold_id,
                    const std::string& classifier) {
  return stable_hash64(master_seed,
                       stage + "/" + std::to_string(fold_id) + "/" + classifier);
}

namespace {

void update_run_record(const ExperimentConfig& cfg, const RunPaths& paths,
                       const std::string& stage, double wall_s,
                       const std::map<std::string, std::string>& artifacts,
                       const json& extra = json::object()) {
  json rec;
  if (fs::exists(paths.record)) {
    std::ifstream in(paths.record);
    try {
      in >> rec;
    } catch (const json::exception&) {
      rec = json::object();
    }
  }
  rec["run_id"] = cfg.run_id();
  rec["tool_version"] = kToolVersion;
  rec["config"] = cfg.to_kv().serialize();
  rec["config_digest"] = cfg.digest();
  json sj;
  sj["wall_seconds"] = wall_s;
  sj["completed_at"] = static_cast<int64_t>(
      std::chrono::duration_cast<std::chrono::seconds>(
          std::chrono::system_clock::now().time_since_epoch())
          .count());
  for (const auto& [k, v] : artifacts) sj["artifacts"][k] = v;
  for (auto& [k, v] : extra.items()) sj[k] = v;
  rec["stages"][stage] = sj;
  atomic_write_file(paths.record, rec.dump(2) + "\n");
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                         start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

DatasetManifest require_manifest(const RunPaths& paths) {
  if (!fs::exists(paths.manifest))
    throw IoError("missing artifact: " + paths.manifest +
                  " (run `polybench generate` first)");
  return load_manifest(paths.manifest);
}

FoldPlan require_foldplan(const RunPaths& paths) {
  if (!fs::exists(paths.foldplan))
    throw IoError("missing artifact: " + paths.foldplan +
                  " (run `polybench split` first)");
  return load_foldplan(paths.foldplan);
}

struct LoadedDataset {
  std::vector<TexturalImage> images;
  std::map<std::string, int> index_of;  // sample_id -> index
  std::vector<PolypClass> labels;
};

LoadedDataset load_images(const DatasetManifest& manifest,
                          const RunPaths& paths) {
  LoadedDataset ds;
  fs::path dir = fs::path(paths.manifest).parent_path();
  ds.images.reserve(manifest.samples.size());
  for (const auto& s : manifest.samples) {
    ds.index_of[s.sample_id] = static_cast<int>(ds.images.size());
    ds.images.push_back(read_png((dir / s.path).string()));
    ds.labels.push_back(s.class_label);
  }
  return ds;
}

struct SplitView {
  std::vector<const TexturalImage*> images;
  std::vector<PolypClass> labels;
};

SplitView view_of(const LoadedDataset& ds, const std::vector<std::string>& ids) {
  SplitView v;
  for (const auto& id : ids) {
    auto it = ds.index_of.find(id);
    if (it == ds.index_of.end())
      throw IoError("fold plan references unknown sample_id: " + id);
    v.images.push_back(&ds.images[it->second]);
    v.labels.push_back(ds.labels[it->second]);
  }
  return v;
}

Eigen::MatrixXf feature_matrix(const SplitView& split) {
  Eigen::MatrixXf X(static_cast<int>(split.images.size()), kFlatFeatures);
  for (size_t i = 0; i < split.images.size(); ++i)
    X.row(static_cast<int>(i)) = flatten_features(*split.images[i]).transpose();
  return X;
}

std::string model_path(const RunPaths& paths, const std::string& classifier,
                       int fold) {
  std::string ext = classifier == "svm" ? ".json" : ".safetensors";
  return (fs::path(paths.models_dir) / classifier /
          ("fold" + std::to_string(fold) + ext))
      .string();
}

std::string history_path(const RunPaths& paths, const std::string& classifier,
                         int fold) {
  return (fs::path(paths.models_dir) / classifier /
          ("fold" + std::to_string(fold) + ".history.json"))
      .string();
}

// The proxy checkpoint plays the role of a fixed published initialization:
// it is independent of the experiment's master seed and shared by every run
// under the same output root, keyed by the knobs that define it.
std::string proxy_weights_path(const ExperimentConfig& cfg,
                               const RunPaths& paths) {
  const auto& p = cfg.proxy_cfg;
  std::string tag = std::to_string(p.seed) + "/" +
                    std::to_string(p.num_classes) + "/" +
                    std::to_string(p.images_per_class) + "/" +
                    std::to_string(p.epochs) + "/" +
                    std::to_string(p.learning_rate);
  return (fs::path(paths.root).parent_path() /
          ("proxy-" + std::to_string(stable_hash64(0x70726f7879ULL, tag)) +
           ".safetensors"))
      .string();
}

// Trains one classifier on one fold, writing model (+history) artifacts.
void train_fold(const ExperimentConfig& cfg, const RunPaths& paths,
                const LoadedDataset& ds, const Fold& fold,
                const std::string& classifier,
                const std::string& pretrain_file) {
  std::string mpath = model_path(paths, classifier, fold.fold_id);
  if (fs::exists(mpath) && !cfg.force) return;
  fs::create_directories(fs::path(mpath).parent_path());

  SplitView train = view_of(ds, fold.train_ids);
  SplitView val = view_of(ds, fold.val_ids);

  if (classifier == "svm") {
    Eigen::MatrixXf X = feature_matrix(train);
    uint64_t seed = stage_seed(cfg.master_seed, "train", fold.fold_id, "svm");
    auto grid = grid_search_C(X, train.labels, cfg.c_grid, cfg.inner_folds,
                              seed, cfg.kernel);
    SVMModel model = svm_fit(X, train.labels, grid.best_C, cfg.kernel);
    model.save(mpath);
    json gj;
    gj["best_C"] = grid.best_C;
    gj["scores"] = json::array();
    for (auto [C, score] : grid.scores)
      gj["scores"].push_back({{"C", C}, {"accuracy", score}});
    atomic_write_file((fs::path(paths.models_dir) / "svm" /
                       ("fold" + std::to_string(fold.fold_id) + ".grid.json"))
                          .string(),
                      gj.dump(2) + "\n");
    return;
  }

  Regime regime =
      classifier == "resnet_scratch" ? Regime::scratch : Regime::pretrained;
  uint64_t seed = stage_seed(cfg.master_seed, "train", fold.fold_id, classifier);
  CNNConfig ccfg =
      regime == Regime::scratch ? cfg.scratch_cfg : cfg.pretrained_cfg;
  ccfg.seed = seed;
  CNNModel model = build_resnet18(kNumClasses, regime, seed, pretrain_file);
  TrainingHistory hist =
      train_cnn(model, train.images, train.labels, val.images, val.labels, ccfg);
  model.save(mpath, seed);
  hist.save(history_path(paths, classifier, fold.fold_id));
}

double best_epoch_val_accuracy(const std::string& hist_path) {
  std::ifstream in(hist_path);
  if (!in) throw IoError("missing artifact: " + hist_path);
  json j;
  in >> j;
  int best = j.at("best_epoch").get<int>();
  if (best < 1) return std::nan("");
  return j.at("epochs").at(best - 1).at("val_accuracy").get<double>();
}

}  // namespace

DatasetManifest cmd_generate(const ExperimentConfig& cfg) {
  RunPaths paths = RunPaths::for_config(cfg);
  Stopwatch sw;
  if (fs::exists(paths.manifest) && !cfg.force) {
    DatasetManifest existing = load_manifest(paths.manifest);
    validate_manifest(existing, paths.manifest);
    return existing;
  }
  fs::create_directories(paths.root);

  GeneratorConfig gen = GeneratorConfig::preset(cfg.difficulty, cfg.master_seed);
  gen.save((fs::path(paths.root) / "generator.cfg").string());
  auto corpus = generate_corpus(enumerate_phantom_grid(), gen);
  DatasetManifest manifest = build_augmented_dataset(
      corpus, paths.images_dir, cfg.master_seed, cfg.difficulty);
  for (auto& s : manifest.samples) s.path = "images/" + s.path;
  save_manifest(manifest, paths.manifest);

  update_run_record(cfg, paths, "generate", sw.seconds(),
                    {{"manifest", sha256_file(paths.manifest)}});
  return manifest;
}

FoldPlan cmd_split(const ExperimentConfig& cfg) {
  RunPaths paths = RunPaths::for_config(cfg);
  Stopwatch sw;
  DatasetManifest manifest = require_manifest(paths);
  if (fs::exists(paths.foldplan) && !cfg.force) return load_foldplan(paths.foldplan);

  FoldPlan plan = make_folds(manifest, cfg.fold_mode,
                             stable_hash64(cfg.master_seed, "split"));
  save_foldplan(plan, paths.foldplan);
  update_run_record(cfg, paths, "split", sw.seconds(),
                    {{"foldplan", sha256_file(paths.foldplan)}});
  return plan;
}

void cmd_train(const ExperimentConfig& cfg, const std::string& classifier) {
  RunPaths paths = RunPaths::for_config(cfg);
  Stopwatch sw;
  DatasetManifest manifest = require_manifest(paths);
  validate_manifest(manifest, paths.manifest);
  FoldPlan plan = require_foldplan(paths);
  LoadedDataset ds = load_images(manifest, paths);

  std::vector<std::string> todo;
  if (classifier == "all")
    todo = cfg.classifiers;
  else
    todo = {classifier};

  std::string pretrain_file = cfg.pretrained_weights;
  bool needs_pretrain =
      std::find(todo.begin(), todo.end(), "resnet_pretrained") != todo.end();
  if (needs_pretrain && pretrain_file.empty()) {
    pretrain_file = proxy_weights_path(cfg, paths);
    if (!fs::exists(pretrain_file) || cfg.force) {
      fs::create_directories(fs::path(pretrain_file).parent_path());
      proxy_pretrain(cfg.proxy_cfg, pretrain_file);
    }
  }

  std::vector<const Fold*> folds;
  for (const auto& f : plan.folds)
    if (f.fold_id >= cfg.fold_begin && f.fold_id < cfg.fold_end)
      folds.push_back(&f);

  auto work = [&](size_t begin, size_t step) {
    for (size_t i = begin; i < folds.size(); i += step)
      for (const auto& cls : todo)
        train_fold(cfg, paths, ds, *folds[i], cls, pretrain_file);
  };
  if (cfg.jobs <= 1) {
    work(0, 1);
  } else {
    std::vector<std::thread> pool;
    size_t n = std::min<size_t>(cfg.jobs, folds.size());
    for (size_t t = 0; t < n; ++t) pool.emplace_back(work, t, n);
    for (auto& th : pool) th.join();
  }

  json audit;
  audit["split_access"] = {{"train", true}, {"val", true}, {"test", false}};
  update_run_record(cfg, paths, "train:" + classifier, sw.seconds(), {}, audit);
}

std::map<std::string, AggregateReport> cmd_evaluate(const ExperimentConfig& cfg) {
  RunPaths paths = RunPaths::for_config(cfg);
  Stopwatch sw;
  DatasetManifest manifest = require_manifest(paths);
  FoldPlan plan = require_foldplan(paths);
  LoadedDataset ds = load_images(manifest, paths);

  std::map<std::string, AggregateReport> out;
  for (const auto& cls : cfg.classifiers) {
    std::vector<EvalReport> fold_reports;
    for (const auto& fold : plan.folds) {
      if (fold.fold_id < cfg.fold_begin || fold.fold_id >= cfg.fold_end) continue;
      std::string mpath = model_path(paths, cls, fold.fold_id);
      if (!fs::exists(mpath))
        throw IoError("missing artifact: " + mpath +
                      " (run `polybench train` first)");
      SplitView test = view_of(ds, fold.test_ids);

      LabelPairSet pairs;
      pairs.y_true = test.labels;
      if (cls == "svm") {
        SVMModel model = SVMModel::load(mpath);
        pairs.y_pred = svm_predict(model, feature_matrix(test));
      } else {
        CNNModel model = load_cnn(mpath);
        pairs.y_pred = cnn_predict(model, test.images).labels;
      }
      EvalReport rep = evaluate(pairs);
      if (cls != "svm")
        rep.val_accuracy =
            best_epoch_val_accuracy(history_path(paths, cls, fold.fold_id));
      fold_reports.push_back(rep);
    }
    out[cls] = aggregate_folds(fold_reports);
  }

  // Persist per-fold reports for cmd_report.
  fs::create_directories(paths.reports_dir);
  json j;
  for (const auto& [cls, agg] : out) {
    json folds = json::array();
    for (const auto& r : agg.per_fold) {
      json fj;
      report_to_json(r, fj);
      folds.push_back(fj);
    }
    j[cls] = folds;
  }
  atomic_write_file((fs::path(paths.reports_dir) / "fold_reports.json").string(),
                    j.dump(2) + "\n");
  update_run_record(cfg, paths, "evaluate", sw.seconds(),
                    {{"fold_reports",
                      sha256_file((fs::path(paths.reports_dir) /
                                   "fold_reports.json")
                                      .string())}});
  return out;
}

void cmd_report(const ExperimentConfig& cfg) {
  RunPaths paths = RunPaths::for_config(cfg);
  Stopwatch sw;
  std::string fr = (fs::path(paths.reports_dir) / "fold_reports.json").string();
  if (!fs::exists(fr))
    throw IoError("missing artifact: " + fr + " (run `polybench evaluate` first)");
  std::ifstream in(fr);
  json j;
  in >> j;

  std::map<std::string, AggregateReport> by_classifier;
  for (auto& [cls, folds] : j.items()) {
    std::vector<EvalReport> reports;
    for (const auto& fj : folds) reports.push_back(report_from_json(fj));
    by_classifier[cls] = aggregate_folds(reports);
  }
  render_report(by_classifier, paths.reports_dir);
  update_run_record(
      cfg, paths, "report", sw.seconds(),
      {{"metrics",
        sha256_file((fs::path(paths.reports_dir) / "metrics.json").string())}});
}

std::map<std::string, AggregateReport> cmd_repro_paper(const ExperimentConfig& cfg) {
  cmd_generate(cfg);
  cmd_split(cfg);
  cmd_train(cfg, "all");
  auto result = cmd_evaluate(cfg);
  cmd_report(cfg);
  return result;
}

}  // namespace polybench

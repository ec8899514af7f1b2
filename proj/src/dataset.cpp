#include "polybench/dataset.hpp"

#include <algorithm>
#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <nlohmann/json.hpp>

#include "polybench/common.hpp"
#include "polybench/sha256.hpp"

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace polybench {

void atomic_write_file(const std::string& path, const std::string& content) {
  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + tmp);
    out << content;
    if (!out) throw IoError("write failed: " + tmp);
  }
  fs::rename(tmp, path);
}

DatasetManifest build_augmented_dataset(
    const std::vector<std::pair<PhantomSpec, TexturalImage>>& corpus,
    const std::string& output_dir, uint64_t master_seed, Difficulty difficulty) {
  std::vector<std::string> seen;
  for (const auto& [spec, img] : corpus) {
    std::string id = spec.base_id();
    if (std::find(seen.begin(), seen.end(), id) != seen.end())
      throw ConfigError("duplicate base_id in corpus: " + id);
    seen.push_back(id);
  }

  fs::create_directories(output_dir);
  DatasetManifest m;
  m.master_seed = master_seed;
  m.difficulty = difficulty;
  for (const auto& [spec, img] : corpus) {
    for (auto& [op, variant] : augment_image(img)) {
      Sample s;
      s.base_id = spec.base_id();
      s.sample_id = s.base_id + "-" + aug_op_name(op);
      s.class_label = spec.polyp_class;
      s.geometry_variant = spec.geometry_variant;
      s.hardness = spec.hardness;
      s.aug_op = op;
      s.path = s.sample_id + ".png";
      std::string full = (fs::path(output_dir) / s.path).string();
      write_png(full, variant);
      s.sha256 = sha256_file(full);
      m.samples.push_back(std::move(s));
    }
  }
  return m;
}

namespace {

constexpr const char* kManifestHeader =
    "sample_id,base_id,class,paris,geometry,hardness,aug_op,path,sha256";

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) out.push_back(field);
  return out;
}

}  // namespace

void save_manifest(const DatasetManifest& m, const std::string& path) {
  std::ostringstream out;
  out << "# master_seed=" << m.master_seed
      << " difficulty=" << difficulty_name(m.difficulty) << "\n";
  out << kManifestHeader << "\n";
  for (const auto& s : m.samples) {
    out << s.sample_id << ',' << s.base_id << ',' << class_code(s.class_label)
        << ',' << paris_label(s.class_label) << ',' << s.geometry_variant << ','
        << hardness_code(s.hardness) << ',' << aug_op_name(s.aug_op) << ','
        << s.path << ',' << s.sha256 << "\n";
  }
  atomic_write_file(path, out.str());
}

DatasetManifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open manifest: " + path);
  DatasetManifest m;
  std::string line;
  bool header_seen = false;
  fs::path dir = fs::path(path).parent_path();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      // "# master_seed=N difficulty=D"
      std::istringstream ss(line.substr(1));
      std::string tok;
      while (ss >> tok) {
        size_t eq = tok.find('=');
        if (eq == std::string::npos) continue;
        std::string k = tok.substr(0, eq), v = tok.substr(eq + 1);
        if (k == "master_seed") m.master_seed = std::stoull(v);
        if (k == "difficulty") m.difficulty = difficulty_from_name(v);
      }
      continue;
    }
    if (!header_seen) {
      if (line != kManifestHeader)
        throw IoError("manifest header mismatch in " + path);
      header_seen = true;
      continue;
    }
    auto f = split_csv_line(line);
    if (f.size() != 9) throw IoError("malformed manifest row: " + line);
    Sample s;
    s.sample_id = f[0];
    s.base_id = f[1];
    s.class_label = class_from_code(f[2]);
    if (f[3] != paris_label(s.class_label))
      throw IoError("class/paris mismatch for " + s.sample_id);
    s.geometry_variant = std::stoi(f[4]);
    s.hardness = hardness_from_code(f[5]);
    s.aug_op = aug_op_from_name(f[6]);
    s.path = f[7];
    s.sha256 = f[8];
    if (!fs::exists(dir / s.path))
      throw IoError("manifest references missing image for sample " +
                    s.sample_id + ": " + (dir / s.path).string());
    m.samples.push_back(std::move(s));
  }
  if (!header_seen) throw IoError("empty manifest: " + path);
  return m;
}

void validate_manifest(const DatasetManifest& m, const std::string& manifest_path) {
  fs::path dir = fs::path(manifest_path).parent_path();
  for (const auto& s : m.samples) {
    std::string actual = sha256_file((dir / s.path).string());
    if (actual != s.sha256)
      throw DigestMismatch("digest mismatch for sample " + s.sample_id +
                           ": expected " + s.sha256 + ", actual " + actual);
  }
}

const char* fold_mode_name(FoldMode m) {
  return m == FoldMode::grouped ? "grouped" : "pooled";
}

FoldMode fold_mode_from_name(const std::string& name) {
  if (name == "grouped") return FoldMode::grouped;
  if (name == "pooled") return FoldMode::pooled;
  throw ConfigError("unknown fold mode: " + name);
}

FoldPlan make_folds(const DatasetManifest& manifest, FoldMode mode,
                    uint64_t seed) {
  if (manifest.samples.empty()) throw ConfigError("empty manifest");

  // Units: base phantoms (grouped) or individual samples (pooled), each with
  // a class for stratification.
  std::map<std::string, PolypClass> unit_class;
  std::map<std::string, std::vector<std::string>> unit_samples;
  for (const auto& s : manifest.samples) {
    std::string unit = mode == FoldMode::grouped ? s.base_id : s.sample_id;
    unit_class[unit] = s.class_label;
    unit_samples[unit].push_back(s.sample_id);
  }

  size_t n_units = unit_class.size();
  if (n_units % 4 != 0)
    throw ConfigError("unit count " + std::to_string(n_units) +
                      " not divisible by 4");

  // Per-class unit lists, sorted (std::map iteration), then seeded shuffle
  // and round-robin deal into 4 quarters.
  std::array<std::vector<std::string>, kNumClasses> by_class;
  for (const auto& [unit, cls] : unit_class)
    by_class[static_cast<int>(cls)].push_back(unit);

  std::array<std::vector<std::string>, 4> quarters;
  for (int c = 0; c < kNumClasses; ++c) {
    auto& units = by_class[c];
    Rng rng(stable_hash64(seed, std::string("quarter/") +
                                    class_code(static_cast<PolypClass>(c))));
    rng.shuffle(units);
    for (size_t i = 0; i < units.size(); ++i)
      quarters[i % 4].push_back(units[i]);
  }
  size_t q = n_units / 4;
  for (const auto& quarter : quarters)
    if (quarter.size() != q)
      throw ConfigError("class imbalance prevents stratified quartering");

  auto expand = [&](std::initializer_list<int> qs) {
    std::vector<std::string> ids;
    for (int qi : qs)
      for (const auto& unit : quarters[qi])
        for (const auto& sid : unit_samples[unit]) ids.push_back(sid);
    std::sort(ids.begin(), ids.end());
    return ids;
  };

  // All ordered assignments: choose {a,b} for train, then order the rest as
  // val/test. 6 pairs x 2 orders = 12 folds.
  FoldPlan plan;
  plan.mode = mode;
  plan.seed = seed;
  int fold_id = 0;
  for (int a = 0; a < 4; ++a) {
    for (int b = a + 1; b < 4; ++b) {
      std::vector<int> rest;
      for (int x = 0; x < 4; ++x)
        if (x != a && x != b) rest.push_back(x);
      for (int flip = 0; flip < 2; ++flip) {
        Fold fold;
        fold.fold_id = fold_id++;
        fold.train_ids = expand({a, b});
        fold.val_ids = expand({rest[flip]});
        fold.test_ids = expand({rest[1 - flip]});
        plan.folds.push_back(std::move(fold));
      }
    }
  }
  return plan;
}

void save_foldplan(const FoldPlan& plan, const std::string& path) {
  json j;
  j["mode"] = fold_mode_name(plan.mode);
  j["seed"] = plan.seed;
  j["folds"] = json::array();
  for (const auto& f : plan.folds) {
    j["folds"].push_back({{"fold_id", f.fold_id},
                          {"train", f.train_ids},
                          {"val", f.val_ids},
                          {"test", f.test_ids}});
  }
  atomic_write_file(path, j.dump(2) + "\n");
}

FoldPlan load_foldplan(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open fold plan: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw IoError("malformed fold plan " + path + ": " + e.what());
  }
  FoldPlan plan;
  plan.mode = fold_mode_from_name(j.at("mode").get<std::string>());
  plan.seed = j.at("seed").get<uint64_t>();
  for (const auto& fj : j.at("folds")) {
    Fold f;
    f.fold_id = fj.at("fold_id").get<int>();
    f.train_ids = fj.at("train").get<std::vector<std::string>>();
    f.val_ids = fj.at("val").get<std::vector<std::string>>();
    f.test_ids = fj.at("test").get<std::vector<std::string>>();
    plan.folds.push_back(std::move(f));
  }
  return plan;
}

}  // namespace polybench

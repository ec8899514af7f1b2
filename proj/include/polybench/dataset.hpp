#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "polybench/augment.hpp"
#include "polybench/phantom.hpp"

namespace polybench {

// One augmented image record. `path` is relative to the manifest directory.
struct Sample {
  std::string sample_id;
  std::string base_id;
  PolypClass class_label = PolypClass::T1;
  int geometry_variant = 1;
  Hardness hardness = Hardness::H1;
  AugmentationOp aug_op = AugmentationOp::id;
  std::string path;
  std::string sha256;

  bool operator==(const Sample&) const = default;
};

struct DatasetManifest {
  std::vector<Sample> samples;
  uint64_t master_seed = 0;
  Difficulty difficulty = Difficulty::easy;

  bool operator==(const DatasetManifest&) const = default;
};

// Writes one PNG per (base image, dihedral op) into output_dir and returns
// the manifest. 8 samples per base_id.
DatasetManifest build_augmented_dataset(
    const std::vector<std::pair<PhantomSpec, TexturalImage>>& corpus,
    const std::string& output_dir, uint64_t master_seed, Difficulty difficulty);

// CSV with header sample_id,base_id,class,paris,geometry,hardness,aug_op,path,sha256.
void save_manifest(const DatasetManifest& m, const std::string& path);
// Fails if any referenced PNG is missing (error names the sample_id).
DatasetManifest load_manifest(const std::string& path);
// Recomputes file digests against the manifest; throws DigestMismatch.
void validate_manifest(const DatasetManifest& m, const std::string& manifest_path);

enum class FoldMode { grouped, pooled };

const char* fold_mode_name(FoldMode m);
FoldMode fold_mode_from_name(const std::string& name);

struct Fold {
  int fold_id = 0;
  std::vector<std::string> train_ids;
  std::vector<std::string> val_ids;
  std::vector<std::string> test_ids;

  bool operator==(const Fold&) const = default;
};

// The 12 ordered assignments of 4 stratified quarters to train(2)/val(1)/test(1).
struct FoldPlan {
  std::vector<Fold> folds;
  FoldMode mode = FoldMode::grouped;
  uint64_t seed = 0;

  bool operator==(const FoldPlan&) const = default;
};

FoldPlan make_folds(const DatasetManifest& manifest, FoldMode mode, uint64_t seed);

void save_foldplan(const FoldPlan& plan, const std::string& path);
FoldPlan load_foldplan(const std::string& path);

// Atomic write-then-rename of a whole file.
void atomic_write_file(const std::string& path, const std::string& content);

}  // namespace polybench

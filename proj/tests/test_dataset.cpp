#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "polybench/dataset.hpp"

using namespace polybench;
namespace fs = std::filesystem;

namespace {

TexturalImage random_image(uint64_t seed) {
  Rng rng(seed);
  auto img = TexturalImage::zero();
  for (auto& p : img.ch)
    for (int r = 0; r < p.rows(); ++r)
      for (int c = 0; c < p.cols(); ++c)
        p(r, c) = static_cast<uint8_t>(rng.uniform_int(256));
  return img;
}

fs::path fresh_dir(const std::string& name) {
  fs::path d = fs::temp_directory_path() / name;
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

// Synthetic manifest covering the full 48x8 grid, metadata only (no files).
DatasetManifest grid_manifest() {
  DatasetManifest m;
  m.master_seed = 1;
  for (const auto& spec : enumerate_phantom_grid()) {
    for (int op = 0; op < kNumAugOps; ++op) {
      Sample s;
      s.base_id = spec.base_id();
      s.sample_id = s.base_id + "-" + aug_op_name(static_cast<AugmentationOp>(op));
      s.class_label = spec.polyp_class;
      s.geometry_variant = spec.geometry_variant;
      s.hardness = spec.hardness;
      s.aug_op = static_cast<AugmentationOp>(op);
      s.path = "images/" + s.sample_id + ".png";
      m.samples.push_back(s);
    }
  }
  return m;
}

}  // namespace

TEST_CASE("rot90 matches the 2x2 counterclockwise oracle") {
  // [[a,b],[c,d]] rotated 90 degrees CCW is [[b,d],[a,c]].
  PixelPlane m(2, 2);
  m << 1, 2, 3, 4;
  PixelPlane r = rot90_ccw(m);
  CHECK(r(0, 0) == 2);
  CHECK(r(0, 1) == 4);
  CHECK(r(1, 0) == 1);
  CHECK(r(1, 1) == 3);
}

TEST_CASE("dihedral group laws hold bit-exactly") {
  auto img = random_image(77);

  auto r = img;
  for (int i = 0; i < 4; ++i) r = apply_aug(r, AugmentationOp::rot90);
  CHECK(r.pixels_equal(img));

  auto f = apply_aug(apply_aug(img, AugmentationOp::flip), AugmentationOp::flip);
  CHECK(f.pixels_equal(img));

  // rot180 = rot90 twice, flip_rotX = flip after rotX.
  CHECK(apply_aug(img, AugmentationOp::rot180)
            .pixels_equal(apply_aug(apply_aug(img, AugmentationOp::rot90),
                                    AugmentationOp::rot90)));
  CHECK(apply_aug(img, AugmentationOp::flip_rot270)
            .pixels_equal(
                apply_aug(apply_aug(img, AugmentationOp::rot270), AugmentationOp::flip)));
}

TEST_CASE("the 8 variants of a generic image are pairwise distinct") {
  auto variants = augment_image(random_image(123));
  REQUIRE(variants.size() == kNumAugOps);
  for (size_t i = 0; i < variants.size(); ++i) {
    CHECK(variants[i].first == static_cast<AugmentationOp>(i));
    for (size_t j = i + 1; j < variants.size(); ++j)
      CHECK(!variants[i].second.pixels_equal(variants[j].second));
  }
}

TEST_CASE("aug op names round-trip") {
  for (int op = 0; op < kNumAugOps; ++op) {
    auto o = static_cast<AugmentationOp>(op);
    CHECK(aug_op_from_name(aug_op_name(o)) == o);
  }
  CHECK_THROWS_AS(aug_op_from_name("rot45"), ConfigError);
}

TEST_CASE("build_augmented_dataset writes one sample per (base, op)") {
  auto dir = fresh_dir("pb_build_ds");
  auto cfg = GeneratorConfig::preset(Difficulty::easy, 2);
  std::vector<PhantomSpec> bases = {PhantomSpec::from_base_id("T1-G1-H1"),
                                    PhantomSpec::from_base_id("T3-G2-H2")};
  auto corpus = generate_corpus(bases, cfg);
  auto manifest =
      build_augmented_dataset(corpus, dir.string(), 2, Difficulty::easy);

  REQUIRE(manifest.samples.size() == 16);
  std::set<std::string> ids;
  for (const auto& s : manifest.samples) {
    ids.insert(s.sample_id);
    CHECK(fs::exists(dir / s.path));
    CHECK(s.sha256.size() == 64);
    // The stored pixels must round-trip and match the recorded augmentation.
    auto png = read_png((dir / s.path).string());
    auto expected = apply_aug(
        corpus[s.base_id == bases[0].base_id() ? 0 : 1].second, s.aug_op);
    CHECK(png.pixels_equal(expected));
  }
  CHECK(ids.size() == 16);

  SUBCASE("manifest round-trips through CSV") {
    auto path = (dir / "manifest.csv").string();
    save_manifest(manifest, path);
    auto back = load_manifest(path);
    CHECK(back == manifest);
  }

  SUBCASE("validate_manifest flags corrupted pixels") {
    auto path = (dir / "manifest.csv").string();
    save_manifest(manifest, path);
    validate_manifest(manifest, path);  // clean pass

    auto victim = dir / manifest.samples[3].path;
    auto img = read_png(victim.string());
    img.ch[0](0, 0) ^= 0xff;
    write_png(victim.string(), img);
    CHECK_THROWS_AS(validate_manifest(manifest, path), DigestMismatch);
  }

  SUBCASE("a missing file is reported by sample_id") {
    auto path = (dir / "manifest.csv").string();
    save_manifest(manifest, path);
    fs::remove(dir / manifest.samples[5].path);
    try {
      load_manifest(path);
      FAIL("expected IoError");
    } catch (const IoError& e) {
      CHECK(std::string(e.what()).find(manifest.samples[5].sample_id) !=
            std::string::npos);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("grouped folds satisfy the 2:1:1 quartering algebra") {
  auto manifest = grid_manifest();
  auto plan = make_folds(manifest, FoldMode::grouped, 99);
  REQUIRE(plan.folds.size() == 12);

  std::set<std::string> all_ids;
  for (const auto& s : manifest.samples) all_ids.insert(s.sample_id);

  std::map<std::string, std::string> base_of;
  for (const auto& s : manifest.samples) base_of[s.sample_id] = s.base_id;
  std::map<std::string, PolypClass> class_of;
  for (const auto& s : manifest.samples) class_of[s.sample_id] = s.class_label;

  std::map<std::set<std::string>, std::array<int, 3>> quarter_roles;
  for (const auto& f : plan.folds) {
    CHECK(f.train_ids.size() == 192);
    CHECK(f.val_ids.size() == 96);
    CHECK(f.test_ids.size() == 96);

    // Pairwise disjoint and union-complete.
    std::set<std::string> seen;
    for (const auto* split : {&f.train_ids, &f.val_ids, &f.test_ids})
      for (const auto& id : *split) CHECK(seen.insert(id).second);
    CHECK(seen == all_ids);

    // No base_id appears in two splits (grouped mode).
    std::map<std::string, int> split_of_base;
    int split_idx = 0;
    bool leak = false;
    for (const auto* split : {&f.train_ids, &f.val_ids, &f.test_ids}) {
      for (const auto& id : *split) {
        auto [it, fresh] = split_of_base.emplace(base_of[id], split_idx);
        if (!fresh && it->second != split_idx) leak = true;
      }
      ++split_idx;
    }
    CHECK(!leak);

    // Class balance: every split is evenly stratified over the 4 classes.
    for (const auto* split : {&f.val_ids, &f.test_ids}) {
      std::array<int, 4> per_class{};
      for (const auto& id : *split) ++per_class[static_cast<int>(class_of[id])];
      for (int c = 0; c < 4; ++c) CHECK(per_class[c] == 24);
    }

    // Quarters are recoverable as the val/test sets.
    for (const auto* q : {&f.val_ids, &f.test_ids}) {
      std::set<std::string> qs(q->begin(), q->end());
      auto& roles = quarter_roles[qs];
      ++roles[q == &f.val_ids ? 1 : 2];
    }
  }

  // Exactly 4 distinct quarters; each is val 3x and test 3x (hence train 6x).
  REQUIRE(quarter_roles.size() == 4);
  for (const auto& [q, roles] : quarter_roles) {
    CHECK(roles[1] == 3);
    CHECK(roles[2] == 3);
  }
}

TEST_CASE("pooled folds partition at sample granularity") {
  auto manifest = grid_manifest();
  auto plan = make_folds(manifest, FoldMode::pooled, 99);
  REQUIRE(plan.folds.size() == 12);

  std::map<std::string, std::string> base_of;
  for (const auto& s : manifest.samples) base_of[s.sample_id] = s.base_id;

  bool any_base_spans_splits = false;
  for (const auto& f : plan.folds) {
    CHECK(f.train_ids.size() == 192);
    CHECK(f.val_ids.size() == 96);
    CHECK(f.test_ids.size() == 96);
    std::set<std::string> train_bases, rest_bases;
    for (const auto& id : f.train_ids) train_bases.insert(base_of[id]);
    for (const auto& id : f.val_ids) rest_bases.insert(base_of[id]);
    for (const auto& id : f.test_ids) rest_bases.insert(base_of[id]);
    for (const auto& b : train_bases)
      if (rest_bases.count(b)) any_base_spans_splits = true;
  }
  // Pooled mode deliberately permits augmented variants of one phantom to
  // cross splits; that leakage is the point of the ablation.
  CHECK(any_base_spans_splits);
}

TEST_CASE("fold plans are seed-deterministic and serialize losslessly") {
  auto manifest = grid_manifest();
  auto a = make_folds(manifest, FoldMode::grouped, 7);
  auto b = make_folds(manifest, FoldMode::grouped, 7);
  CHECK(a == b);
  auto c = make_folds(manifest, FoldMode::grouped, 8);
  CHECK(!(a == c));

  auto dir = fresh_dir("pb_foldplan");
  auto path = (dir / "foldplan.json").string();
  save_foldplan(a, path);
  CHECK(load_foldplan(path) == a);
  fs::remove_all(dir);
}

TEST_CASE("atomic_write_file replaces content completely") {
  auto dir = fresh_dir("pb_atomic");
  auto path = (dir / "f.txt").string();
  atomic_write_file(path, "longer initial content\n");
  atomic_write_file(path, "short\n");
  std::ifstream in(path);
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  CHECK(text == "short\n");
  fs::remove_all(dir);
}

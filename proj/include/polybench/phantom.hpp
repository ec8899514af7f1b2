#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "polybench/common.hpp"
#include "polybench/image.hpp"

namespace polybench {

// Paris classes IIa/IIc/Ip/LST, aliased T1..T4.
enum class PolypClass : int { T1 = 0, T2 = 1, T3 = 2, T4 = 3 };

inline constexpr int kNumClasses = 4;

const char* class_code(PolypClass c);    // "T1".."T4"
const char* paris_label(PolypClass c);   // "IIa","IIc","Ip","LST"
PolypClass class_from_code(const std::string& code);

// Three Shore-hardness levels of the printed phantoms.
enum class Hardness : int { H1 = 0, H2 = 1, H3 = 2 };

const char* hardness_code(Hardness h);      // "H1".."H3"
const char* material_label(Hardness h);     // "Agilus DM400", ...
const char* shore_label(Hardness h);        // "Shore A 1-2", ...
Hardness hardness_from_code(const std::string& code);

// One cell of the 4x4x3 phantom tensor.
struct PhantomSpec {
  PolypClass polyp_class = PolypClass::T1;
  int geometry_variant = 1;  // 1..4
  Hardness hardness = Hardness::H1;

  std::string base_id() const;  // "T{i}-G{j}-H{k}"
  bool in_grid() const { return geometry_variant >= 1 && geometry_variant <= 4; }
  static PhantomSpec from_base_id(const std::string& id);

  bool operator==(const PhantomSpec&) const = default;
};

// All 48 specs in lexicographic (class, geometry, hardness) order.
std::vector<PhantomSpec> enumerate_phantom_grid();

enum class Difficulty { easy, hard };

const char* difficulty_name(Difficulty d);
Difficulty difficulty_from_name(const std::string& name);

struct GeneratorConfig {
  double noise_amplitude = 0.02;
  double motif_contrast = 1.0;
  Difficulty difficulty = Difficulty::easy;
  uint64_t master_seed = 1;

  static GeneratorConfig preset(Difficulty d, uint64_t master_seed);

  // Key-value text format, one `key = value` per line.
  void save(const std::string& path) const;
  static GeneratorConfig load(const std::string& path);
};

// Heightfield primitives shared with the proxy-pretraining texture corpus.
using HeightField = Eigen::ArrayXXd;
void add_gaussian_bump(HeightField& h, double cx, double cy, double sigma,
                       double amp);
// Gel-style shading of a heightfield into RGB with seeded additive noise.
TexturalImage render_heightfield(const HeightField& h, double contrast,
                                 double noise_amplitude, double gain,
                                 double offset, Rng& rng);

// Deterministic class-distinctive texture render. Same (spec, seed, cfg)
// always yields bit-identical pixels.
TexturalImage generate_phantom_image(const PhantomSpec& spec, uint64_t seed,
                                     const GeneratorConfig& cfg);

// Per-spec seed: stable_hash64(master_seed, base_id); grid order is irrelevant.
uint64_t per_spec_seed(uint64_t master_seed, const std::string& base_id);

std::vector<std::pair<PhantomSpec, TexturalImage>> generate_corpus(
    const std::vector<PhantomSpec>& grid, const GeneratorConfig& cfg);

}  // namespace polybench

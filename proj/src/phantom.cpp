#include "polybench/phantom.hpp"

#include <algorithm>
#include <cmath>

#include "polybench/common.hpp"
#include "polybench/kv.hpp"

namespace polybench {

const char* class_code(PolypClass c) {
  static const char* codes[] = {"T1", "T2", "T3", "T4"};
  return codes[static_cast<int>(c)];
}

const char* paris_label(PolypClass c) {
  static const char* labels[] = {"IIa", "IIc", "Ip", "LST"};
  return labels[static_cast<int>(c)];
}

PolypClass class_from_code(const std::string& code) {
  for (int i = 0; i < kNumClasses; ++i)
    if (code == class_code(static_cast<PolypClass>(i)))
      return static_cast<PolypClass>(i);
  throw ConfigError("unknown polyp class: " + code);
}

const char* hardness_code(Hardness h) {
  static const char* codes[] = {"H1", "H2", "H3"};
  return codes[static_cast<int>(h)];
}

const char* material_label(Hardness h) {
  static const char* labels[] = {"Agilus DM400", "Agilus DM600",
                                 "Vero Pure White"};
  return labels[static_cast<int>(h)];
}

const char* shore_label(Hardness h) {
  static const char* labels[] = {"Shore A 1-2", "Shore A 30-40",
                                 "Shore D 83-86"};
  return labels[static_cast<int>(h)];
}

Hardness hardness_from_code(const std::string& code) {
  for (int i = 0; i < 3; ++i)
    if (code == hardness_code(static_cast<Hardness>(i)))
      return static_cast<Hardness>(i);
  throw ConfigError("unknown hardness: " + code);
}

std::string PhantomSpec::base_id() const {
  return std::string(class_code(polyp_class)) + "-G" +
         std::to_string(geometry_variant) + "-" + hardness_code(hardness);
}

PhantomSpec PhantomSpec::from_base_id(const std::string& id) {
  // "T{i}-G{j}-H{k}"
  if (id.size() != 8 || id[2] != '-' || id[3] != 'G' || id[5] != '-')
    throw ConfigError("malformed base_id: " + id);
  PhantomSpec spec;
  spec.polyp_class = class_from_code(id.substr(0, 2));
  spec.geometry_variant = id[4] - '0';
  spec.hardness = hardness_from_code(id.substr(6, 2));
  if (!spec.in_grid()) throw ConfigError("base_id outside grid: " + id);
  return spec;
}

std::vector<PhantomSpec> enumerate_phantom_grid() {
  std::vector<PhantomSpec> grid;
  grid.reserve(48);
  for (int i = 0; i < kNumClasses; ++i)
    for (int j = 1; j <= 4; ++j)
      for (int k = 0; k < 3; ++k)
        grid.push_back({static_cast<PolypClass>(i), j, static_cast<Hardness>(k)});
  return grid;
}

const char* difficulty_name(Difficulty d) {
  return d == Difficulty::easy ? "easy" : "hard";
}

Difficulty difficulty_from_name(const std::string& name) {
  if (name == "easy") return Difficulty::easy;
  if (name == "hard") return Difficulty::hard;
  throw ConfigError("unknown difficulty: " + name);
}

GeneratorConfig GeneratorConfig::preset(Difficulty d, uint64_t master_seed) {
  GeneratorConfig cfg;
  cfg.difficulty = d;
  cfg.master_seed = master_seed;
  if (d == Difficulty::easy) {
    cfg.noise_amplitude = 0.02;
    cfg.motif_contrast = 1.0;
  } else {
    cfg.noise_amplitude = 0.06;
    cfg.motif_contrast = 0.55;
  }
  return cfg;
}

void GeneratorConfig::save(const std::string& path) const {
  KvFile kv;
  kv.set("noise_amplitude", std::to_string(noise_amplitude));
  kv.set("motif_contrast", std::to_string(motif_contrast));
  kv.set("difficulty", difficulty_name(difficulty));
  kv.set("master_seed", std::to_string(master_seed));
  kv.save(path);
}

GeneratorConfig GeneratorConfig::load(const std::string& path) {
  KvFile kv = KvFile::load(path);
  GeneratorConfig cfg;
  cfg.noise_amplitude = std::stod(kv.get("noise_amplitude"));
  cfg.motif_contrast = std::stod(kv.get("motif_contrast"));
  cfg.difficulty = difficulty_from_name(kv.get("difficulty"));
  cfg.master_seed = std::stoull(kv.get("master_seed"));
  return cfg;
}

uint64_t per_spec_seed(uint64_t master_seed, const std::string& base_id) {
  return stable_hash64(master_seed, base_id);
}

// Windowed Gaussian bump; amp may be negative (depression).
void add_gaussian_bump(HeightField& h, double cx, double cy, double sigma,
                       double amp) {
  const int n = static_cast<int>(h.rows());
  int x0 = std::max(0, static_cast<int>(cx - 4 * sigma));
  int x1 = std::min(n - 1, static_cast<int>(cx + 4 * sigma) + 1);
  int y0 = std::max(0, static_cast<int>(cy - 4 * sigma));
  int y1 = std::min(n - 1, static_cast<int>(cy + 4 * sigma) + 1);
  const double inv = 1.0 / (2.0 * sigma * sigma);
  for (int y = y0; y <= y1; ++y) {
    double dy = y - cy;
    for (int x = x0; x <= x1; ++x) {
      double dx = x - cx;
      h(y, x) += amp * std::exp(-(dx * dx + dy * dy) * inv);
    }
  }
}

TexturalImage render_heightfield(const HeightField& h, double contrast,
                                 double noise_amplitude, double gain,
                                 double offset, Rng& rng) {
  const int n = static_cast<int>(h.rows());
  using Field = HeightField;
  Field gx = Field::Zero(n, n), gy = Field::Zero(n, n);
  gx.block(0, 1, n, n - 2) =
      0.5 * (h.block(0, 2, n, n - 2) - h.block(0, 0, n, n - 2));
  gy.block(1, 0, n - 2, n) =
      0.5 * (h.block(2, 0, n - 2, n) - h.block(0, 0, n - 2, n));

  // Two oblique lights on the height gradient plus a depth-tinted blue channel.
  Field r_f = 0.45 + contrast * (2.4 * gx + 0.25 * h);
  Field g_f = 0.45 + contrast * (2.4 * gy + 0.25 * h);
  Field b_f = 0.55 + contrast * (0.55 * h - 1.2 * gx.abs() - 1.2 * gy.abs());

  TexturalImage img = TexturalImage::zero(n, n);
  img.provenance = Provenance::synthetic;
  Field* planes[3] = {&r_f, &g_f, &b_f};
  for (int ch = 0; ch < 3; ++ch) {
    Field& f = *planes[ch];
    for (int y = 0; y < n; ++y)
      for (int x = 0; x < n; ++x) {
        double v = gain * f(y, x) + offset + noise_amplitude * rng.normal();
        img.ch[ch](y, x) =
            static_cast<uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
      }
  }
  return img;
}

namespace {

using Field = HeightField;  // (row, col) = (y, x)

// Smooth-edged elliptical plateau rotated by `ang`.
void add_plateau(Field& h, double cx, double cy, double rx, double ry,
                 double ang, double edge, double amp) {
  const int n = static_cast<int>(h.rows());
  const double ca = std::cos(ang), sa = std::sin(ang);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      double dx = x - cx, dy = y - cy;
      double u = (ca * dx + sa * dy) / rx;
      double v = (-sa * dx + ca * dy) / ry;
      double r = std::sqrt(u * u + v * v);
      h(y, x) += amp / (1.0 + std::exp((r - 1.0) * rx / edge));
    }
  }
}

}  // namespace

TexturalImage generate_phantom_image(const PhantomSpec& spec, uint64_t seed,
                                     const GeneratorConfig& cfg) {
  if (!spec.in_grid())
    throw ConfigError("spec outside grid: geometry_variant=" +
                      std::to_string(spec.geometry_variant));

  Rng rng(seed);
  const int n = kImageSize;
  const int j = spec.geometry_variant;
  const bool hard = cfg.difficulty == Difficulty::hard;

  // Geometry variant drives motif scale and orientation; hardness drives
  // indentation depth (softer material leaves a deeper imprint).
  const double scale = 0.72 + 0.12 * (j - 1);
  const double ang = (j - 1) * 0.39269908169872414 + rng.uniform(-0.1, 0.1);
  static const double depth_by_hardness[] = {1.0, 0.7, 0.45};
  const double depth = depth_by_hardness[static_cast<int>(spec.hardness)];

  const double jitter = hard ? 18.0 : 6.0;
  const double cx = n / 2.0 + rng.uniform(-jitter, jitter);
  const double cy = n / 2.0 + rng.uniform(-jitter, jitter);

  Field h = Field::Zero(n, n);
  switch (spec.polyp_class) {
    case PolypClass::T1: {
      // IIa: slightly elevated flat plateau with a granular surface.
      double r = 58.0 * scale;
      add_plateau(h, cx, cy, r, r * 0.92, ang, 7.0, 0.5);
      int bumps = 44 + 6 * j;
      for (int b = 0; b < bumps; ++b) {
        double rr = r * 0.85 * std::sqrt(rng.uniform());
        double th = rng.uniform(0, 6.283185307179586);
        add_gaussian_bump(h, cx + rr * std::cos(th), cy + rr * std::sin(th),
                     rng.uniform(2.0, 3.6), rng.uniform(0.08, 0.16));
      }
      break;
    }
    case PolypClass::T2: {
      // IIc: plateau with a central depression ring.
      double r = 54.0 * scale;
      add_plateau(h, cx, cy, r, r, ang, 7.0, 0.55);
      add_gaussian_bump(h, cx, cy, 16.0 * scale, -0.5);
      // Raised rim around the crater.
      int rim = 26;
      for (int b = 0; b < rim; ++b) {
        double th = b * 6.283185307179586 / rim + rng.uniform(-0.05, 0.05);
        double rr = 24.0 * scale + rng.uniform(-2.0, 2.0);
        add_gaussian_bump(h, cx + rr * std::cos(th), cy + rr * std::sin(th), 4.0,
                     0.10);
      }
      break;
    }
    case PolypClass::T3: {
      // Ip: single tall pedunculated dome on a narrow stalk.
      double sigma = 26.0 * scale;
      add_gaussian_bump(h, cx, cy, sigma, 0.95);
      add_gaussian_bump(h, cx, cy, sigma * 0.45, 0.25);
      // Stalk shoulder offset along the variant direction.
      add_gaussian_bump(h, cx + 30.0 * scale * std::cos(ang),
                   cy + 30.0 * scale * std::sin(ang), 12.0 * scale, 0.28);
      break;
    }
    case PolypClass::T4: {
      // LST: laterally spreading multi-nodular field.
      double rx = 82.0 * scale, ry = 46.0 * scale;
      add_plateau(h, cx, cy, rx, ry, ang, 9.0, 0.22);
      int nodules = 6 + 2 * j;
      const double ca = std::cos(ang), sa = std::sin(ang);
      for (int b = 0; b < nodules; ++b) {
        double u = rng.uniform(-0.8, 0.8) * rx;
        double v = rng.uniform(-0.7, 0.7) * ry;
        add_gaussian_bump(h, cx + ca * u - sa * v, cy + sa * u + ca * v,
                     rng.uniform(8.0, 13.0), rng.uniform(0.30, 0.48));
      }
      break;
    }
  }

  h *= depth;

  double gain = 1.0, offset = 0.0;
  if (hard) {
    // Illumination drift makes raw-pixel statistics unreliable.
    gain = rng.uniform(0.75, 1.25);
    offset = rng.uniform(-0.08, 0.08);
  }
  return render_heightfield(h, cfg.motif_contrast, cfg.noise_amplitude, gain,
                            offset, rng);
}

std::vector<std::pair<PhantomSpec, TexturalImage>> generate_corpus(
    const std::vector<PhantomSpec>& grid, const GeneratorConfig& cfg) {
  std::vector<std::string> seen;
  for (const auto& spec : grid) {
    std::string id = spec.base_id();
    if (std::find(seen.begin(), seen.end(), id) != seen.end())
      throw ConfigError("duplicate base_id in grid: " + id);
    seen.push_back(id);
  }
  std::vector<std::pair<PhantomSpec, TexturalImage>> out;
  out.reserve(grid.size());
  for (const auto& spec : grid) {
    uint64_t seed = per_spec_seed(cfg.master_seed, spec.base_id());
    out.emplace_back(spec, generate_phantom_image(spec, seed, cfg));
  }
  return out;
}

}  // namespace polybench

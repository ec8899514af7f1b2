#include "polybench/cnn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <sstream>

#include "polybench/augment.hpp"
#include "polybench/nn/weights.hpp"
#include "polybench/sha256.hpp"

namespace polybench {

const char* regime_name(Regime r) {
  return r == Regime::scratch ? "scratch" : "pretrained";
}

Regime regime_from_name(const std::string& name) {
  if (name == "scratch") return Regime::scratch;
  if (name == "pretrained") return Regime::pretrained;
  throw ConfigError("unknown regime: " + name);
}

CNNConfig CNNConfig::preset(Regime r, uint64_t seed) {
  CNNConfig cfg;
  cfg.regime = r;
  cfg.seed = seed;
  if (r == Regime::scratch) {
    cfg.learning_rate = 0.001;
    cfg.max_epochs = 50;
    cfg.patience = 10;
  } else {
    cfg.learning_rate = 0.0001;
    cfg.max_epochs = 20;
    cfg.patience = 5;
  }
  return cfg;
}

namespace {

nn::Tensor to_batch(const std::vector<const TexturalImage*>& imgs,
                    const std::vector<int>& idx,
                    const std::array<float, 3>& mean,
                    const std::array<float, 3>& std_dev) {
  nn::Tensor t(static_cast<int>(idx.size()), 3, kImageSize, kImageSize);
  for (size_t i = 0; i < idx.size(); ++i) {
    const TexturalImage& img = *imgs[idx[i]];
    float* dst = t.sample(static_cast<int>(i));
    for (int c = 0; c < 3; ++c) {
      float inv = 1.0f / (255.0f * std_dev[c]);
      float off = mean[c] / std_dev[c];
      for (int y = 0; y < kImageSize; ++y)
        for (int x = 0; x < kImageSize; ++x)
          *dst++ = img.ch[c](y, x) * inv - off;
    }
  }
  return t;
}

std::string backbone_checksum(nn::ResNet18& net) {
  std::string bytes;
  for (const auto* p : net.backbone_params())
    bytes.append(reinterpret_cast<const char*>(p->v.data()),
                 sizeof(float) * p->v.size());
  return sha256_hex(bytes);
}

std::string join3(const std::array<float, 3>& a) {
  std::ostringstream ss;
  ss << a[0] << ',' << a[1] << ',' << a[2];
  return ss.str();
}

std::array<float, 3> parse3(const std::string& s) {
  std::array<float, 3> out{};
  std::istringstream ss(s);
  std::string tok;
  for (int i = 0; i < 3; ++i) {
    if (!std::getline(ss, tok, ',')) throw ConfigError("bad 3-vector: " + s);
    out[i] = std::stof(tok);
  }
  return out;
}

}  // namespace

std::array<float, 3> channel_mean(const std::vector<const TexturalImage*>& imgs) {
  std::array<double, 3> sum{};
  for (const auto* img : imgs)
    for (int c = 0; c < 3; ++c)
      sum[c] += img->ch[c].cast<double>().mean() / 255.0;
  std::array<float, 3> out{};
  for (int c = 0; c < 3; ++c)
    out[c] = static_cast<float>(sum[c] / static_cast<double>(imgs.size()));
  return out;
}

std::array<float, 3> channel_std(const std::vector<const TexturalImage*>& imgs,
                                 const std::array<float, 3>& mean) {
  std::array<double, 3> sum{};
  for (const auto* img : imgs)
    for (int c = 0; c < 3; ++c) {
      auto a = img->ch[c].cast<double>() / 255.0;
      sum[c] += (a.array() - mean[c]).square().mean();
    }
  std::array<float, 3> out{};
  for (int c = 0; c < 3; ++c) {
    double v = sum[c] / static_cast<double>(imgs.size());
    out[c] = static_cast<float>(std::max(std::sqrt(v), 1e-3));
  }
  return out;
}

CNNModel build_resnet18(int num_classes, Regime regime, uint64_t seed,
                        const std::string& weights_path) {
  CNNModel model;
  model.net = std::make_unique<nn::ResNet18>(num_classes);
  model.regime = regime;
  if (regime == Regime::scratch) {
    model.net->init_scratch(seed);
  } else {
    if (weights_path.empty())
      throw ConfigError("pretrained regime requires a weights file");
    nn::LoadedWeights w = nn::load_weights(weights_path);
    nn::assign_weights(w, model.net->backbone_params());
    model.net->init_head(seed);
    if (auto it = w.metadata.find("norm_mean"); it != w.metadata.end())
      model.norm_mean = parse3(it->second);
    if (auto it = w.metadata.find("norm_std"); it != w.metadata.end())
      model.norm_std = parse3(it->second);
    model.source_checksum = backbone_checksum(*model.net);
    if (auto it = w.metadata.find("source_checksum"); it != w.metadata.end())
      if (it->second != model.source_checksum)
        throw DigestMismatch("backbone checksum mismatch for " + weights_path +
                             ": expected " + it->second + ", actual " +
                             model.source_checksum);
  }
  return model;
}

void CNNModel::save(const std::string& path, uint64_t seed) const {
  std::map<std::string, std::string> meta;
  meta["regime"] = regime_name(regime);
  meta["seed"] = std::to_string(seed);
  meta["num_classes"] = std::to_string(net->num_classes());
  meta["norm_mean"] = join3(norm_mean);
  meta["norm_std"] = join3(norm_std);
  meta["source_checksum"] = source_checksum;
  std::vector<const nn::Param*> params;
  for (auto* p : const_cast<nn::ResNet18&>(*net).params()) params.push_back(p);
  nn::save_weights(path, params, meta);
}

CNNModel load_cnn(const std::string& path) {
  nn::LoadedWeights w = nn::load_weights(path);
  auto meta_get = [&](const char* key) -> std::string {
    auto it = w.metadata.find(key);
    if (it == w.metadata.end())
      throw IoError(std::string("model file missing metadata key ") + key);
    return it->second;
  };
  CNNModel model;
  model.net = std::make_unique<nn::ResNet18>(std::stoi(meta_get("num_classes")));
  nn::assign_weights(w, model.net->params());
  model.regime = regime_from_name(meta_get("regime"));
  model.norm_mean = parse3(meta_get("norm_mean"));
  model.norm_std = parse3(meta_get("norm_std"));
  model.source_checksum = meta_get("source_checksum");
  return model;
}

void TrainingHistory::save(const std::string& path) const {
  std::ostringstream out;
  out << "{\n  \"stopped_epoch\": " << stopped_epoch
      << ",\n  \"best_epoch\": " << best_epoch << ",\n  \"epochs\": [\n";
  for (size_t i = 0; i < epochs.size(); ++i) {
    out << "    {\"train_loss\": " << epochs[i].train_loss
        << ", \"val_loss\": " << epochs[i].val_loss
        << ", \"val_accuracy\": " << epochs[i].val_accuracy << "}"
        << (i + 1 < epochs.size() ? "," : "") << "\n";
  }
  out << "  ]\n}\n";
  std::ofstream f(path);
  if (!f) throw IoError("cannot open for write: " + path);
  f << out.str();
}

namespace {

struct SgdState {
  std::vector<Eigen::VectorXf> velocity;

  explicit SgdState(const std::vector<nn::Param*>& params) {
    for (auto* p : params) velocity.push_back(Eigen::VectorXf::Zero(p->v.size()));
  }

  void step(const std::vector<nn::Param*>& params, double lr, double momentum) {
    for (size_t i = 0; i < params.size(); ++i) {
      auto* p = params[i];
      if (!p->trainable) continue;
      velocity[i] = static_cast<float>(momentum) * velocity[i] -
                    static_cast<float>(lr) * p->g;
      p->v += velocity[i];
    }
  }
};

void zero_grads(const std::vector<nn::Param*>& params) {
  for (auto* p : params) p->g.setZero();
}

std::vector<Eigen::VectorXf> snapshot(const std::vector<nn::Param*>& params) {
  std::vector<Eigen::VectorXf> out;
  out.reserve(params.size());
  for (auto* p : params) out.push_back(p->v);
  return out;
}

void restore(const std::vector<nn::Param*>& params,
             const std::vector<Eigen::VectorXf>& snap) {
  for (size_t i = 0; i < params.size(); ++i) params[i]->v = snap[i];
}

std::vector<int> label_ints(const std::vector<PolypClass>& labels) {
  std::vector<int> out(labels.size());
  for (size_t i = 0; i < labels.size(); ++i) out[i] = static_cast<int>(labels[i]);
  return out;
}

}  // namespace

TrainingHistory train_cnn(CNNModel& model,
                          const std::vector<const TexturalImage*>& train_imgs,
                          const std::vector<PolypClass>& train_labels,
                          const std::vector<const TexturalImage*>& val_imgs,
                          const std::vector<PolypClass>& val_labels,
                          const CNNConfig& cfg) {
  if (train_imgs.empty()) throw TrainingError("empty training set");
  if (val_imgs.empty()) throw TrainingError("empty validation set");
  if (train_imgs.size() != train_labels.size() ||
      val_imgs.size() != val_labels.size())
    throw TrainingError("images/labels size mismatch");

  if (model.regime == Regime::scratch) {
    model.norm_mean = channel_mean(train_imgs);
    model.norm_std = channel_std(train_imgs, model.norm_mean);
  }

  auto params = model.net->params();
  SgdState sgd(params);
  auto train_ints = label_ints(train_labels);

  TrainingHistory hist;
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Eigen::VectorXf> best_params = snapshot(params);
  int bad_epochs = 0;

  std::vector<int> order(train_imgs.size());
  std::iota(order.begin(), order.end(), 0);

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Rng rng(stable_hash64(cfg.seed, "epoch/" + std::to_string(epoch)));
    rng.shuffle(order);

    double loss_sum = 0;
    int batches = 0;
    for (size_t start = 0; start < order.size(); start += cfg.batch_size) {
      std::vector<int> idx(order.begin() + start,
                           order.begin() +
                               std::min(order.size(),
                                        start + static_cast<size_t>(cfg.batch_size)));
      std::vector<int> labels;
      for (int i : idx) labels.push_back(train_ints[i]);
      nn::Tensor batch = to_batch(train_imgs, idx, model.norm_mean, model.norm_std);

      zero_grads(params);
      try {
        Eigen::MatrixXf logits = model.net->forward(batch, /*train=*/true);
        auto ce = nn::softmax_cross_entropy(logits, labels);
        loss_sum += ce.loss;
        model.net->backward(ce.dlogits);
      } catch (const TrainingError& e) {
        throw TrainingError(std::string(e.what()) + " at epoch " +
                            std::to_string(epoch));
      }
      sgd.step(params, cfg.learning_rate, cfg.momentum);
      ++batches;
    }

    auto [val_loss, val_acc] =
        cnn_evaluate(model, val_imgs, val_labels, cfg.batch_size);

    EpochRecord rec;
    rec.train_loss = loss_sum / std::max(batches, 1);
    rec.val_loss = val_loss;
    rec.val_accuracy = val_acc;
    hist.epochs.push_back(rec);
    hist.stopped_epoch = epoch;

    if (val_loss < best_val - 1e-12) {
      best_val = val_loss;
      hist.best_epoch = epoch;
      best_params = snapshot(params);
      bad_epochs = 0;
    } else {
      ++bad_epochs;
      if (bad_epochs >= cfg.patience) break;
    }
  }

  restore(params, best_params);
  return hist;
}

CNNPrediction cnn_predict(CNNModel& model,
                          const std::vector<const TexturalImage*>& images,
                          int batch_size) {
  CNNPrediction out;
  out.scores.resize(static_cast<Eigen::Index>(images.size()),
                    model.net->num_classes());
  for (size_t start = 0; start < images.size();
       start += static_cast<size_t>(batch_size)) {
    std::vector<int> idx;
    for (size_t i = start;
         i < std::min(images.size(), start + static_cast<size_t>(batch_size)); ++i)
      idx.push_back(static_cast<int>(i));
    nn::Tensor batch = to_batch(images, idx, model.norm_mean, model.norm_std);
    Eigen::MatrixXf logits = model.net->forward(batch, /*train=*/false);
    for (size_t i = 0; i < idx.size(); ++i)
      out.scores.row(static_cast<Eigen::Index>(idx[i])) = logits.row((int)i);
  }
  out.labels.resize(images.size());
  for (size_t i = 0; i < images.size(); ++i) {
    Eigen::Index best;
    out.scores.row(static_cast<Eigen::Index>(i)).maxCoeff(&best);
    out.labels[i] = static_cast<PolypClass>(best);
  }
  return out;
}

std::pair<double, double> cnn_evaluate(
    CNNModel& model, const std::vector<const TexturalImage*>& images,
    const std::vector<PolypClass>& labels, int batch_size) {
  if (images.empty()) throw TrainingError("empty evaluation set");
  auto ints = label_ints(labels);
  double loss_sum = 0;
  int hits = 0;
  size_t done = 0;
  while (done < images.size()) {
    std::vector<int> idx;
    std::vector<int> lab;
    for (size_t i = done;
         i < std::min(images.size(), done + static_cast<size_t>(batch_size)); ++i) {
      idx.push_back(static_cast<int>(i));
      lab.push_back(ints[i]);
    }
    nn::Tensor batch = to_batch(images, idx, model.norm_mean, model.norm_std);
    Eigen::MatrixXf logits = model.net->forward(batch, /*train=*/false);
    auto ce = nn::softmax_cross_entropy(logits, lab);
    loss_sum += ce.loss * static_cast<double>(idx.size());
    for (size_t i = 0; i < idx.size(); ++i) {
      Eigen::Index best;
      logits.row((int)i).maxCoeff(&best);
      if (static_cast<int>(best) == lab[i]) ++hits;
    }
    done += idx.size();
  }
  return {loss_sum / static_cast<double>(images.size()),
          static_cast<double>(hits) / static_cast<double>(images.size())};
}

namespace {

// Proxy corpus: domain-randomized renderings of the four surface-motif
// families (plateau, crater, dome, nodular field) from a seed universe
// disjoint from any benchmark corpus. Geometry, hardness, contrast, noise
// and illumination are all randomized so the backbone learns
// nuisance-invariant motif features rather than any particular corpus.
TexturalImage proxy_texture(int cls, int num_classes, uint64_t seed) {
  Rng rng(seed);
  PhantomSpec spec;
  spec.polyp_class = static_cast<PolypClass>(cls % kNumClasses);
  spec.geometry_variant = 1 + static_cast<int>(rng.uniform_int(4));
  spec.hardness = static_cast<Hardness>(rng.uniform_int(3));

  GeneratorConfig gen;
  gen.difficulty = Difficulty::hard;  // enables illumination jitter
  gen.motif_contrast = rng.uniform(0.4, 1.0);
  gen.noise_amplitude = rng.uniform(0.02, 0.08);
  (void)num_classes;
  auto img = generate_phantom_image(spec, rng.next_u64(), gen);
  // Random dihedral pose: the downstream dataset is dihedral-augmented, so
  // pretraining should not anchor the motif orientation distribution.
  return apply_aug(img, static_cast<AugmentationOp>(rng.uniform_int(8)));
}

}  // namespace

std::string proxy_pretrain(const ProxyPretrainConfig& cfg,
                           const std::string& out_path) {
  std::vector<TexturalImage> corpus;
  std::vector<PolypClass> dummy;  // labels held as ints below
  std::vector<int> labels;
  for (int c = 0; c < cfg.num_classes; ++c)
    for (int i = 0; i < cfg.images_per_class; ++i) {
      corpus.push_back(proxy_texture(
          c, cfg.num_classes,
          stable_hash64(cfg.seed, "proxy/" + std::to_string(c) + "/" +
                                      std::to_string(i))));
      labels.push_back(c);
    }
  (void)dummy;

  std::vector<const TexturalImage*> ptrs;
  for (const auto& img : corpus) ptrs.push_back(&img);
  auto mean = channel_mean(ptrs);
  auto std_dev = channel_std(ptrs, mean);

  nn::ResNet18 net(cfg.num_classes);
  net.init_scratch(stable_hash64(cfg.seed, "proxy/init"));
  auto params = net.params();
  SgdState sgd(params);

  std::vector<int> order(corpus.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    Rng rng(stable_hash64(cfg.seed, "proxy/epoch/" + std::to_string(epoch)));
    rng.shuffle(order);
    for (size_t start = 0; start < order.size();
         start += static_cast<size_t>(cfg.batch_size)) {
      std::vector<int> idx(order.begin() + start,
                           order.begin() +
                               std::min(order.size(),
                                        start + static_cast<size_t>(cfg.batch_size)));
      std::vector<int> lab;
      for (int i : idx) lab.push_back(labels[i]);
      nn::Tensor batch = to_batch(ptrs, idx, mean, std_dev);
      zero_grads(params);
      Eigen::MatrixXf logits = net.forward(batch, /*train=*/true);
      auto ce = nn::softmax_cross_entropy(logits, lab);
      net.backward(ce.dlogits);
      sgd.step(params, cfg.learning_rate, cfg.momentum);
    }
  }

  std::string checksum = backbone_checksum(net);
  std::map<std::string, std::string> meta;
  meta["regime"] = "proxy";
  meta["seed"] = std::to_string(cfg.seed);
  meta["source_checksum"] = checksum;
  meta["norm_mean"] = join3(mean);
  meta["norm_std"] = join3(std_dev);
  std::vector<const nn::Param*> backbone;
  for (auto* p : net.backbone_params()) backbone.push_back(p);
  nn::save_weights(out_path, backbone, meta);
  return checksum;
}

}  // namespace polybench

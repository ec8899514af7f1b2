#include <doctest.h>

#include <filesystem>

#include "polybench/cnn.hpp"
#include "polybench/nn/layers.hpp"
#include "polybench/nn/weights.hpp"

using namespace polybench;
namespace fs = std::filesystem;

namespace {

TexturalImage noisy_class_image(int cls, uint64_t seed) {
  Rng rng(seed);
  auto img = TexturalImage::zero();
  for (int c = 0; c < 3; ++c)
    for (int r = 0; r < kImageSize; ++r)
      for (int col = 0; col < kImageSize; ++col) {
        int base = 40 + 50 * cls + (c == cls % 3 ? 30 : 0);
        int v = base + static_cast<int>(rng.uniform_int(40));
        img.ch[c](r, col) = static_cast<uint8_t>(std::min(v, 255));
      }
  return img;
}

}  // namespace

TEST_CASE("resnet forward produces one 4-logit row per sample") {
  nn::ResNet18 net(4);
  net.init_scratch(1);
  nn::Tensor x(2, 3, kImageSize, kImageSize);
  Rng rng(2);
  for (Eigen::Index i = 0; i < x.data.size(); ++i)
    x.data[i] = static_cast<float>(rng.normal()) * 0.1f;

  auto logits = net.forward(x, false);
  REQUIRE(logits.rows() == 2);
  REQUIRE(logits.cols() == 4);
  CHECK(logits.allFinite());
  // Distinct inputs produce distinct logits.
  CHECK((logits.row(0) - logits.row(1)).cwiseAbs().maxCoeff() > 0);
}

TEST_CASE("parameter inventory matches the 18-layer layout") {
  nn::ResNet18 net(4);
  auto all = net.params();
  auto backbone = net.backbone_params();
  CHECK(all.size() == backbone.size() + 2);  // + fc weight and bias

  int64_t trainable = 0;
  for (auto* p : all)
    if (p->trainable) trainable += p->v.size();
  // Standard resnet18 with a 4-way head and bias-free convolutions.
  CHECK(trainable == 11178564);
}

TEST_CASE("finite differences confirm the layer gradients") {
  // Tiny conv-relu-pool-linear network: 18 + 0 + 4 + 2 parameters.
  nn::Conv2d conv(1, 2, 3, 1, 1, "conv");
  nn::ReLU relu;
  nn::GlobalAvgPool gap;
  nn::Linear fc(2, 2, "fc");
  Rng rng(3);
  conv.init_he(rng);
  fc.init_he(rng);

  nn::Tensor x(2, 1, 4, 4);
  for (Eigen::Index i = 0; i < x.data.size(); ++i)
    x.data[i] = static_cast<float>(rng.normal());
  std::vector<int> labels = {0, 1};

  auto loss_of = [&]() {
    auto logits = fc.forward(gap.forward(relu.forward(conv.forward(x))));
    return nn::softmax_cross_entropy(logits, labels).loss;
  };

  // Analytic pass.
  auto logits = fc.forward(gap.forward(relu.forward(conv.forward(x))));
  auto ce = nn::softmax_cross_entropy(logits, labels);
  conv.weight().g.setZero();
  fc.weight().g.setZero();
  fc.bias().g.setZero();
  conv.backward(relu.backward(gap.backward(fc.backward(ce.dlogits))));

  std::vector<nn::Param*> params = {&conv.weight(), &fc.weight(), &fc.bias()};
  int checked = 0;
  for (auto* p : params) {
    for (Eigen::Index i = 0; i < p->v.size(); ++i) {
      float keep = p->v[i];
      const float eps = 3e-3f;
      p->v[i] = keep + eps;
      double up = loss_of();
      p->v[i] = keep - eps;
      double down = loss_of();
      p->v[i] = keep;
      double fd = (up - down) / (2.0 * eps);
      double an = p->g[i];
      double denom = std::max({std::abs(fd), std::abs(an), 0.05});
      CHECK(std::abs(fd - an) / denom < 1e-3);
      ++checked;
    }
  }
  CHECK(checked == 24);
}

TEST_CASE("a few SGD steps reduce the training loss") {
  std::vector<TexturalImage> storage;
  std::vector<const TexturalImage*> imgs;
  std::vector<PolypClass> labels;
  for (int c = 0; c < 4; ++c)
    for (int i = 0; i < 2; ++i) {
      storage.push_back(noisy_class_image(c, 100 + 10 * c + i));
      labels.push_back(static_cast<PolypClass>(c));
    }
  for (const auto& img : storage) imgs.push_back(&img);

  auto model = build_resnet18(4, Regime::scratch, 5);
  CNNConfig cfg = CNNConfig::preset(Regime::scratch, 5);
  cfg.max_epochs = 4;
  cfg.patience = 4;
  cfg.batch_size = 8;
  cfg.learning_rate = 0.01;
  auto hist = train_cnn(model, imgs, labels, imgs, labels, cfg);

  REQUIRE(hist.epochs.size() >= 2);
  CHECK(hist.epochs.back().train_loss < hist.epochs.front().train_loss);
  CHECK(hist.stopped_epoch == static_cast<int>(hist.epochs.size()));
  CHECK(hist.best_epoch >= 1);
  CHECK(hist.best_epoch <= hist.stopped_epoch);
}

TEST_CASE("a constant-loss plateau stops after exactly patience+1 epochs") {
  std::vector<TexturalImage> storage;
  std::vector<const TexturalImage*> imgs;
  std::vector<PolypClass> labels;
  for (int c = 0; c < 4; ++c) {
    storage.push_back(noisy_class_image(c, 200 + c));
    labels.push_back(static_cast<PolypClass>(c));
  }
  for (const auto& img : storage) imgs.push_back(&img);

  auto model = build_resnet18(4, Regime::scratch, 6);
  // All-zero parameters and a zero learning rate pin the logits at zero, so
  // validation loss is exactly ln(4) every epoch: a perfect plateau.
  for (auto* p : model.net->params()) p->v.setZero();
  CNNConfig cfg = CNNConfig::preset(Regime::scratch, 6);
  cfg.learning_rate = 0.0;
  cfg.max_epochs = 50;
  cfg.patience = 3;
  cfg.batch_size = 4;
  auto hist = train_cnn(model, imgs, labels, imgs, labels, cfg);
  CHECK(hist.stopped_epoch == cfg.patience + 1);
  CHECK(hist.best_epoch == 1);
}

TEST_CASE("weights round-trip through the container format") {
  fs::path dir = fs::temp_directory_path() / "pb_cnn";
  fs::create_directories(dir);

  nn::ResNet18 net(4);
  net.init_scratch(9);
  auto path = (dir / "w.safetensors").string();
  std::vector<const nn::Param*> cparams;
  for (auto* p : net.params()) cparams.push_back(p);
  nn::save_weights(path, cparams, {{"regime", "test"}, {"note", "roundtrip"}});

  auto loaded = nn::load_weights(path);
  CHECK(loaded.metadata.at("regime") == "test");
  CHECK(loaded.tensors.size() == cparams.size());

  nn::ResNet18 other(4);
  other.init_scratch(10);
  nn::assign_weights(loaded, other.params());
  for (size_t i = 0; i < cparams.size(); ++i) {
    auto* mine = net.params()[i];
    auto* theirs = other.params()[i];
    REQUIRE(mine->name == theirs->name);
    CHECK(mine->v == theirs->v);
  }

  SUBCASE("shape mismatches are rejected") {
    nn::ResNet18 wide(7);
    CHECK_THROWS_AS(nn::assign_weights(loaded, wide.params()), IoError);
  }
  fs::remove_all(dir);
}

TEST_CASE("a saved model predicts identically after reload") {
  fs::path dir = fs::temp_directory_path() / "pb_cnn_model";
  fs::create_directories(dir);

  auto model = build_resnet18(4, Regime::scratch, 13);
  model.norm_mean = {0.4f, 0.5f, 0.6f};
  model.norm_std = {0.2f, 0.25f, 0.3f};
  auto path = (dir / "m.safetensors").string();
  model.save(path, 13);

  auto back = load_cnn(path);
  CHECK(back.regime == Regime::scratch);
  CHECK(back.norm_mean == model.norm_mean);
  CHECK(back.norm_std == model.norm_std);

  std::vector<TexturalImage> storage = {noisy_class_image(0, 1),
                                        noisy_class_image(2, 2)};
  std::vector<const TexturalImage*> imgs = {&storage[0], &storage[1]};
  auto p1 = cnn_predict(model, imgs);
  auto p2 = cnn_predict(back, imgs);
  CHECK(p1.labels == p2.labels);
  CHECK(p1.scores == p2.scores);
  fs::remove_all(dir);
}

TEST_CASE("channel statistics match a direct computation") {
  auto img = TexturalImage::zero();
  for (int c = 0; c < 3; ++c) img.ch[c].setConstant(static_cast<uint8_t>(51 * (c + 1)));
  std::vector<const TexturalImage*> imgs = {&img};
  auto mean = channel_mean(imgs);
  CHECK(mean[0] == doctest::Approx(51.0 / 255.0));
  CHECK(mean[1] == doctest::Approx(102.0 / 255.0));
  CHECK(mean[2] == doctest::Approx(153.0 / 255.0));
  auto sd = channel_std(imgs, mean);
  for (int c = 0; c < 3; ++c) CHECK(sd[c] >= 0.0f);
}

#include "polybench/nn/resnet.hpp"

namespace polybench::nn {

BasicBlock::BasicBlock(int in_c, int out_c, int stride, const std::string& name)
    : conv1_(in_c, out_c, 3, stride, 1, name + ".conv1"),
      conv2_(out_c, out_c, 3, 1, 1, name + ".conv2"),
      bn1_(out_c, name + ".bn1"),
      bn2_(out_c, name + ".bn2") {
  if (stride != 1 || in_c != out_c) {
    has_downsample_ = true;
    down_conv_ = Conv2d(in_c, out_c, 1, stride, 0, name + ".downsample.0");
    down_bn_ = BatchNorm2d(out_c, name + ".downsample.1");
  }
}

void BasicBlock::init_he(Rng& rng) {
  conv1_.init_he(rng);
  conv2_.init_he(rng);
  if (has_downsample_) down_conv_.init_he(rng);
}

Tensor BasicBlock::forward(const Tensor& x, bool train) {
  Tensor main = relu1_.forward(bn1_.forward(conv1_.forward(x), train));
  main = bn2_.forward(conv2_.forward(main), train);
  Tensor shortcut =
      has_downsample_ ? down_bn_.forward(down_conv_.forward(x), train) : x;
  main.data += shortcut.data;
  return relu2_.forward(main);
}

Tensor BasicBlock::backward(const Tensor& dy) {
  Tensor d = relu2_.backward(dy);
  Tensor dmain = conv1_.backward(
      bn1_.backward(relu1_.backward(conv2_.backward(bn2_.backward(d)))));
  Tensor dshort =
      has_downsample_ ? down_conv_.backward(down_bn_.backward(d)) : std::move(d);
  dmain.data += dshort.data;
  return dmain;
}

std::vector<Param*> BasicBlock::params() {
  std::vector<Param*> out;
  for (auto* p : conv1_.params()) out.push_back(p);
  for (auto* p : bn1_.params()) out.push_back(p);
  for (auto* p : conv2_.params()) out.push_back(p);
  for (auto* p : bn2_.params()) out.push_back(p);
  if (has_downsample_) {
    for (auto* p : down_conv_.params()) out.push_back(p);
    for (auto* p : down_bn_.params()) out.push_back(p);
  }
  return out;
}

ResNet18::ResNet18(int num_classes)
    : num_classes_(num_classes),
      conv1_(3, 64, 7, 2, 3, "conv1"),
      bn1_(64, "bn1"),
      fc_(512, num_classes, "fc") {
  const int channels[4] = {64, 128, 256, 512};
  int in_c = 64;
  for (int stage = 0; stage < 4; ++stage) {
    for (int b = 0; b < 2; ++b) {
      int stride = (stage > 0 && b == 0) ? 2 : 1;
      std::string name =
          "layer" + std::to_string(stage + 1) + "." + std::to_string(b);
      blocks_.push_back(
          std::make_unique<BasicBlock>(in_c, channels[stage], stride, name));
      in_c = channels[stage];
    }
  }
}

void ResNet18::init_scratch(uint64_t seed) {
  Rng rng(seed);
  conv1_.init_he(rng);
  for (auto& b : blocks_) b->init_he(rng);
  fc_.init_he(rng);
}

void ResNet18::init_head(uint64_t seed) {
  Rng rng(stable_hash64(seed, "head"));
  fc_.init_he(rng);
}

Eigen::MatrixXf ResNet18::forward(const Tensor& x, bool train) {
  Tensor t = pool_.forward(relu_.forward(bn1_.forward(conv1_.forward(x), train)));
  for (auto& b : blocks_) t = b->forward(t, train);
  return fc_.forward(gap_.forward(t));
}

void ResNet18::backward(const Eigen::MatrixXf& dlogits) {
  Tensor d = gap_.backward(fc_.backward(dlogits));
  for (auto it = blocks_.rbegin(); it != blocks_.rend(); ++it)
    d = (*it)->backward(d);
  conv1_.backward(bn1_.backward(relu_.backward(pool_.backward(d))));
}

std::vector<Param*> ResNet18::params() {
  std::vector<Param*> out = backbone_params();
  for (auto* p : fc_.params()) out.push_back(p);
  return out;
}

std::vector<Param*> ResNet18::backbone_params() {
  std::vector<Param*> out;
  for (auto* p : conv1_.params()) out.push_back(p);
  for (auto* p : bn1_.params()) out.push_back(p);
  for (auto& b : blocks_)
    for (auto* p : b->params()) out.push_back(p);
  return out;
}

}  // namespace polybench::nn

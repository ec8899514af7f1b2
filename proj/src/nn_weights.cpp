#include "polybench/nn/weights.hpp"

#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "polybench/common.hpp"

using json = nlohmann::json;

namespace polybench::nn {

void save_weights(const std::string& path,
                  const std::vector<const Param*>& params,
                  const std::map<std::string, std::string>& metadata) {
  json header;
  if (!metadata.empty()) header["__metadata__"] = metadata;
  uint64_t offset = 0;
  for (const auto* p : params) {
    uint64_t bytes = sizeof(float) * static_cast<uint64_t>(p->v.size());
    header[p->name] = {{"dtype", "F32"},
                       {"shape", p->shape},
                       {"data_offsets", {offset, offset + bytes}}};
    offset += bytes;
  }
  std::string hs = header.dump();

  std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot open for write: " + tmp);
    uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), 8);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    for (const auto* p : params)
      out.write(reinterpret_cast<const char*>(p->v.data()),
                static_cast<std::streamsize>(sizeof(float) * p->v.size()));
    if (!out) throw IoError("write failed: " + tmp);
  }
  std::rename(tmp.c_str(), path.c_str());
}

LoadedWeights load_weights(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open weights file: " + path);
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), 8);
  if (!in || hlen == 0 || hlen > (1u << 26))
    throw IoError("corrupt weights header in " + path);
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  if (!in) throw IoError("truncated weights header in " + path);

  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    throw IoError("corrupt weights file " + path + ": " + e.what());
  }

  std::string payload((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());

  LoadedWeights w;
  for (auto& [name, spec] : header.items()) {
    if (name == "__metadata__") {
      for (auto& [k, v] : spec.items()) w.metadata[k] = v.get<std::string>();
      continue;
    }
    if (spec.at("dtype").get<std::string>() != "F32")
      throw IoError("unsupported dtype for tensor " + name);
    auto shape = spec.at("shape").get<std::vector<int64_t>>();
    uint64_t b0 = spec.at("data_offsets").at(0).get<uint64_t>();
    uint64_t b1 = spec.at("data_offsets").at(1).get<uint64_t>();
    if (b1 < b0 || b1 > payload.size())
      throw IoError("tensor " + name + " offsets out of range in " + path);
    int64_t count = static_cast<int64_t>((b1 - b0) / sizeof(float));
    int64_t expect = 1;
    for (auto d : shape) expect *= d;
    if (count != expect)
      throw IoError("tensor " + name + " size/shape mismatch in " + path);
    Eigen::VectorXf v(count);
    std::memcpy(v.data(), payload.data() + b0, b1 - b0);
    w.tensors[name] = {std::move(shape), std::move(v)};
  }
  return w;
}

void assign_weights(const LoadedWeights& w, const std::vector<Param*>& params) {
  for (auto* p : params) {
    auto it = w.tensors.find(p->name);
    if (it == w.tensors.end())
      throw IoError("weights file missing tensor: " + p->name);
    if (it->second.first != p->shape)
      throw IoError("shape mismatch for tensor " + p->name);
    p->v = it->second.second;
  }
}

}  // namespace polybench::nn

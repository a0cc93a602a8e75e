#include "fedsense/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <vector>

#include <nlohmann/json.hpp>

namespace fedsense {

namespace {

constexpr char kMagic[4] = {'F', 'S', 'N', 'N'};
constexpr std::uint32_t kVersion = 1;

void put_u32(std::string& out, std::uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

std::uint32_t get_u32(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) |
         (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace

void write_model_binary(const std::filesystem::path& path, const ModelParams& model) {
  std::vector<double> flat = to_flat(model);
  std::string buf;
  buf.reserve(static_cast<std::size_t>(kModelPacketBytes));
  buf.append(kMagic, 4);
  put_u32(buf, kVersion);
  put_u32(buf, static_cast<std::uint32_t>(model.layers.size()));
  put_u32(buf, 0);  // reserved
  for (double v : flat) {
    put_u32(buf, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  std::ofstream out(path, std::ios::binary);
  if (!out.write(buf.data(), static_cast<std::streamsize>(buf.size()))) {
    throw std::runtime_error("cannot write model file " + path.string());
  }
}

ModelParams read_model_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open model file " + path.string());
  std::vector<unsigned char> buf((std::istreambuf_iterator<char>(in)),
                                 std::istreambuf_iterator<char>());
  if (buf.size() != static_cast<std::size_t>(kModelPacketBytes)) {
    throw std::runtime_error("model file has wrong size: " + path.string());
  }
  if (std::memcmp(buf.data(), kMagic, 4) != 0) {
    throw std::runtime_error("bad magic in model file " + path.string());
  }
  if (get_u32(buf.data() + 4) != kVersion) {
    throw std::runtime_error("unsupported model file version in " + path.string());
  }
  if (get_u32(buf.data() + 8) != kLayerShapes.size()) {
    throw std::runtime_error("unexpected layer count in " + path.string());
  }
  std::vector<double> flat;
  flat.reserve(kParameterCount);
  for (std::size_t pos = kModelHeaderBytes; pos < buf.size(); pos += 4) {
    flat.push_back(static_cast<double>(
        std::bit_cast<float>(get_u32(buf.data() + pos))));
  }
  return from_flat(flat);
}

void write_model_json(const std::filesystem::path& path, const ModelParams& model) {
  nlohmann::json doc;
  doc["format"] = "fedsense-model";
  doc["version"] = kVersion;
  for (const auto& layer : model.layers) {
    nlohmann::json jl;
    jl["fan_in"] = layer.weights.cols();
    jl["fan_out"] = layer.weights.rows();
    auto& w = jl["weights"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < layer.weights.rows(); ++r) {
      for (Eigen::Index c = 0; c < layer.weights.cols(); ++c) {
        w.push_back(layer.weights(r, c));
      }
    }
    auto& b = jl["biases"] = nlohmann::json::array();
    for (Eigen::Index r = 0; r < layer.biases.size(); ++r) b.push_back(layer.biases(r));
    doc["layers"].push_back(std::move(jl));
  }
  std::ofstream out(path);
  out << doc.dump(2) << '\n';
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

}  // namespace fedsense

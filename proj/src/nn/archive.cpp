#include "discoder/nn/archive.hpp"

#include "discoder/errors.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <sstream>

namespace discoder::nn {
namespace {

using nlohmann::json;

template <class T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
  return v;
}

void put_u64(std::string& out, std::uint64_t v) {
  v = to_little(v);
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::string& out, double v) {
  v = to_little(v);
  out.append(reinterpret_cast<const char*>(&v), sizeof v);
}

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void write_file_atomic(const std::filesystem::path& path, const std::string& bytes) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError("cannot write " + tmp.string());
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw InputError("short write to " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

void write_archive(const std::filesystem::path& path, const Archive& archive) {
  json manifest;
  manifest["layers"] = archive.layers;
  manifest["meta"] = archive.meta;
  manifest["tensors"] = json::array();
  for (const auto& t : archive.tensors)
    manifest["tensors"].push_back({{"name", t.name}, {"shape", {t.value.rows(), t.value.cols()}}});
  const std::string text = manifest.dump();

  std::string out(kArchiveMagic, 5);
  put_u64(out, text.size());
  out += text;
  for (const auto& t : archive.tensors)
    for (Eigen::Index i = 0; i < t.value.size(); ++i) put_f64(out, t.value.data()[i]);
  write_file_atomic(path, out);
}

Archive read_archive(const std::filesystem::path& path) {
  const std::string bytes = read_all(path);
  const std::string where = path.string() + ": ";
  if (bytes.size() < 13 || bytes.compare(0, 5, kArchiveMagic) != 0)
    throw FormatError(where + "magic: expected \"DISC1\"");
  std::uint64_t len = 0;
  std::memcpy(&len, bytes.data() + 5, 8);
  len = to_little(len);
  if (13 + len > bytes.size()) throw FormatError(where + "manifest length exceeds file size");
  json manifest;
  try {
    manifest = json::parse(bytes.substr(13, len));
  } catch (const json::exception& e) {
    throw FormatError(where + "manifest: " + e.what());
  }
  Archive a;
  a.layers = manifest.value("layers", json::array());
  a.meta = manifest.value("meta", json::object());
  std::size_t offset = 13 + len;
  for (const auto& t : manifest.at("tensors")) {
    const auto rows = t.at("shape").at(0).get<Eigen::Index>();
    const auto cols = t.at("shape").at(1).get<Eigen::Index>();
    if (rows < 0 || cols < 0) throw FormatError(where + "tensor shape: negative dimension");
    const std::size_t need = static_cast<std::size_t>(rows * cols) * 8;
    if (offset + need > bytes.size())
      throw FormatError(where + "tensor '" + t.at("name").get<std::string>() + "': payload truncated");
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      double v;
      std::memcpy(&v, bytes.data() + offset, 8);
      m.data()[i] = to_little(v);
      offset += 8;
    }
    a.tensors.push_back({t.at("name").get<std::string>(), std::move(m)});
  }
  if (offset != bytes.size()) throw FormatError(where + "trailing bytes after tensor payload");
  return a;
}

json layers_to_json(const std::vector<LayerSpec>& layers) {
  json out = json::array();
  for (const auto& l : layers) {
    if (const auto* d = std::get_if<Dense>(&l))
      out.push_back({{"type", "dense"}, {"in", d->in}, {"out", d->out}});
    else if (const auto* a = std::get_if<Activation>(&l))
      out.push_back({{"type", "activation"}, {"kind", to_string(a->kind)}, {"slope", a->slope}});
    else if (const auto* p = std::get_if<Dropout>(&l))
      out.push_back({{"type", "dropout"}, {"rate", p->rate}});
    else if (const auto* s = std::get_if<SoftmaxHead>(&l))
      out.push_back({{"type", "softmax_head"}, {"classes", s->classes}});
    else if (const auto* g = std::get_if<GaussianHead>(&l))
      out.push_back({{"type", "gaussian_head"}, {"dim", g->dim}});
  }
  return out;
}

std::vector<LayerSpec> layers_from_json(const json& j) {
  std::vector<LayerSpec> layers;
  try {
    for (const auto& l : j) {
      const auto type = l.at("type").get<std::string>();
      if (type == "dense")
        layers.emplace_back(Dense{l.at("in").get<std::size_t>(), l.at("out").get<std::size_t>()});
      else if (type == "activation")
        layers.emplace_back(Activation{parse_activation(l.at("kind").get<std::string>()), l.value("slope", 0.2)});
      else if (type == "dropout")
        layers.emplace_back(Dropout{l.at("rate").get<double>()});
      else if (type == "softmax_head")
        layers.emplace_back(SoftmaxHead{l.at("classes").get<std::size_t>()});
      else if (type == "gaussian_head")
        layers.emplace_back(GaussianHead{l.at("dim").get<std::size_t>()});
      else
        throw FormatError("layers: unknown layer type '" + type + "'");
    }
  } catch (const json::exception& e) {
    throw FormatError(std::string("layers: ") + e.what());
  }
  return layers;
}

void save_network(const std::filesystem::path& path, const Network& net) {
  Archive a;
  a.layers = layers_to_json(net.layers());
  for (std::size_t i = 0; i < net.parameters().size(); ++i)
    a.tensors.push_back({"param" + std::to_string(i), net.parameters()[i]});
  write_archive(path, a);
}

Network load_network(const std::filesystem::path& path) {
  Archive a = read_archive(path);
  Network net(layers_from_json(a.layers));
  if (a.tensors.size() != net.parameters().size())
    throw FormatError(path.string() + ": tensors: expected " + std::to_string(net.parameters().size()) +
                      " parameter tensors, found " + std::to_string(a.tensors.size()));
  for (std::size_t i = 0; i < a.tensors.size(); ++i) {
    auto& p = net.parameters()[i];
    if (a.tensors[i].value.rows() != p.rows() || a.tensors[i].value.cols() != p.cols())
      throw FormatError(path.string() + ": tensor '" + a.tensors[i].name + "' shape does not match layer spec");
    p = std::move(a.tensors[i].value);
  }
  return net;
}

void save_adam(const std::filesystem::path& path, const AdamState& state) {
  Archive a;
  a.meta = {{"kind", "adam"},
            {"step", state.step},
            {"learning_rate", state.config.learning_rate},
            {"beta1", state.config.beta1},
            {"beta2", state.config.beta2},
            {"epsilon", state.config.epsilon}};
  for (std::size_t i = 0; i < state.m.size(); ++i) {
    a.tensors.push_back({"m" + std::to_string(i), state.m[i]});
    a.tensors.push_back({"v" + std::to_string(i), state.v[i]});
  }
  write_archive(path, a);
}

AdamState load_adam(const std::filesystem::path& path) {
  Archive a = read_archive(path);
  if (a.meta.value("kind", "") != "adam") throw FormatError(path.string() + ": meta.kind: expected \"adam\"");
  if (a.tensors.size() % 2 != 0) throw FormatError(path.string() + ": tensors: odd moment count");
  AdamState s;
  s.step = a.meta.at("step").get<std::uint64_t>();
  s.config.learning_rate = a.meta.at("learning_rate").get<double>();
  s.config.beta1 = a.meta.at("beta1").get<double>();
  s.config.beta2 = a.meta.at("beta2").get<double>();
  s.config.epsilon = a.meta.at("epsilon").get<double>();
  for (std::size_t i = 0; i < a.tensors.size(); i += 2) {
    s.m.push_back(std::move(a.tensors[i].value));
    s.v.push_back(std::move(a.tensors[i + 1].value));
  }
  return s;
}

}  // namespace discoder::nn

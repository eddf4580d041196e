#include "lagdyn/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>

#include "json.hpp"

namespace lagdyn {

namespace {

using nlohmann::json;

constexpr std::array<char, 8> kMagic{'L', 'G', 'D', 'Y', 'N', 'C', 'K', 'P'};

static_assert(std::endian::native == std::endian::little, "binary checkpoints assume little-endian");

json shape_to_json(const BundleShape& s) {
  return {{"dof", s.dof},       {"hidden_width", s.hidden_width}, {"hidden_layers", s.hidden_layers},
          {"channels", s.channels}, {"stages", s.stages},         {"kernel_size", s.kernel_size}};
}

BundleShape shape_from_json(const json& j) {
  BundleShape s;
  s.dof = j.at("dof").get<Index>();
  s.hidden_width = j.at("hidden_width").get<Index>();
  s.hidden_layers = j.at("hidden_layers").get<Index>();
  s.channels = j.at("channels").get<Index>();
  s.stages = j.at("stages").get<Index>();
  s.kernel_size = j.at("kernel_size").get<Index>();
  return s;
}

net::TensorRef& find_tensor(std::vector<net::TensorRef>& tensors, const std::string& name, Index rows,
                            Index cols) {
  for (auto& t : tensors) {
    if (t.name == name) {
      if (t.rows != rows || t.cols != cols) {
        throw DataUnreadable("checkpoint tensor " + name + " has unexpected shape");
      }
      return t;
    }
  }
  throw DataUnreadable("checkpoint contains unknown tensor " + name);
}

template <class T>
void write_pod(std::ostream& out, const T& v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T read_pod(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) {
    throw DataUnreadable("truncated binary checkpoint");
  }
  return v;
}

}  // namespace

void save_checkpoint_json(ParameterBundle& bundle, const std::filesystem::path& path) {
  json doc;
  doc["format_version"] = kCheckpointFormatVersion;
  doc["shape"] = shape_to_json(bundle.shape);
  json tensors = json::array();
  for (const auto& t : bundle.tensors()) {
    tensors.push_back({{"name", t.name},
                       {"shape", {t.rows, t.cols}},
                       {"data", std::vector<double>(t.value, t.value + t.size())}});
  }
  doc["tensors"] = std::move(tensors);
  std::ofstream out(path);
  if (!out) {
    throw DataUnreadable("cannot write checkpoint " + path.string());
  }
  out << doc.dump() << '\n';
}

ParameterBundle load_checkpoint_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw DataUnreadable("cannot open checkpoint " + path.string());
  }
  try {
    const json doc = json::parse(in);
    if (doc.at("format_version").get<int>() != kCheckpointFormatVersion) {
      throw DataUnreadable("unsupported checkpoint format version");
    }
    ParameterBundle bundle = ParameterBundle::initialize(shape_from_json(doc.at("shape")), 0);
    auto tensors = bundle.tensors();
    std::size_t seen = 0;
    for (const auto& jt : doc.at("tensors")) {
      const auto dims = jt.at("shape").get<std::array<Index, 2>>();
      auto& t = find_tensor(tensors, jt.at("name").get<std::string>(), dims[0], dims[1]);
      const auto& data = jt.at("data");
      if (static_cast<Index>(data.size()) != t.size()) {
        throw DataUnreadable("checkpoint tensor " + t.name + " has wrong element count");
      }
      for (Index i = 0; i < t.size(); ++i) {
        t.value[i] = data[static_cast<std::size_t>(i)].get<double>();
      }
      ++seen;
    }
    if (seen != tensors.size()) {
      throw DataUnreadable("checkpoint is missing tensors");
    }
    bundle.zero_grad();
    return bundle;
  } catch (const json::exception& e) {
    throw DataUnreadable("malformed checkpoint " + path.string() + ": " + e.what());
  } catch (const ShapeMismatch& e) {
    throw DataUnreadable(std::string("checkpoint shape is invalid: ") + e.what());
  }
}

void save_checkpoint_binary(ParameterBundle& bundle, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw DataUnreadable("cannot write checkpoint " + path.string());
  }
  out.write(kMagic.data(), kMagic.size());
  write_pod<std::uint32_t>(out, kCheckpointFormatVersion);
  const auto& s = bundle.shape;
  for (Index v : {s.dof, s.hidden_width, s.hidden_layers, s.channels, s.stages, s.kernel_size}) {
    write_pod<std::int64_t>(out, v);
  }
  const auto tensors = bundle.tensors();
  write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const auto& t : tensors) {
    write_pod<std::uint32_t>(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    write_pod<std::int64_t>(out, t.rows);
    write_pod<std::int64_t>(out, t.cols);
    out.write(reinterpret_cast<const char*>(t.value), static_cast<std::streamsize>(t.size() * sizeof(double)));
  }
}

ParameterBundle load_checkpoint_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw DataUnreadable("cannot open checkpoint " + path.string());
  }
  std::array<char, 8> magic{};
  in.read(magic.data(), magic.size());
  if (!in || magic != kMagic) {
    throw DataUnreadable("not a binary checkpoint: " + path.string());
  }
  if (read_pod<std::uint32_t>(in) != kCheckpointFormatVersion) {
    throw DataUnreadable("unsupported checkpoint format version");
  }
  BundleShape s;
  s.dof = read_pod<std::int64_t>(in);
  s.hidden_width = read_pod<std::int64_t>(in);
  s.hidden_layers = read_pod<std::int64_t>(in);
  s.channels = read_pod<std::int64_t>(in);
  s.stages = read_pod<std::int64_t>(in);
  s.kernel_size = read_pod<std::int64_t>(in);
  ParameterBundle bundle;
  try {
    bundle = ParameterBundle::initialize(s, 0);
  } catch (const ShapeMismatch& e) {
    throw DataUnreadable(std::string("checkpoint shape is invalid: ") + e.what());
  }
  auto tensors = bundle.tensors();
  const auto count = read_pod<std::uint32_t>(in);
  if (count != tensors.size()) {
    throw DataUnreadable("checkpoint tensor count mismatch");
  }
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto len = read_pod<std::uint32_t>(in);
    if (len > 4096) {
      throw DataUnreadable("corrupt tensor name in checkpoint");
    }
    std::string name(len, '\0');
    in.read(name.data(), len);
    const auto rows = read_pod<std::int64_t>(in);
    const auto cols = read_pod<std::int64_t>(in);
    auto& t = find_tensor(tensors, name, rows, cols);
    in.read(reinterpret_cast<char*>(t.value), static_cast<std::streamsize>(t.size() * sizeof(double)));
    if (!in) {
      throw DataUnreadable("truncated binary checkpoint");
    }
  }
  bundle.zero_grad();
  return bundle;
}

void save_checkpoint(ParameterBundle& bundle, const std::filesystem::path& path) {
  if (path.extension() == ".json") {
    save_checkpoint_json(bundle, path);
  } else {
    save_checkpoint_binary(bundle, path);
  }
}

ParameterBundle load_checkpoint(const std::filesystem::path& path) {
  return path.extension() == ".json" ? load_checkpoint_json(path) : load_checkpoint_binary(path);
}

}  // namespace lagdyn

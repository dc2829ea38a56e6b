#pragma once

// NPY v1.0 tensors: VectorField as float32 (H, W, D), LabelMap as uint32
// (H, W), graphs as float32 (num_offsets, H, W) plus a JSON sidecar naming
// the offsets. In-bounds edges that were not sampled are stored as NaN;
// out-of-bounds entries are 0 and masked on load.

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <type_traits>
#include <vector>

#include "json.hpp"

#include "metricseg/core.hpp"

namespace metricseg {

static_assert(std::endian::native == std::endian::little, "NPY I/O assumes a little-endian host");

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised when a file parses but holds the wrong element type.
class DtypeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct NpyArray {
  std::string descr;
  std::vector<std::size_t> shape;
  std::vector<char> bytes;

  std::size_t count() const {
    std::size_t n = 1;
    for (auto s : shape) n *= s;
    return n;
  }
};

namespace npy {

template <typename T>
constexpr const char* descr_of() {
  if constexpr (std::is_same_v<T, float>) return "<f4";
  else if constexpr (std::is_same_v<T, double>) return "<f8";
  else if constexpr (std::is_same_v<T, std::uint32_t>) return "<u4";
  else if constexpr (std::is_same_v<T, std::uint8_t>) return "|u1";
  else static_assert(sizeof(T) == 0, "unsupported NPY element type");
}

inline std::string make_header(const std::string& descr, const std::vector<std::size_t>& shape) {
  std::ostringstream os;
  os << "{'descr': '" << descr << "', 'fortran_order': False, 'shape': (";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    os << shape[i];
    if (shape.size() == 1 || i + 1 < shape.size()) os << ",";
    if (i + 1 < shape.size()) os << " ";
  }
  os << "), }";
  std::string h = os.str();
  // magic(6) + version(2) + length(2) + header, padded to a multiple of 64.
  const std::size_t total = 10 + h.size() + 1;
  h.append((64 - total % 64) % 64, ' ');
  h.push_back('\n');
  return h;
}

template <typename T>
void write(const std::filesystem::path& path, const std::vector<std::size_t>& shape, const std::vector<T>& values) {
  const std::string header = make_header(descr_of<T>(), shape);
  if (header.size() > std::numeric_limits<std::uint16_t>::max()) throw IoError("NPY header too long");
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const char magic[] = {'\x93', 'N', 'U', 'M', 'P', 'Y', 1, 0};
  out.write(magic, sizeof(magic));
  const auto len = static_cast<std::uint16_t>(header.size());
  const char len_bytes[] = {static_cast<char>(len & 0xff), static_cast<char>(len >> 8)};
  out.write(len_bytes, 2);
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  out.write(reinterpret_cast<const char*>(values.data()), static_cast<std::streamsize>(values.size() * sizeof(T)));
  if (!out) throw IoError("failed writing " + path.string());
}

inline std::string dict_value(const std::string& header, const std::string& key) {
  const auto k = header.find("'" + key + "'");
  if (k == std::string::npos) throw IoError("NPY header lacks '" + key + "'");
  auto pos = header.find(':', k);
  if (pos == std::string::npos) throw IoError("malformed NPY header");
  ++pos;
  while (pos < header.size() && header[pos] == ' ') ++pos;
  if (pos >= header.size()) throw IoError("malformed NPY header");
  if (header[pos] == '\'') {
    const auto end = header.find('\'', pos + 1);
    if (end == std::string::npos) throw IoError("malformed NPY header");
    return header.substr(pos + 1, end - pos - 1);
  }
  if (header[pos] == '(') {
    const auto end = header.find(')', pos);
    if (end == std::string::npos) throw IoError("malformed NPY header");
    return header.substr(pos + 1, end - pos - 1);
  }
  const auto end = header.find_first_of(",}", pos);
  return header.substr(pos, end - pos);
}

inline NpyArray read(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, "\x93NUMPY", 6) != 0) throw IoError(path.string() + " is not an NPY file");
  if (magic[6] != 1 || magic[7] != 0) throw IoError(path.string() + ": only NPY version 1.0 is supported");
  unsigned char len_bytes[2];
  in.read(reinterpret_cast<char*>(len_bytes), 2);
  const std::size_t len = len_bytes[0] | (static_cast<std::size_t>(len_bytes[1]) << 8);
  std::string header(len, '\0');
  in.read(header.data(), static_cast<std::streamsize>(len));
  if (!in) throw IoError(path.string() + ": truncated header");

  NpyArray arr;
  arr.descr = dict_value(header, "descr");
  if (dict_value(header, "fortran_order") != "False") throw IoError(path.string() + ": Fortran order is not supported");
  std::stringstream dims(dict_value(header, "shape"));
  std::string item;
  while (std::getline(dims, item, ',')) {
    const auto first = item.find_first_not_of(' ');
    if (first == std::string::npos) continue;
    arr.shape.push_back(static_cast<std::size_t>(std::stoull(item.substr(first))));
  }
  std::size_t elem = 0;
  if (arr.descr == "<f4" || arr.descr == "<u4" || arr.descr == "<i4") elem = 4;
  else if (arr.descr == "<f8" || arr.descr == "<u8" || arr.descr == "<i8") elem = 8;
  else if (arr.descr == "|u1" || arr.descr == "|b1") elem = 1;
  else throw DtypeError(path.string() + ": unsupported dtype " + arr.descr);
  arr.bytes.resize(arr.count() * elem);
  in.read(arr.bytes.data(), static_cast<std::streamsize>(arr.bytes.size()));
  if (!in) throw IoError(path.string() + ": truncated data");
  return arr;
}

template <typename T>
std::vector<T> values(const NpyArray& arr, const std::string& what) {
  if (arr.descr != descr_of<T>()) {
    throw DtypeError(what + ": expected dtype " + descr_of<T>() + ", found " + arr.descr);
  }
  std::vector<T> out(arr.count());
  std::memcpy(out.data(), arr.bytes.data(), arr.bytes.size());
  return out;
}

}  // namespace npy

inline void write_field(const std::filesystem::path& path, const VectorField& field) {
  if (!field.all_finite()) throw ValueError("refusing to write a non-finite vector field");
  std::vector<float> v(field.data().begin(), field.data().end());
  npy::write(path,
             {static_cast<std::size_t>(field.height()), static_cast<std::size_t>(field.width()),
              static_cast<std::size_t>(field.dim())},
             v);
}

inline VectorField read_field(const std::filesystem::path& path) {
  const auto arr = npy::read(path);
  if (arr.shape.size() != 3) throw ShapeError(path.string() + ": vector field must have shape (H, W, D)");
  const auto f = npy::values<float>(arr, path.string());
  VectorField field(static_cast<int>(arr.shape[0]), static_cast<int>(arr.shape[1]), static_cast<int>(arr.shape[2]),
                    std::vector<double>(f.begin(), f.end()));
  if (!field.all_finite()) throw ValueError(path.string() + ": vector field holds NaN/Inf");
  return field;
}

inline void write_labels(const std::filesystem::path& path, const LabelMap& labels) {
  npy::write(path, {static_cast<std::size_t>(labels.height()), static_cast<std::size_t>(labels.width())},
             std::vector<std::uint32_t>(labels.data().begin(), labels.data().end()));
}

inline LabelMap read_labels(const std::filesystem::path& path) {
  const auto arr = npy::read(path);
  if (arr.shape.size() != 2) throw ShapeError(path.string() + ": label map must have shape (H, W)");
  return LabelMap(static_cast<int>(arr.shape[0]), static_cast<int>(arr.shape[1]),
                  npy::values<std::uint32_t>(arr, path.string()));
}

inline std::filesystem::path graph_sidecar(std::filesystem::path npy_path) {
  return npy_path.replace_extension(".json");
}

template <typename Kind>
constexpr const char* graph_kind_name() {
  return std::is_same_v<Kind, DistanceTag> ? "metric" : "affinity";
}

template <typename Kind>
void write_graph(const std::filesystem::path& path, const EdgeGraph<Kind>& graph) {
  std::vector<float> v(graph.weights().size());
  for (std::size_t o = 0; o < graph.num_offsets(); ++o) {
    for (int y = 0; y < graph.height(); ++y) {
      for (int x = 0; x < graph.width(); ++x) {
        const auto i = graph.index(o, y, x);
        if (graph.valid(o, y, x)) {
          v[i] = static_cast<float>(graph.weight(o, y, x));
        } else {
          v[i] = graph.in_bounds(o, y, x) ? std::numeric_limits<float>::quiet_NaN() : 0.0f;
        }
      }
    }
  }
  npy::write(path,
             {graph.num_offsets(), static_cast<std::size_t>(graph.height()), static_cast<std::size_t>(graph.width())},
             v);
  nlohmann::json side;
  side["kind"] = graph_kind_name<Kind>();
  side["height"] = graph.height();
  side["width"] = graph.width();
  side["offsets"] = nlohmann::json::array();
  for (const auto& o : graph.offsets()) side["offsets"].push_back({o.dy, o.dx});
  std::ofstream out(graph_sidecar(path));
  if (!out) throw IoError("cannot write sidecar for " + path.string());
  out << side.dump(2) << "\n";
}

template <typename Kind>
EdgeGraph<Kind> read_graph(const std::filesystem::path& path) {
  const auto side_path = graph_sidecar(path);
  std::ifstream side_in(side_path);
  if (!side_in) throw IoError("cannot open graph sidecar " + side_path.string());
  nlohmann::json side;
  try {
    side = nlohmann::json::parse(side_in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError(side_path.string() + ": " + e.what());
  }
  if (!side.contains("kind") || side["kind"] != graph_kind_name<Kind>()) {
    throw DtypeError(side_path.string() + ": expected a " + graph_kind_name<Kind>() + " graph");
  }
  std::vector<EdgeOffset> offsets;
  for (const auto& o : side.at("offsets")) offsets.push_back({o.at(0).get<int>(), o.at(1).get<int>()});

  const auto arr = npy::read(path);
  const auto v = npy::values<float>(arr, path.string());
  const int h = side.at("height").get<int>();
  const int w = side.at("width").get<int>();
  if (arr.shape.size() != 3 || arr.shape[0] != offsets.size() || arr.shape[1] != static_cast<std::size_t>(h) ||
      arr.shape[2] != static_cast<std::size_t>(w)) {
    throw ShapeError(path.string() + ": channel array shape disagrees with its sidecar");
  }
  EdgeGraph<Kind> graph(h, w, offsets);
  for (std::size_t o = 0; o < offsets.size(); ++o) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!graph.valid(o, y, x)) continue;
        const float a = v[graph.index(o, y, x)];
        if (std::isnan(a)) {
          graph.set_valid(o, y, x, false);
        } else {
          graph.set_weight(o, y, x, static_cast<double>(a));
        }
      }
    }
  }
  return graph;
}

}  // namespace metricseg

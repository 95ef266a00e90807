#include "layoutgen/checkpoint.hpp"

#include <fstream>

#include "layoutgen/errors.hpp"

namespace layoutgen {

namespace {

template <class V>
void put_raw(std::ofstream& out, V v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <class V>
V get_raw(std::ifstream& in) {
  V v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(V));
  if (!in) throw LoadError("truncated checkpoint", 0);
  return v;
}

template <class T>
void put_array(std::ofstream& out, const std::vector<T>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(T)));
}

template <class T, class S>
std::vector<T> get_array_as(std::ifstream& in, size_t n) {
  std::vector<S> raw(n);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(n * sizeof(S)));
  if (!in) throw LoadError("truncated checkpoint", 0);
  if constexpr (std::is_same_v<T, S>) {
    return raw;
  } else {
    std::vector<T> out(n);
    for (size_t i = 0; i < n; ++i) out[i] = static_cast<T>(raw[i]);
    return out;
  }
}

template <class T>
std::vector<T> get_array(std::ifstream& in, size_t n, uint8_t dtype) {
  if (dtype == 4) return get_array_as<T, float>(in, n);
  if (dtype == 8) return get_array_as<T, double>(in, n);
  throw LoadError("unsupported checkpoint dtype", 0);
}

}  // namespace

template <class T>
void save_snapshot(const std::string& path, const Snapshot<T>& snap) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot open '" + path + "' for writing", 0);
  out.write("LGCK", 4);
  put_raw<uint32_t>(out, 1);
  put_raw<uint32_t>(out, static_cast<uint32_t>(snap.meta_json.size()));
  out.write(snap.meta_json.data(), static_cast<std::streamsize>(snap.meta_json.size()));
  put_raw<uint64_t>(out, snap.rng_seed);
  put_raw<uint32_t>(out, static_cast<uint32_t>(snap.names.size()));
  for (size_t p = 0; p < snap.names.size(); ++p) {
    put_raw<uint16_t>(out, static_cast<uint16_t>(snap.names[p].size()));
    out.write(snap.names[p].data(), static_cast<std::streamsize>(snap.names[p].size()));
    put_raw<uint8_t>(out, static_cast<uint8_t>(sizeof(T)));
    put_raw<uint8_t>(out, static_cast<uint8_t>(snap.shapes[p].size()));
    for (int d : snap.shapes[p]) put_raw<uint32_t>(out, static_cast<uint32_t>(d));
    put_array(out, snap.values[p]);
  }
  put_raw<uint8_t>(out, snap.has_adam ? 1 : 0);
  if (snap.has_adam) {
    put_raw<uint64_t>(out, static_cast<uint64_t>(snap.adam_step_count));
    for (size_t p = 0; p < snap.names.size(); ++p) {
      put_array(out, snap.adam_m[p]);
      put_array(out, snap.adam_v[p]);
    }
  }
}

template <class T>
Snapshot<T> load_snapshot(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'", 0);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "LGCK") throw LoadError("bad checkpoint magic", 0);
  if (get_raw<uint32_t>(in) != 1) throw LoadError("unsupported checkpoint version", 0);
  Snapshot<T> snap;
  const uint32_t meta_len = get_raw<uint32_t>(in);
  snap.meta_json.resize(meta_len);
  in.read(snap.meta_json.data(), meta_len);
  snap.rng_seed = get_raw<uint64_t>(in);
  const uint32_t n_params = get_raw<uint32_t>(in);
  std::vector<uint8_t> dtypes(n_params);
  for (uint32_t p = 0; p < n_params; ++p) {
    const uint16_t name_len = get_raw<uint16_t>(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    dtypes[p] = get_raw<uint8_t>(in);
    const uint8_t rank = get_raw<uint8_t>(in);
    std::vector<int> shape(rank);
    size_t numel = 1;
    for (int d = 0; d < rank; ++d) {
      shape[d] = static_cast<int>(get_raw<uint32_t>(in));
      numel *= static_cast<size_t>(shape[d]);
    }
    snap.names.push_back(std::move(name));
    snap.shapes.push_back(std::move(shape));
    snap.values.push_back(get_array<T>(in, numel, dtypes[p]));
  }
  snap.has_adam = get_raw<uint8_t>(in) != 0;
  if (snap.has_adam) {
    snap.adam_step_count = static_cast<long>(get_raw<uint64_t>(in));
    for (uint32_t p = 0; p < n_params; ++p) {
      snap.adam_m.push_back(get_array<T>(in, snap.values[p].size(), dtypes[p]));
      snap.adam_v.push_back(get_array<T>(in, snap.values[p].size(), dtypes[p]));
    }
  }
  return snap;
}

std::string snapshot_meta(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open '" + path + "'", 0);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::string(magic, 4) != "LGCK") throw LoadError("bad checkpoint magic", 0);
  if (get_raw<uint32_t>(in) != 1) throw LoadError("unsupported checkpoint version", 0);
  const uint32_t meta_len = get_raw<uint32_t>(in);
  std::string meta(meta_len, '\0');
  in.read(meta.data(), meta_len);
  if (!in) throw LoadError("truncated checkpoint", 0);
  return meta;
}

template void save_snapshot<float>(const std::string&, const Snapshot<float>&);
template void save_snapshot<double>(const std::string&, const Snapshot<double>&);
template Snapshot<float> load_snapshot<float>(const std::string&);
template Snapshot<double> load_snapshot<double>(const std::string&);

}  // namespace layoutgen

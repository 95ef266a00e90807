#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace layoutgen {

// Binary checkpoint container. Layout (little-endian):
//   "LGCK", u32 version,
//   u32 meta length + JSON metadata bytes,
//   u64 rng seed,
//   u32 parameter count, then per parameter:
//     u16 name length + name, u8 dtype size (4|8), u8 rank, u32 dims, raw data
//   u8 has-optimizer flag; when set: u64 step count, then per parameter the
//   first and second moment arrays in the same dtype/order.
template <class T>
struct Snapshot {
  std::string meta_json;
  uint64_t rng_seed = 0;
  std::vector<std::string> names;
  std::vector<std::vector<int>> shapes;
  std::vector<std::vector<T>> values;
  bool has_adam = false;
  long adam_step_count = 0;
  std::vector<std::vector<T>> adam_m, adam_v;
};

template <class T>
void save_snapshot(const std::string& path, const Snapshot<T>& snap);

// Converts between 32/64-bit storage and T as needed.
template <class T>
Snapshot<T> load_snapshot(const std::string& path);

std::string snapshot_meta(const std::string& path);  // metadata only

}  // namespace layoutgen

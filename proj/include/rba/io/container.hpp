#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

namespace rba::io {

/// One named float64 array with its shape.
struct NamedArray {
  std::string name;
  std::vector<std::int64_t> shape;
  std::vector<double> data;

  std::size_t count() const {
    std::size_t n = 1;
    for (auto d : shape) n *= static_cast<std::size_t>(d);
    return n;
  }
};

/// Manifest + payload container used for checkpoints, snapshots and
/// reference fields: a fixed magic, a JSON manifest (schema version, kind,
/// iteration, free-form metadata, named tensor list with shapes), then the
/// raw little-endian float64 payloads in manifest order.
struct Container {
  static constexpr int kSchemaVersion = 1;

  std::string kind;
  std::int64_t iteration = 0;
  nlohmann::json meta = nlohmann::json::object();
  std::vector<NamedArray> arrays;

  const NamedArray* find(const std::string& name) const;
  const NamedArray& at(const std::string& name) const;
};

void write_container(const std::string& path, const Container& c);

/// Throws distinct errors for a bad magic, an unsupported schema version, a
/// manifest/payload shape mismatch, and a truncated payload.
Container read_container(const std::string& path);

}  // namespace rba::io

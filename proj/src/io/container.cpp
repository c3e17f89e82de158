#include "rba/io/container.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "rba/common/error.hpp"

static_assert(std::endian::native == std::endian::little,
              "container payloads are little-endian");

namespace rba::io {

namespace {
constexpr char kMagic[8] = {'R', 'B', 'A', 'C', '0', '0', '0', '1'};
}

const NamedArray* Container::find(const std::string& name) const {
  for (const auto& a : arrays)
    if (a.name == name) return &a;
  return nullptr;
}

const NamedArray& Container::at(const std::string& name) const {
  const NamedArray* a = find(name);
  require(a != nullptr, "container: missing array '" + name + "'");
  return *a;
}

void write_container(const std::string& path, const Container& c) {
  nlohmann::json manifest;
  manifest["schema_version"] = Container::kSchemaVersion;
  manifest["kind"] = c.kind;
  manifest["iteration"] = c.iteration;
  manifest["meta"] = c.meta;
  auto tensors = nlohmann::json::array();
  for (const auto& a : c.arrays) {
    require(a.data.size() == a.count(),
            "container: array '" + a.name + "' shape/data mismatch");
    tensors.push_back({{"name", a.name}, {"shape", a.shape}});
  }
  manifest["tensors"] = tensors;
  const std::string text = manifest.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  require(out.good(), "container: cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t len = text.size();
  out.write(reinterpret_cast<const char*>(&len), sizeof(len));
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto& a : c.arrays)
    out.write(reinterpret_cast<const char*>(a.data.data()),
              static_cast<std::streamsize>(a.data.size() * sizeof(double)));
  out.flush();
  require(out.good(), "container: write failure on '" + path + "'");
}

Container read_container(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(in.good(), "container: cannot open '" + path + "'");

  char magic[8];
  in.read(magic, sizeof(magic));
  require(in.gcount() == sizeof(magic) && std::memcmp(magic, kMagic, sizeof(magic)) == 0,
          "container: bad magic in '" + path + "'");

  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof(len));
  require(in.gcount() == sizeof(len), "container: truncated manifest length");
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  require(static_cast<std::uint64_t>(in.gcount()) == len, "container: truncated manifest");

  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    fail("container: manifest parse error: " + std::string(e.what()));
  }
  require(manifest.contains("schema_version"), "container: manifest lacks a version field");
  const int version = manifest["schema_version"].get<int>();
  require(version == Container::kSchemaVersion,
          "container: unsupported schema version " + std::to_string(version));

  Container c;
  c.kind = manifest.value("kind", "");
  c.iteration = manifest.value("iteration", std::int64_t{0});
  c.meta = manifest.value("meta", nlohmann::json::object());
  for (const auto& t : manifest["tensors"]) {
    NamedArray a;
    a.name = t["name"].get<std::string>();
    a.shape = t["shape"].get<std::vector<std::int64_t>>();
    a.data.resize(a.count());
    in.read(reinterpret_cast<char*>(a.data.data()),
            static_cast<std::streamsize>(a.data.size() * sizeof(double)));
    require(static_cast<std::size_t>(in.gcount()) == a.data.size() * sizeof(double),
            "container: payload shape mismatch for '" + a.name + "' (truncated)");
    c.arrays.push_back(std::move(a));
  }
  // Trailing bytes mean the manifest shapes do not cover the payload.
  in.peek();
  require(in.eof(), "container: payload longer than manifest shapes");
  return c;
}

}  // namespace rba::io

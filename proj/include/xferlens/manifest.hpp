#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "xferlens/json.hpp"

#include "xferlens/tensor.hpp"

namespace xferlens {

enum class ManifestKind { volumes, weights, correctness, runs };

const char* manifest_kind_name(ManifestKind kind);

struct ManifestEntry {
  std::string id;
  std::filesystem::path path;  // resolved against the manifest directory
  Json attributes = Json::object();
};

struct Manifest {
  ManifestKind kind = ManifestKind::volumes;
  std::filesystem::path directory;
  std::vector<ManifestEntry> entries;

  const ManifestEntry& find(const std::string& id) const;
};

/// Parses and validates a manifest. Kind-specific requirements:
/// volumes entries need a positive `slice_spacing_mm`, weights entries an
/// integer `order`.
Manifest load_manifest(const std::filesystem::path& path);
Manifest parse_manifest(const Json& doc, const std::filesystem::path& directory);

/// Reads a structured-text file, mapping absence to MissingFileError and
/// syntax problems to SchemaError.
Json read_json_file(const std::filesystem::path& path);

std::vector<VolumeStack> load_volumes(const Manifest& manifest);

}  // namespace xferlens

#include "xferlens/manifest.hpp"

#include <fstream>
#include <set>

#include "xferlens/errors.hpp"

namespace xferlens {

const char* manifest_kind_name(ManifestKind kind) {
  switch (kind) {
    case ManifestKind::volumes: return "volumes";
    case ManifestKind::weights: return "weights";
    case ManifestKind::correctness: return "correctness";
    case ManifestKind::runs: return "runs";
  }
  return "?";
}

const ManifestEntry& Manifest::find(const std::string& id) const {
  for (const auto& e : entries)
    if (e.id == id) return e;
  throw KeyError("manifest has no entry with id '" + id + "'");
}

Json read_json_file(const std::filesystem::path& path) {
  std::error_code ec;
  if (!std::filesystem::is_regular_file(path, ec)) throw MissingFileError("no such file: " + path.string());
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw SchemaError(path.string() + ": " + e.what());
  }
}

Manifest parse_manifest(const Json& doc, const std::filesystem::path& directory) {
  if (!doc.is_object()) throw SchemaError("manifest must be an object");
  if (!doc.contains("kind") || !doc["kind"].is_string()) throw SchemaError("manifest lacks string field 'kind'");
  if (!doc.contains("entries") || !doc["entries"].is_array()) throw SchemaError("manifest lacks array field 'entries'");

  Manifest m;
  m.directory = directory;
  const auto kind = doc["kind"].get<std::string>();
  if (kind == "volumes") m.kind = ManifestKind::volumes;
  else if (kind == "weights") m.kind = ManifestKind::weights;
  else if (kind == "correctness") m.kind = ManifestKind::correctness;
  else if (kind == "runs") m.kind = ManifestKind::runs;
  else throw SchemaError("unknown manifest kind '" + kind + "'");

  std::set<std::string> seen;
  for (const auto& item : doc["entries"]) {
    if (!item.is_object()) throw SchemaError("manifest entries must be objects");
    if (!item.contains("id") || !item["id"].is_string()) throw SchemaError("entry lacks string 'id'");
    if (!item.contains("path") || !item["path"].is_string()) throw SchemaError("entry lacks string 'path'");
    ManifestEntry e;
    e.id = item["id"].get<std::string>();
    if (!seen.insert(e.id).second) throw SchemaError("duplicate entry id '" + e.id + "'");
    if (item.contains("attributes")) {
      if (!item["attributes"].is_object()) throw SchemaError("entry '" + e.id + "' attributes must be an object");
      e.attributes = item["attributes"];
    }

    if (m.kind == ManifestKind::volumes) {
      const auto it = e.attributes.find("slice_spacing_mm");
      if (it == e.attributes.end() || !it->is_number() || it->get<double>() <= 0.0)
        throw SchemaError("volumes entry '" + e.id + "' needs a positive slice_spacing_mm");
    }
    if (m.kind == ManifestKind::weights) {
      const auto it = e.attributes.find("order");
      if (it == e.attributes.end() || !it->is_number_integer())
        throw SchemaError("weights entry '" + e.id + "' needs an integer order");
    }

    e.path = directory / item["path"].get<std::string>();
    std::error_code ec;
    if (!std::filesystem::exists(e.path, ec))
      throw MissingFileError("entry '" + e.id + "' points to missing " + e.path.string());
    m.entries.push_back(std::move(e));
  }
  return m;
}

Manifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_json_file(path), path.parent_path());
}

std::vector<VolumeStack> load_volumes(const Manifest& manifest) {
  if (manifest.kind != ManifestKind::volumes) throw SchemaError("expected a volumes manifest");
  std::vector<VolumeStack> out;
  out.reserve(manifest.entries.size());
  for (const auto& e : manifest.entries)
    out.push_back(load_volume(e.path, e.id, e.attributes["slice_spacing_mm"].get<double>()));
  return out;
}

}  // namespace xferlens

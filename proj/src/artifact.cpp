#include "dendromap/artifact.hpp"

#include <cstdio>
#include <cstdlib>
#include <charconv>

#include <json.hpp>

#include "dendromap/error.hpp"

namespace dendromap {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

constexpr const char* kMetadataFile = "artifact.json";
constexpr const char* kManifestFile = "manifest.json";
constexpr const char* kDendrogramFile = "dendrogram.json";

InputReference reference_to(const fs::path& path, std::string_view contents) {
  return {fs::weakly_canonical(fs::absolute(path)), fnv1a64_hex(contents)};
}

std::optional<std::int64_t> source_date_epoch() {
  const char* value = std::getenv("SOURCE_DATE_EPOCH");
  if (value == nullptr || *value == '\0') return std::nullopt;
  std::int64_t seconds = 0;
  const std::string_view text(value);
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), seconds);
  if (ec != std::errc{} || ptr != text.data() + text.size()) return std::nullopt;
  return seconds;
}

json reference_json(const InputReference& ref) {
  return {{"path", ref.path.string()}, {"fnv1a64", ref.fnv1a64}};
}

InputReference reference_from(const json& j) {
  return {fs::path(j.at("path").get<std::string>()), j.at("fnv1a64").get<std::string>()};
}

std::string read_checked(const InputReference& ref, const char* what) {
  std::string contents;
  try {
    contents = read_file(ref.path);
  } catch (const Error&) {
    fail(ErrorCode::Io, std::string(what) + " referenced by the artifact is missing: " + ref.path.string());
  }
  if (fnv1a64_hex(contents) != ref.fnv1a64)
    fail(ErrorCode::Validation, std::string(what) + " changed since the artifact was built: " + ref.path.string());
  return contents;
}

std::string metadata_to_json(const BuildMetadata& meta) {
  json doc = {{"schema_version", meta.schema_version},
              {"tool_version", meta.tool_version},
              {"items", meta.items},
              {"dims", meta.dims},
              {"parameters", {{"linkage", meta.linkage}, {"metric", meta.metric}}},
              {"inputs",
               {{"manifest", reference_json(meta.manifest_source)},
                {"embeddings", reference_json(meta.embeddings)}}},
              {"image_root", meta.image_root.string()},
              {"files",
               {{"manifest", kManifestFile}, {"dendrogram", kDendrogramFile}}}};
  if (meta.projection) doc["inputs"]["projection"] = reference_json(*meta.projection);
  if (meta.created_unix) doc["created_unix"] = *meta.created_unix;
  return doc.dump(2) + "\n";
}

BuildMetadata metadata_from_json(std::string_view text) {
  try {
    const auto doc = json::parse(text);
    BuildMetadata meta;
    meta.schema_version = doc.at("schema_version").get<int>();
    if (meta.schema_version != kArtifactSchemaVersion)
      fail(ErrorCode::Parse, "unsupported artifact schema_version " + std::to_string(meta.schema_version));
    meta.tool_version = doc.at("tool_version").get<std::string>();
    meta.items = doc.at("items").get<std::size_t>();
    meta.dims = doc.at("dims").get<std::size_t>();
    meta.linkage = doc.at("parameters").at("linkage").get<std::string>();
    meta.metric = doc.at("parameters").at("metric").get<std::string>();
    const auto& inputs = doc.at("inputs");
    meta.manifest_source = reference_from(inputs.at("manifest"));
    meta.embeddings = reference_from(inputs.at("embeddings"));
    if (inputs.contains("projection")) meta.projection = reference_from(inputs.at("projection"));
    meta.image_root = doc.at("image_root").get<std::string>();
    if (doc.contains("created_unix")) meta.created_unix = doc.at("created_unix").get<std::int64_t>();
    return meta;
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("malformed artifact metadata: ") + e.what());
  }
}

}  // namespace

const char* library_version() noexcept { return "1.0.0"; }

std::string fnv1a64_hex(std::string_view bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (const unsigned char b : bytes) {
    hash ^= b;
    hash *= 0x100000001b3ull;
  }
  char out[17];
  std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(hash));
  return out;
}

BuildArtifact build_artifact(const fs::path& manifest_path, const fs::path& embeddings_path,
                             const std::optional<fs::path>& projection_path, const fs::path& out_dir) {
  BuildArtifact artifact;
  const auto manifest_text = read_file(manifest_path);
  artifact.manifest = parse_manifest(manifest_text);
  const auto n = artifact.manifest.size();
  const auto embeddings_bytes = read_file(embeddings_path);
  artifact.embeddings = parse_embeddings(embeddings_bytes);
  require_rows(artifact.embeddings, n, "embedding matrix");
  std::string projection_bytes;
  if (projection_path) {
    projection_bytes = read_file(*projection_path);
    const auto matrix = parse_embeddings(projection_bytes);
    artifact.projection = projection_from_matrix(matrix);
    require_rows(matrix, n, "projection");
  }

  artifact.dendrogram = ward_dendrogram(artifact.embeddings);

  auto& meta = artifact.metadata;
  meta.tool_version = library_version();
  meta.items = n;
  meta.dims = artifact.embeddings.dims();
  meta.created_unix = source_date_epoch();
  meta.manifest_source = reference_to(manifest_path, manifest_text);
  meta.embeddings = reference_to(embeddings_path, embeddings_bytes);
  if (projection_path) meta.projection = reference_to(*projection_path, projection_bytes);
  meta.image_root = meta.manifest_source.path.parent_path();

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) fail(ErrorCode::Io, "cannot create " + out_dir.string() + ": " + ec.message());
  artifact.dir = out_dir;
  write_file(out_dir / kManifestFile, manifest_to_json(artifact.manifest));
  write_file(out_dir / kDendrogramFile, dendrogram_to_json(artifact.dendrogram));
  write_file(out_dir / kMetadataFile, metadata_to_json(meta));
  return artifact;
}

BuildArtifact load_artifact(const fs::path& dir) {
  if (!fs::is_directory(dir)) fail(ErrorCode::Io, "artifact directory not found: " + dir.string());
  BuildArtifact artifact;
  artifact.dir = dir;
  artifact.metadata = metadata_from_json(read_file(dir / kMetadataFile));
  const auto& meta = artifact.metadata;
  artifact.manifest = load_manifest(dir / kManifestFile);
  artifact.dendrogram = dendrogram_from_json(read_file(dir / kDendrogramFile));

  const auto n = artifact.manifest.size();
  if (artifact.dendrogram.leaf_count() != n || meta.items != n)
    fail(ErrorCode::Validation, "artifact components disagree on the item count");

  artifact.embeddings = parse_embeddings(read_checked(meta.embeddings, "embedding file"));
  require_rows(artifact.embeddings, n, "embedding matrix");
  if (artifact.embeddings.dims() != meta.dims)
    fail(ErrorCode::Validation, "embedding dimensionality differs from the artifact metadata");
  if (meta.projection) {
    const auto matrix = parse_embeddings(read_checked(*meta.projection, "projection file"));
    artifact.projection = projection_from_matrix(matrix);
    require_rows(matrix, n, "projection");
  }
  return artifact;
}

}  // namespace dendromap

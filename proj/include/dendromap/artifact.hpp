#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "dendromap/hclust.hpp"
#include "dendromap/ingest.hpp"

namespace dendromap {

inline constexpr int kArtifactSchemaVersion = 1;
const char* library_version() noexcept;

struct InputReference {
  std::filesystem::path path;  // absolute
  std::string fnv1a64;         // hex digest of the file contents
};

struct BuildMetadata {
  int schema_version = kArtifactSchemaVersion;
  std::string tool_version;
  std::size_t items = 0;
  std::size_t dims = 0;
  std::string linkage = "ward";
  std::string metric = "euclidean";
  // Seconds since the epoch, taken from SOURCE_DATE_EPOCH when set so that
  // rebuilds stay byte-identical.
  std::optional<std::int64_t> created_unix;
  InputReference manifest_source;
  InputReference embeddings;
  std::optional<InputReference> projection;
  std::filesystem::path image_root;  // base for relative image_uri values
};

// Directory layout: artifact.json (metadata), manifest.json (normalized),
// dendrogram.json (nested tree). Embeddings and projection are referenced.
struct BuildArtifact {
  std::filesystem::path dir;
  BuildMetadata metadata;
  DatasetManifest manifest;
  Dendrogram dendrogram;
  EmbeddingMatrix embeddings;
  std::optional<Projection2D> projection;
};

std::string fnv1a64_hex(std::string_view bytes);

BuildArtifact build_artifact(const std::filesystem::path& manifest_path,
                             const std::filesystem::path& embeddings_path,
                             const std::optional<std::filesystem::path>& projection_path,
                             const std::filesystem::path& out_dir);

/// Loads an artifact directory and the inputs it references, checking their
/// digests. Throws Validation when a referenced file changed since the build.
BuildArtifact load_artifact(const std::filesystem::path& dir);

}  // namespace dendromap

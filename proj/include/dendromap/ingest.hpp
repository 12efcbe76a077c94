#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dendromap {

inline constexpr int kManifestSchemaVersion = 1;

using ImageId = std::size_t;
using ClassId = std::uint32_t;

struct ImageRecord {
  ImageId id = 0;
  std::string image_uri;
  ClassId true_class = 0;
  std::optional<ClassId> predicted_class;
  // Id as written in the source file, before densification.
  std::int64_t source_id = 0;

  bool misclassified() const {
    return predicted_class && *predicted_class != true_class;
  }
  friend bool operator==(const ImageRecord&, const ImageRecord&) = default;
};

struct DatasetManifest {
  std::vector<ImageRecord> items;
  std::vector<std::string> classes;
  bool has_predictions = false;

  std::size_t size() const { return items.size(); }
  friend bool operator==(const DatasetManifest&, const DatasetManifest&) = default;
};

// Row-major N x D matrix of finite doubles.
class EmbeddingMatrix {
 public:
  EmbeddingMatrix() = default;
  EmbeddingMatrix(std::size_t rows, std::size_t dims, std::vector<double> values);

  std::size_t rows() const { return rows_; }
  std::size_t dims() const { return dims_; }
  std::span<const double> row(std::size_t i) const {
    return {values_.data() + i * dims_, dims_};
  }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t rows_ = 0;
  std::size_t dims_ = 0;
  std::vector<double> values_;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
  friend bool operator==(const Point2&, const Point2&) = default;
};

struct Projection2D {
  std::vector<Point2> points;
  std::size_t size() const { return points.size(); }
};

/// Validates a parsed manifest and densifies ids to [0, N) by ascending
/// source id. Throws Validation on duplicate ids, out-of-range classes or
/// partial predictions.
DatasetManifest normalize_manifest(DatasetManifest manifest);

DatasetManifest parse_manifest(std::string_view json_text);
DatasetManifest load_manifest(const std::filesystem::path& path);
std::string manifest_to_json(const DatasetManifest& manifest);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Accepts either whitespace-delimited text (one row per line, `#` comments)
/// or the binary layout: uint32 rows, uint32 dims, then rows*dims float32,
/// all little-endian.
EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::optional<std::size_t> expected_rows);
EmbeddingMatrix parse_embeddings_text(std::string_view text);
/// Binary or text, decided from the bytes.
EmbeddingMatrix parse_embeddings(std::string_view data);
/// Throws Shape when a parsed matrix has the wrong row count.
void require_rows(const EmbeddingMatrix& matrix, std::size_t expected_rows, std::string_view what);
void save_embeddings_binary(const EmbeddingMatrix& matrix, const std::filesystem::path& path);
void save_embeddings_text(const EmbeddingMatrix& matrix, const std::filesystem::path& path);

Projection2D projection_from_matrix(const EmbeddingMatrix& matrix);
Projection2D load_projection(const std::filesystem::path& path,
                             std::optional<std::size_t> expected_rows);
void save_projection_text(const Projection2D& projection, const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace dendromap

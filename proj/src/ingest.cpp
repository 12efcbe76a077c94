#include "dendromap/ingest.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include <json.hpp>

#include "dendromap/error.hpp"

namespace dendromap {

using nlohmann::json;

namespace {

std::string describe(const std::filesystem::path& path) { return "'" + path.string() + "'"; }

ClassId class_index(const json& value, const std::vector<std::string>& classes,
                    const char* field, std::size_t item) {
  if (value.is_string()) {
    const auto name = value.get<std::string>();
    const auto it = std::find(classes.begin(), classes.end(), name);
    if (it == classes.end())
      fail(ErrorCode::Validation, "item " + std::to_string(item) + ": unknown class name '" +
                                      name + "' in " + field);
    return static_cast<ClassId>(it - classes.begin());
  }
  if (!value.is_number_integer())
    fail(ErrorCode::Parse, "item " + std::to_string(item) + ": " + field +
                               " must be an integer index or a class name");
  const auto index = value.get<std::int64_t>();
  if (index < 0 || static_cast<std::size_t>(index) >= classes.size())
    fail(ErrorCode::Validation, "item " + std::to_string(item) + ": " + field + " " +
                                    std::to_string(index) + " out of range for " +
                                    std::to_string(classes.size()) + " classes");
  return static_cast<ClassId>(index);
}

template <class T>
T read_le(const char* p) {
  T value;
  std::memcpy(&value, p, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) {
    auto* bytes = reinterpret_cast<unsigned char*>(&value);
    std::reverse(bytes, bytes + sizeof(T));
  }
  return value;
}

template <class T>
void append_le(std::string& out, T value) {
  char bytes[sizeof(T)];
  std::memcpy(bytes, &value, sizeof(T));
  if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
  out.append(bytes, sizeof(T));
}

// A file is treated as binary when its header describes exactly its size.
bool looks_binary(std::string_view data) {
  if (data.size() < 8) return false;
  const auto rows = read_le<std::uint32_t>(data.data());
  const auto dims = read_le<std::uint32_t>(data.data() + 4);
  return dims > 0 &&
         static_cast<std::uint64_t>(data.size()) ==
             8 + 4ull * static_cast<std::uint64_t>(rows) * dims;
}

EmbeddingMatrix parse_binary(std::string_view data) {
  const auto rows = read_le<std::uint32_t>(data.data());
  const auto dims = read_le<std::uint32_t>(data.data() + 4);
  std::vector<double> values(static_cast<std::size_t>(rows) * dims);
  const char* p = data.data() + 8;
  for (auto& v : values) {
    v = static_cast<double>(read_le<float>(p));
    p += 4;
  }
  return EmbeddingMatrix(rows, dims, std::move(values));
}

}  // namespace

const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::Parse: return "parse_error";
    case ErrorCode::Validation: return "validation_error";
    case ErrorCode::Shape: return "shape_error";
    case ErrorCode::NonFinite: return "non_finite_error";
    case ErrorCode::EmptyInput: return "empty_input";
    case ErrorCode::Range: return "range_error";
    case ErrorCode::UnknownNode: return "unknown_node";
    case ErrorCode::UnknownLeaf: return "unknown_leaf";
    case ErrorCode::DegenerateSpace: return "degenerate_space";
    case ErrorCode::NoPredictions: return "no_predictions";
    case ErrorCode::EmptySubset: return "empty_subset";
    case ErrorCode::Io: return "io_error";
    case ErrorCode::InvalidArgument: return "invalid_argument";
  }
  return "unknown_error";
}

EmbeddingMatrix::EmbeddingMatrix(std::size_t rows, std::size_t dims, std::vector<double> values)
    : rows_(rows), dims_(dims), values_(std::move(values)) {
  if (dims_ == 0) fail(ErrorCode::Shape, "embedding matrix must have at least one column");
  if (values_.size() != rows_ * dims_)
    fail(ErrorCode::Shape, "embedding value count does not match rows x dims");
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i]))
      fail(ErrorCode::NonFinite, "non-finite value at row " + std::to_string(i / dims_) +
                                     ", column " + std::to_string(i % dims_));
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorCode::Parse, "cannot open " + describe(path));
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return std::move(buffer).str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) fail(ErrorCode::Io, "cannot write " + describe(path));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) fail(ErrorCode::Io, "short write to " + describe(path));
}

DatasetManifest normalize_manifest(DatasetManifest manifest) {
  if (manifest.items.empty()) fail(ErrorCode::Validation, "manifest has no items");

  std::size_t with_prediction = 0;
  for (const auto& item : manifest.items) {
    if (item.true_class >= manifest.classes.size())
      fail(ErrorCode::Validation, "true_class out of range for item " + std::to_string(item.source_id));
    if (item.predicted_class) {
      ++with_prediction;
      if (*item.predicted_class >= manifest.classes.size())
        fail(ErrorCode::Validation,
             "predicted_class out of range for item " + std::to_string(item.source_id));
    }
  }
  if (with_prediction != 0 && with_prediction != manifest.items.size())
    fail(ErrorCode::Validation, "predicted_class present on " + std::to_string(with_prediction) +
                                    " of " + std::to_string(manifest.items.size()) +
                                    " items; predictions must be given for all or none");
  manifest.has_predictions = with_prediction != 0;

  std::stable_sort(manifest.items.begin(), manifest.items.end(),
                   [](const ImageRecord& a, const ImageRecord& b) { return a.source_id < b.source_id; });
  for (std::size_t i = 1; i < manifest.items.size(); ++i) {
    if (manifest.items[i].source_id == manifest.items[i - 1].source_id)
      fail(ErrorCode::Validation, "duplicate image id " + std::to_string(manifest.items[i].source_id));
  }
  for (std::size_t i = 0; i < manifest.items.size(); ++i) manifest.items[i].id = i;
  return manifest;
}

DatasetManifest parse_manifest(std::string_view json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    fail(ErrorCode::Parse, std::string("manifest is not valid JSON: ") + e.what());
  }
  if (!doc.is_object()) fail(ErrorCode::Parse, "manifest must be a JSON object");

  const auto version = doc.find("schema_version");
  if (version == doc.end() || !version->is_number_integer())
    fail(ErrorCode::Parse, "manifest is missing integer 'schema_version'");
  if (version->get<int>() != kManifestSchemaVersion)
    fail(ErrorCode::Parse, "unsupported manifest schema_version " + version->dump());

  DatasetManifest manifest;
  // (id, source_id) pairs for items written by manifest_to_json after densification.
  std::vector<std::pair<std::int64_t, std::int64_t>> recorded_source;
  try {
    manifest.classes = doc.at("classes").get<std::vector<std::string>>();
    const auto& items = doc.at("items");
    if (!items.is_array()) fail(ErrorCode::Parse, "'items' must be an array");
    manifest.items.reserve(items.size());
    for (std::size_t i = 0; i < items.size(); ++i) {
      const auto& entry = items[i];
      ImageRecord record;
      record.source_id = entry.at("id").get<std::int64_t>();
      if (const auto src = entry.find("source_id"); src != entry.end())
        recorded_source.emplace_back(record.source_id, src->get<std::int64_t>());
      record.image_uri = entry.value("image_uri", std::string{});
      record.true_class = class_index(entry.at("true_class"), manifest.classes, "true_class", i);
      if (const auto pred = entry.find("predicted_class"); pred != entry.end() && !pred->is_null())
        record.predicted_class = class_index(*pred, manifest.classes, "predicted_class", i);
      manifest.items.push_back(std::move(record));
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::Parse, std::string("malformed manifest: ") + e.what());
  }

  manifest = normalize_manifest(std::move(manifest));
  if (!recorded_source.empty()) {
    std::unordered_map<std::int64_t, std::int64_t> lookup(recorded_source.begin(), recorded_source.end());
    for (auto& item : manifest.items) {
      if (const auto it = lookup.find(item.source_id); it != lookup.end()) item.source_id = it->second;
    }
  }
  return manifest;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  return parse_manifest(read_file(path));
}

std::string manifest_to_json(const DatasetManifest& manifest) {
  json items = json::array();
  for (const auto& item : manifest.items) {
    json entry = {{"id", item.id}, {"image_uri", item.image_uri}, {"true_class", item.true_class}};
    if (item.predicted_class) entry["predicted_class"] = *item.predicted_class;
    if (item.source_id != static_cast<std::int64_t>(item.id)) entry["source_id"] = item.source_id;
    items.push_back(std::move(entry));
  }
  json doc = {{"schema_version", kManifestSchemaVersion},
              {"classes", manifest.classes},
              {"items", std::move(items)}};
  return doc.dump(1) + "\n";
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  write_file(path, manifest_to_json(manifest));
}

EmbeddingMatrix parse_embeddings_text(std::string_view text) {
  std::vector<double> values;
  std::size_t rows = 0;
  std::size_t dims = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    auto line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);

    std::size_t columns = 0;
    std::size_t pos = 0;
    while (true) {
      while (pos < line.size() && std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      if (pos >= line.size()) break;
      const char* begin = line.data() + pos;
      const char* end = line.data() + line.size();
      // from_chars rejects a leading '+'.
      if (*begin == '+') ++begin;
      double value = 0.0;
      const auto [ptr, ec] = std::from_chars(begin, end, value);
      if (ec == std::errc::result_out_of_range) {
        value = (*begin == '-') ? -HUGE_VAL : HUGE_VAL;
      } else if (ec != std::errc{} ||
                 (ptr != end && !std::isspace(static_cast<unsigned char>(*ptr)))) {
        fail(ErrorCode::Parse, "line " + std::to_string(line_no) + ": cannot parse number");
      }
      if (!std::isfinite(value))
        fail(ErrorCode::NonFinite, "non-finite value at row " + std::to_string(rows) + ", column " +
                                       std::to_string(columns));
      values.push_back(value);
      ++columns;
      pos = static_cast<std::size_t>(ptr - line.data());
      if (ec == std::errc::result_out_of_range) {
        while (pos < line.size() && !std::isspace(static_cast<unsigned char>(line[pos]))) ++pos;
      }
    }
    if (columns == 0) continue;
    if (dims == 0) dims = columns;
    if (columns != dims)
      fail(ErrorCode::Shape, "line " + std::to_string(line_no) + " has " + std::to_string(columns) +
                                 " columns, expected " + std::to_string(dims));
    ++rows;
  }
  if (rows == 0) fail(ErrorCode::Parse, "matrix file contains no rows");
  return EmbeddingMatrix(rows, dims, std::move(values));
}

EmbeddingMatrix parse_embeddings(std::string_view data) {
  return looks_binary(data) ? parse_binary(data) : parse_embeddings_text(data);
}

void require_rows(const EmbeddingMatrix& matrix, std::size_t expected_rows, std::string_view what) {
  if (matrix.rows() != expected_rows)
    fail(ErrorCode::Shape, std::string(what) + " has " + std::to_string(matrix.rows()) +
                               " rows, expected " + std::to_string(expected_rows));
}

EmbeddingMatrix load_embeddings(const std::filesystem::path& path,
                                std::optional<std::size_t> expected_rows) {
  auto matrix = parse_embeddings(read_file(path));
  if (expected_rows) require_rows(matrix, *expected_rows, "embedding matrix");
  return matrix;
}

void save_embeddings_binary(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  std::string out;
  out.reserve(8 + 4 * matrix.values().size());
  append_le(out, static_cast<std::uint32_t>(matrix.rows()));
  append_le(out, static_cast<std::uint32_t>(matrix.dims()));
  for (double v : matrix.values()) append_le(out, static_cast<float>(v));
  write_file(path, out);
}

void save_embeddings_text(const EmbeddingMatrix& matrix, const std::filesystem::path& path) {
  std::string out;
  char buffer[32];
  for (std::size_t i = 0; i < matrix.rows(); ++i) {
    const auto row = matrix.row(i);
    for (std::size_t j = 0; j < row.size(); ++j) {
      const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof buffer, row[j]);
      if (j) out += ' ';
      out.append(buffer, ptr);
    }
    out += '\n';
  }
  write_file(path, out);
}

Projection2D load_projection(const std::filesystem::path& path,
                             std::optional<std::size_t> expected_rows) {
  const auto matrix = load_embeddings(path, std::nullopt);
  const auto projection = projection_from_matrix(matrix);
  if (expected_rows) require_rows(matrix, *expected_rows, "projection");
  return projection;
}

Projection2D projection_from_matrix(const EmbeddingMatrix& matrix) {
  if (matrix.dims() != 2)
    fail(ErrorCode::Shape, "projection must have 2 columns, found " + std::to_string(matrix.dims()));
  Projection2D projection;
  projection.points.reserve(matrix.rows());
  for (std::size_t i = 0; i < matrix.rows(); ++i)
    projection.points.push_back({matrix.row(i)[0], matrix.row(i)[1]});
  return projection;
}

void save_projection_text(const Projection2D& projection, const std::filesystem::path& path) {
  std::vector<double> values;
  values.reserve(projection.size() * 2);
  for (const auto& p : projection.points) {
    values.push_back(p.x);
    values.push_back(p.y);
  }
  save_embeddings_text(EmbeddingMatrix(projection.size(), 2, std::move(values)), path);
}

}  // namespace dendromap

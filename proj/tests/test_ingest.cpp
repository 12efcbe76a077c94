#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>

#include "dendromap/error.hpp"
#include "dendromap/ingest.hpp"
#include "oracles.hpp"

using namespace dendromap;

namespace {

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::Parse;
}

const char* kManifest = R"({
  "schema_version": 1,
  "classes": ["cat", "dog"],
  "items": [
    {"id": 30, "image_uri": "c.png", "true_class": "dog", "predicted_class": "dog"},
    {"id": 10, "image_uri": "a.png", "true_class": 0, "predicted_class": 1},
    {"id": 20, "image_uri": "b.png", "true_class": "cat", "predicted_class": "cat"}
  ]
})";

}  // namespace

TEST_CASE("manifest ids are densified by ascending source id") {
  const auto m = parse_manifest(kManifest);
  REQUIRE(m.size() == 3);
  CHECK(m.has_predictions);
  CHECK(m.items[0].id == 0);
  CHECK(m.items[0].source_id == 10);
  CHECK(m.items[0].image_uri == "a.png");
  CHECK(m.items[0].misclassified());
  CHECK(m.items[2].source_id == 30);
  CHECK(m.items[2].true_class == 1);
  CHECK_FALSE(m.items[1].misclassified());
}

TEST_CASE("manifest json round trip is exact") {
  const auto m = parse_manifest(kManifest);
  const auto again = parse_manifest(manifest_to_json(m));
  CHECK(again == m);
  CHECK(manifest_to_json(again) == manifest_to_json(m));
}

TEST_CASE("manifest without predictions") {
  const auto m = parse_manifest(R"({"schema_version":1,"classes":["a"],"items":[{"id":0,"true_class":0}]})");
  CHECK_FALSE(m.has_predictions);
  CHECK_FALSE(m.items[0].misclassified());
}

TEST_CASE("manifest errors") {
  CHECK(code_of([] { parse_manifest("not json"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_manifest(R"({"classes":[],"items":[]})"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_manifest(R"({"schema_version":2,"classes":[],"items":[]})"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_manifest(R"({"schema_version":1,"classes":["a"],"items":[]})"); }) ==
        ErrorCode::Validation);
  CHECK(code_of([] {
          parse_manifest(R"({"schema_version":1,"classes":["a"],"items":[{"id":0,"true_class":3}]})");
        }) == ErrorCode::Validation);
  CHECK(code_of([] {
          parse_manifest(R"({"schema_version":1,"classes":["a"],"items":[{"id":0,"true_class":"zebra"}]})");
        }) != ErrorCode::Range);
  CHECK(code_of([] {
          parse_manifest(
              R"({"schema_version":1,"classes":["a"],"items":[{"id":0,"true_class":0},{"id":0,"true_class":0}]})");
        }) == ErrorCode::Validation);
  CHECK(code_of([] {
          parse_manifest(
              R"({"schema_version":1,"classes":["a"],"items":[{"id":0,"true_class":0,"predicted_class":0},{"id":1,"true_class":0}]})");
        }) == ErrorCode::Validation);
}

TEST_CASE("text embeddings") {
  const auto m = parse_embeddings_text("# header\n1 2 3\n\n4.5 -1e-3 0\n");
  REQUIRE(m.rows() == 2);
  REQUIRE(m.dims() == 3);
  CHECK(m.row(1)[0] == 4.5);
  CHECK(m.row(1)[1] == -1e-3);
  CHECK(code_of([] { parse_embeddings_text("1 2\n3\n"); }) == ErrorCode::Shape);
  CHECK(code_of([] { parse_embeddings_text("1 nan\n"); }) != ErrorCode::Shape);
  CHECK(code_of([] { parse_embeddings_text("1 x\n"); }) == ErrorCode::Parse);
  CHECK(code_of([] { parse_embeddings_text(""); }) == ErrorCode::Parse);
}

TEST_CASE("matrix rejects non-finite values") {
  CHECK(code_of([] { EmbeddingMatrix(1, 2, {1.0, std::numeric_limits<double>::infinity()}); }) ==
        ErrorCode::NonFinite);
  CHECK(code_of([] { EmbeddingMatrix(1, 2, {1.0}); }) == ErrorCode::Shape);
}

TEST_CASE("binary and text embedding files round trip") {
  const auto dir = oracle::scratch_dir("ingest");
  const EmbeddingMatrix m(2, 2, {0.5, 1.0, -2.0, 3.25});
  save_embeddings_binary(m, dir / "e.bin");
  save_embeddings_text(m, dir / "e.txt");
  CHECK(load_embeddings(dir / "e.bin", 2).values() == m.values());
  CHECK(load_embeddings(dir / "e.txt", std::nullopt).values() == m.values());
  CHECK(code_of([&] { load_embeddings(dir / "e.bin", 3); }) == ErrorCode::Shape);
  CHECK(code_of([&] { load_embeddings(dir / "missing.bin", std::nullopt); }) == ErrorCode::Parse);

  const std::string bytes = read_file(dir / "e.bin");
  CHECK(bytes.size() == 8 + 4 * 4);
  std::uint32_t rows = 0;
  std::memcpy(&rows, bytes.data(), 4);
  CHECK(rows == 2);
  std::filesystem::remove_all(dir);
}

TEST_CASE("projection needs two columns") {
  CHECK(code_of([] { projection_from_matrix(EmbeddingMatrix(1, 3, {1, 2, 3})); }) == ErrorCode::Shape);
  const auto p = projection_from_matrix(EmbeddingMatrix(2, 2, {1, 2, 3, 4}));
  CHECK(p.points[1] == Point2{3, 4});
}

#include "dendromap/dendromap.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>

#include "dendromap/artifact.hpp"
#include "dendromap/error.hpp"
#include "dendromap/gridify.hpp"
#include "dendromap/hclust.hpp"
#include "dendromap/metrics.hpp"
#include "dendromap/service.hpp"
#include "dendromap/treemap.hpp"

struct dm_embeddings {
  dendromap::EmbeddingMatrix matrix;
};

struct dm_dendrogram {
  dendromap::Dendrogram tree;
};

struct dm_artifact {
  explicit dm_artifact(dendromap::BuildArtifact loaded)
      : artifact(std::move(loaded)), tree{artifact.dendrogram}, service(artifact) {}

  dendromap::BuildArtifact artifact;
  dm_dendrogram tree;  // copy exposed through dm_artifact_dendrogram
  dendromap::QueryService service;
};

namespace {

thread_local std::string last_error;

dm_status to_status(dendromap::ErrorCode code) {
  using dendromap::ErrorCode;
  switch (code) {
    case ErrorCode::Parse: return DM_ERR_PARSE;
    case ErrorCode::Validation: return DM_ERR_VALIDATION;
    case ErrorCode::Shape: return DM_ERR_SHAPE;
    case ErrorCode::NonFinite: return DM_ERR_NON_FINITE;
    case ErrorCode::EmptyInput: return DM_ERR_EMPTY_INPUT;
    case ErrorCode::Range: return DM_ERR_RANGE;
    case ErrorCode::UnknownNode: return DM_ERR_UNKNOWN_NODE;
    case ErrorCode::UnknownLeaf: return DM_ERR_UNKNOWN_LEAF;
    case ErrorCode::DegenerateSpace: return DM_ERR_DEGENERATE_SPACE;
    case ErrorCode::NoPredictions: return DM_ERR_NO_PREDICTIONS;
    case ErrorCode::EmptySubset: return DM_ERR_EMPTY_SUBSET;
    case ErrorCode::Io: return DM_ERR_IO;
    case ErrorCode::InvalidArgument: return DM_ERR_INVALID_ARGUMENT;
  }
  return DM_ERR_INTERNAL;
}

template <class Fn>
dm_status guarded(Fn&& fn) {
  try {
    fn();
    last_error.clear();
    return DM_OK;
  } catch (const dendromap::Error& e) {
    last_error = e.what();
    return to_status(e.code());
  } catch (const std::bad_alloc&) {
    last_error = "out of memory";
    return DM_ERR_INTERNAL;
  } catch (const std::exception& e) {
    last_error = e.what();
    return DM_ERR_INTERNAL;
  }
}

void require(const void* ptr, const char* what) {
  if (ptr == nullptr) dendromap::fail(dendromap::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

char* copy_string(std::string_view text) {
  auto* out = static_cast<char*>(std::malloc(text.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, text.data(), text.size());
  out[text.size()] = '\0';
  return out;
}

dendromap::NodeId node_or_root(const dendromap::Dendrogram& tree, int64_t node) {
  return node < 0 ? tree.root() : static_cast<dendromap::NodeId>(node);
}

dendromap::LayoutConfig to_config(const dm_layout_config* config) {
  const auto c = config ? *config : dm_layout_config_default();
  return {c.viewport_w, c.viewport_h, c.image_w, c.image_h, c.padding, c.header_h};
}

dendromap::GridViewport to_view(const dm_grid_view* view) {
  const auto v = view ? *view : dm_grid_view_default();
  return {v.viewport_w, v.viewport_h, v.image_w, v.image_h};
}

}  // namespace

extern "C" {

const char* dm_version(void) { return dendromap::library_version(); }

const char* dm_status_name(dm_status status) {
  switch (status) {
    case DM_OK: return "ok";
    case DM_ERR_PARSE: return "parse_error";
    case DM_ERR_VALIDATION: return "validation_error";
    case DM_ERR_SHAPE: return "shape_error";
    case DM_ERR_NON_FINITE: return "non_finite_error";
    case DM_ERR_EMPTY_INPUT: return "empty_input";
    case DM_ERR_RANGE: return "range_error";
    case DM_ERR_UNKNOWN_NODE: return "unknown_node";
    case DM_ERR_UNKNOWN_LEAF: return "unknown_leaf";
    case DM_ERR_DEGENERATE_SPACE: return "degenerate_space";
    case DM_ERR_NO_PREDICTIONS: return "no_predictions";
    case DM_ERR_EMPTY_SUBSET: return "empty_subset";
    case DM_ERR_IO: return "io_error";
    case DM_ERR_INVALID_ARGUMENT: return "invalid_argument";
    case DM_ERR_INTERNAL: return "internal_error";
  }
  return "unknown_status";
}

const char* dm_last_error(void) { return last_error.c_str(); }

void dm_string_free(char* str) { std::free(str); }

dm_status dm_embeddings_load(const char* path, size_t expected_rows, dm_embeddings** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto matrix = dendromap::load_embeddings(
        path, expected_rows == 0 ? std::nullopt : std::optional<std::size_t>(expected_rows));
    *out = new dm_embeddings{std::move(matrix)};
  });
}

dm_status dm_embeddings_from_rows(const double* values, size_t rows, size_t dims, dm_embeddings** out) {
  return guarded([&] {
    require(out, "out");
    if (rows * dims > 0) require(values, "values");
    std::vector<double> copy(values, values + rows * dims);
    *out = new dm_embeddings{dendromap::EmbeddingMatrix(rows, dims, std::move(copy))};
  });
}

void dm_embeddings_free(dm_embeddings* embeddings) { delete embeddings; }

dm_status dm_embeddings_shape(const dm_embeddings* embeddings, size_t* rows, size_t* dims) {
  return guarded([&] {
    require(embeddings, "embeddings");
    if (rows) *rows = embeddings->matrix.rows();
    if (dims) *dims = embeddings->matrix.dims();
  });
}

dm_status dm_dendrogram_build(const dm_embeddings* embeddings, dm_dendrogram** out) {
  return guarded([&] {
    require(embeddings, "embeddings");
    require(out, "out");
    *out = new dm_dendrogram{dendromap::ward_dendrogram(embeddings->matrix)};
  });
}

void dm_dendrogram_free(dm_dendrogram* tree) { delete tree; }

size_t dm_dendrogram_leaf_count(const dm_dendrogram* tree) { return tree ? tree->tree.leaf_count() : 0; }

int64_t dm_dendrogram_root(const dm_dendrogram* tree) {
  return tree && tree->tree.node_count() ? static_cast<int64_t>(tree->tree.root()) : -1;
}

dm_status dm_dendrogram_node(const dm_dendrogram* tree, int64_t id, dm_node_info* out) {
  return guarded([&] {
    require(tree, "tree");
    require(out, "out");
    if (id < 0) dendromap::fail(dendromap::ErrorCode::UnknownNode, "negative node id");
    const auto& node = tree->tree.node(static_cast<dendromap::NodeId>(id));
    const auto as_id = [](dendromap::NodeId n) {
      return n == dendromap::kNoNode ? int64_t{-1} : static_cast<int64_t>(n);
    };
    *out = {as_id(node.id), as_id(node.left), as_id(node.right), as_id(node.parent),
            node.leaf_count, node.merge_height, node.height_below};
  });
}

dm_status dm_dendrogram_leaf_order(const dm_dendrogram* tree, int64_t* out) {
  return guarded([&] {
    require(tree, "tree");
    require(out, "out");
    const auto& order = tree->tree.leaf_order();
    for (std::size_t i = 0; i < order.size(); ++i) out[i] = static_cast<int64_t>(order[i]);
  });
}

dm_status dm_dendrogram_cut(const dm_dendrogram* tree, int64_t root, size_t k, int64_t* out_ids) {
  return guarded([&] {
    require(tree, "tree");
    require(out_ids, "out_ids");
    const auto cut = dendromap::subtree_cut(tree->tree, node_or_root(tree->tree, root), k);
    for (std::size_t i = 0; i < cut.node_ids.size(); ++i) out_ids[i] = static_cast<int64_t>(cut.node_ids[i]);
  });
}

dm_status dm_dendrogram_lca_hops(const dm_dendrogram* tree, size_t i, size_t j, size_t* out) {
  return guarded([&] {
    require(tree, "tree");
    require(out, "out");
    *out = dendromap::lca_hops(tree->tree, i, j);
  });
}

dm_status dm_dendrogram_to_json(const dm_dendrogram* tree, char** out_json) {
  return guarded([&] {
    require(tree, "tree");
    require(out_json, "out_json");
    *out_json = copy_string(dendromap::dendrogram_to_json(tree->tree));
  });
}

dm_layout_config dm_layout_config_default(void) {
  const dendromap::LayoutConfig c;
  return {c.viewport_w, c.viewport_h, c.image_w, c.image_h, c.padding, c.header_h};
}

dm_status dm_dendrogram_layout_json(const dm_dendrogram* tree, int64_t node, size_t k,
                                    const dm_layout_config* config, char** out_json) {
  return guarded([&] {
    require(tree, "tree");
    require(out_json, "out_json");
    const auto result = dendromap::zoom(tree->tree, node_or_root(tree->tree, node), k, to_config(config));
    *out_json = copy_string(dendromap::layout_to_json(result));
  });
}

dm_status dm_lap_solve(const double* costs, size_t n, size_t* out_row_to_col, double* out_cost) {
  return guarded([&] {
    if (n > 0) {
      require(costs, "costs");
      require(out_row_to_col, "out_row_to_col");
    }
    const dendromap::CostMatrix matrix(n, std::vector<double>(costs, costs + n * n));
    const auto solution = dendromap::solve_lap(matrix);
    for (std::size_t i = 0; i < n; ++i) out_row_to_col[i] = solution.row_to_col[i];
    if (out_cost) *out_cost = solution.total_cost;
  });
}

dm_grid_view dm_grid_view_default(void) {
  const dendromap::GridViewport v;
  return {v.viewport_w, v.viewport_h, v.image_w, v.image_h};
}

dm_status dm_gridify_file(const char* projection_path, const dm_grid_view* view, char** out_json) {
  return guarded([&] {
    require(projection_path, "projection_path");
    require(out_json, "out_json");
    const auto projection = dendromap::load_projection(projection_path, std::nullopt);
    *out_json = copy_string(dendromap::grid_to_json(dendromap::gridify(projection, to_view(view))));
  });
}

dm_status dm_zoom_regrid_file(const char* projection_path, double click_x, double click_y, size_t k,
                              const dm_grid_view* view, char** out_json) {
  return guarded([&] {
    require(projection_path, "projection_path");
    require(out_json, "out_json");
    const auto projection = dendromap::load_projection(projection_path, std::nullopt);
    const auto grid = dendromap::zoom_regrid(projection, {click_x, click_y}, k, to_view(view));
    *out_json = copy_string(dendromap::grid_to_json(grid));
  });
}

dm_status dm_build(const char* manifest_path, const char* embeddings_path, const char* projection_path,
                   const char* out_dir) {
  return guarded([&] {
    require(manifest_path, "manifest_path");
    require(embeddings_path, "embeddings_path");
    require(out_dir, "out_dir");
    std::optional<std::filesystem::path> projection;
    if (projection_path != nullptr) projection = projection_path;
    dendromap::build_artifact(manifest_path, embeddings_path, projection, out_dir);
  });
}

dm_status dm_artifact_open(const char* dir, dm_artifact** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = new dm_artifact(dendromap::load_artifact(dir));
  });
}

void dm_artifact_free(dm_artifact* artifact) { delete artifact; }

size_t dm_artifact_size(const dm_artifact* artifact) {
  return artifact ? artifact->artifact.manifest.size() : 0;
}

const dm_dendrogram* dm_artifact_dendrogram(const dm_artifact* artifact) {
  return artifact ? &artifact->tree : nullptr;
}

dm_status dm_artifact_layout_json(const dm_artifact* artifact, int64_t node, size_t k,
                                  const dm_layout_config* config, char** out_json) {
  return guarded([&] {
    require(artifact, "artifact");
    require(out_json, "out_json");
    const auto& tree = artifact->artifact.dendrogram;
    const auto result =
        dendromap::zoom(tree, node_or_root(tree, node), k, to_config(config), &artifact->artifact.manifest);
    *out_json = copy_string(dendromap::layout_to_json(result));
  });
}

dm_status dm_artifact_class_table_json(const dm_artifact* artifact, int64_t node, char** out_json) {
  return guarded([&] {
    require(artifact, "artifact");
    require(out_json, "out_json");
    const auto& a = artifact->artifact;
    const auto leaves = a.dendrogram.leaves_under(node_or_root(a.dendrogram, node));
    *out_json = copy_string(dendromap::class_table_to_json(a.manifest, dendromap::class_table(a.manifest, leaves)));
  });
}

dm_status dm_artifact_similar(const dm_artifact* artifact, size_t id, size_t n, size_t* out_ids) {
  return guarded([&] {
    require(artifact, "artifact");
    require(out_ids, "out_ids");
    const auto ids = dendromap::similar_images(artifact->artifact.embeddings, id, n);
    for (std::size_t i = 0; i < ids.size(); ++i) out_ids[i] = ids[i];
  });
}

dm_status dm_artifact_evaluate(const dm_artifact* artifact, const char* grid_path, const size_t* k_values,
                               size_t k_count, char** out_csv, char** out_json) {
  return guarded([&] {
    require(artifact, "artifact");
    const auto& a = artifact->artifact;
    const auto n = a.manifest.size();

    std::vector<std::unique_ptr<dendromap::DistanceOracle>> owned;
    owned.push_back(dendromap::dendromap_distance_oracle(a.dendrogram));
    if (a.projection) owned.push_back(dendromap::projection_distance_oracle(*a.projection));
    if (grid_path != nullptr) {
      const auto grid = dendromap::grid_from_json(dendromap::read_file(grid_path));
      owned.push_back(dendromap::grid_distance_oracle(grid, n));
    }
    owned.push_back(dendromap::random_permutation_oracle(n, 0));
    std::vector<const dendromap::DistanceOracle*> methods;
    for (const auto& m : owned) methods.push_back(m.get());

    std::vector<std::size_t> ks;
    if (k_count == 0) {
      ks = dendromap::default_k_values(n);
    } else {
      require(k_values, "k_values");
      ks.assign(k_values, k_values + k_count);
    }
    const auto report = dendromap::knn_preservation(a.embeddings, methods, ks);
    if (out_csv) *out_csv = copy_string(dendromap::report_to_csv(report));
    if (out_json) *out_json = copy_string(dendromap::report_to_json(report));
  });
}

dm_status dm_service_request(const dm_artifact* artifact, const char* method, const char* target,
                             dm_http_response* out) {
  return guarded([&] {
    require(artifact, "artifact");
    require(method, "method");
    require(target, "target");
    require(out, "out");
    const auto reply = artifact->service.handle(method, target);
    dm_http_response result{reply.status, nullptr, nullptr, reply.body.size(), nullptr};
    result.content_type = copy_string(reply.content_type);
    result.body = copy_string(reply.body);
    if (reply.location) result.location = copy_string(*reply.location);
    *out = result;
  });
}

void dm_http_response_free(dm_http_response* response) {
  if (response == nullptr) return;
  std::free(response->content_type);
  std::free(response->body);
  std::free(response->location);
  *response = dm_http_response{};
}

dm_status dm_serve(const dm_artifact* artifact, const char* host, int port) {
  return guarded([&] {
    require(artifact, "artifact");
    dendromap::serve(artifact->service, host ? host : "127.0.0.1", port);
  });
}

}  // extern "C"

/*
 * C interface to the dendromap engine.
 *
 * Objects are opaque handles created by the open, load and build functions and
 * released with the matching *_free. Every fallible call returns a dm_status;
 * on failure dm_last_error() describes the problem for the calling thread.
 * Strings returned through char** are heap-allocated and released with
 * dm_string_free. Handles are immutable after creation and may be shared
 * between threads.
 */
#ifndef DENDROMAP_H
#define DENDROMAP_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(DENDROMAP_BUILDING)
#    define DM_API __declspec(dllexport)
#  else
#    define DM_API __declspec(dllimport)
#  endif
#else
#  define DM_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Values double as process exit codes for the command-line tool. */
typedef enum dm_status {
  DM_OK = 0,
  DM_ERR_PARSE = 2,
  DM_ERR_VALIDATION = 3,
  DM_ERR_SHAPE = 4,
  DM_ERR_NON_FINITE = 5,
  DM_ERR_EMPTY_INPUT = 6,
  DM_ERR_RANGE = 7,
  DM_ERR_UNKNOWN_NODE = 8,
  DM_ERR_UNKNOWN_LEAF = 9,
  DM_ERR_DEGENERATE_SPACE = 10,
  DM_ERR_NO_PREDICTIONS = 11,
  DM_ERR_EMPTY_SUBSET = 12,
  DM_ERR_IO = 13,
  DM_ERR_INVALID_ARGUMENT = 14,
  DM_ERR_INTERNAL = 70
} dm_status;

typedef struct dm_embeddings dm_embeddings;
typedef struct dm_dendrogram dm_dendrogram;
typedef struct dm_artifact dm_artifact;

DM_API const char* dm_version(void);
DM_API const char* dm_status_name(dm_status status);
/* Message for the last failed call on this thread; "" when none. */
DM_API const char* dm_last_error(void);
DM_API void dm_string_free(char* str);

/* ---- embeddings ---------------------------------------------------------- */

/* expected_rows == 0 accepts any row count. */
DM_API dm_status dm_embeddings_load(const char* path, size_t expected_rows, dm_embeddings** out);
/* Copies a row-major rows x dims matrix. */
DM_API dm_status dm_embeddings_from_rows(const double* values, size_t rows, size_t dims,
                                         dm_embeddings** out);
DM_API void dm_embeddings_free(dm_embeddings* embeddings);
DM_API dm_status dm_embeddings_shape(const dm_embeddings* embeddings, size_t* rows, size_t* dims);

/* ---- dendrogram ---------------------------------------------------------- */

typedef struct dm_node_info {
  int64_t id;
  int64_t left;   /* -1 for leaves */
  int64_t right;  /* -1 for leaves */
  int64_t parent; /* -1 for the root */
  size_t leaf_count;
  double merge_height;
  size_t depth_remaining;
} dm_node_info;

/* Exact Ward linkage over Euclidean distances. */
DM_API dm_status dm_dendrogram_build(const dm_embeddings* embeddings, dm_dendrogram** out);
DM_API void dm_dendrogram_free(dm_dendrogram* tree);
DM_API size_t dm_dendrogram_leaf_count(const dm_dendrogram* tree);
DM_API int64_t dm_dendrogram_root(const dm_dendrogram* tree);
DM_API dm_status dm_dendrogram_node(const dm_dendrogram* tree, int64_t id, dm_node_info* out);
/* Leaf ids in left-to-right order; `out` holds leaf_count entries. */
DM_API dm_status dm_dendrogram_leaf_order(const dm_dendrogram* tree, int64_t* out);
/* Breadth-first cut of k clusters below `root` (negative: the tree root).
 * `out_ids` must hold k entries. */
DM_API dm_status dm_dendrogram_cut(const dm_dendrogram* tree, int64_t root, size_t k, int64_t* out_ids);
DM_API dm_status dm_dendrogram_lca_hops(const dm_dendrogram* tree, size_t i, size_t j, size_t* out);
DM_API dm_status dm_dendrogram_to_json(const dm_dendrogram* tree, char** out_json);

/* ---- treemap layout ------------------------------------------------------ */

typedef struct dm_layout_config {
  int64_t viewport_w;
  int64_t viewport_h;
  int64_t image_w;
  int64_t image_h;
  int64_t padding;
  int64_t header_h;
} dm_layout_config;

DM_API dm_layout_config dm_layout_config_default(void);
/* Zoomed layout of `node` (negative: root) with min(k, leaf_count) clusters. */
DM_API dm_status dm_dendrogram_layout_json(const dm_dendrogram* tree, int64_t node, size_t k,
                                           const dm_layout_config* config, char** out_json);

/* ---- assignment and grid baseline ---------------------------------------- */

/* Minimum-cost assignment of an n x n row-major cost matrix. */
DM_API dm_status dm_lap_solve(const double* costs, size_t n, size_t* out_row_to_col, double* out_cost);

typedef struct dm_grid_view {
  int64_t viewport_w;
  int64_t viewport_h;
  int64_t image_w;
  int64_t image_h;
} dm_grid_view;

DM_API dm_grid_view dm_grid_view_default(void);
DM_API dm_status dm_gridify_file(const char* projection_path, const dm_grid_view* view, char** out_json);
DM_API dm_status dm_zoom_regrid_file(const char* projection_path, double click_x, double click_y, size_t k,
                                     const dm_grid_view* view, char** out_json);

/* ---- artifacts ----------------------------------------------------------- */

/* projection_path may be NULL. Writes artifact.json, manifest.json and
 * dendrogram.json into out_dir. */
DM_API dm_status dm_build(const char* manifest_path, const char* embeddings_path,
                          const char* projection_path, const char* out_dir);
DM_API dm_status dm_artifact_open(const char* dir, dm_artifact** out);
DM_API void dm_artifact_free(dm_artifact* artifact);
DM_API size_t dm_artifact_size(const dm_artifact* artifact);
DM_API const dm_dendrogram* dm_artifact_dendrogram(const dm_artifact* artifact);
DM_API dm_status dm_artifact_layout_json(const dm_artifact* artifact, int64_t node, size_t k,
                                         const dm_layout_config* config, char** out_json);
DM_API dm_status dm_artifact_class_table_json(const dm_artifact* artifact, int64_t node, char** out_json);
/* `out_ids` must hold n entries. */
DM_API dm_status dm_artifact_similar(const dm_artifact* artifact, size_t id, size_t n, size_t* out_ids);
/* Neighbour-preservation report for the dendrogram, the artifact's projection
 * (when built with one), the grid at grid_path (may be NULL) and a seeded random
 * permutation baseline. k_count == 0 selects the default k list. */
DM_API dm_status dm_artifact_evaluate(const dm_artifact* artifact, const char* grid_path, const size_t* k_values,
                                      size_t k_count, char** out_csv, char** out_json);

/* ---- query service ------------------------------------------------------- */

typedef struct dm_http_response {
  int status;
  char* content_type;
  char* body; /* body_len bytes, NUL-terminated */
  size_t body_len;
  char* location; /* redirect target or NULL */
} dm_http_response;

/* Answers one request without a network round trip. */
DM_API dm_status dm_service_request(const dm_artifact* artifact, const char* method, const char* target,
                                    dm_http_response* out);
DM_API void dm_http_response_free(dm_http_response* response);
/* Blocks serving HTTP on host:port. */
DM_API dm_status dm_serve(const dm_artifact* artifact, const char* host, int port);

#ifdef __cplusplus
}
#endif

#endif /* DENDROMAP_H */

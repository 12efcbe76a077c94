#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dendromap/dendromap.h"

namespace {

// Owns a char* returned by the library.
struct OwnedString {
  char* ptr = nullptr;
  ~OwnedString() { dm_string_free(ptr); }
  std::string_view view() const { return ptr ? std::string_view(ptr) : std::string_view(); }
};

struct ArtifactHandle {
  dm_artifact* ptr = nullptr;
  ~ArtifactHandle() { dm_artifact_free(ptr); }
};

int report(dm_status status) {
  if (status != DM_OK) std::cerr << "error [" << dm_status_name(status) << "]: " << dm_last_error() << "\n";
  return static_cast<int>(status);
}

int write_output(const std::string& path, std::string_view text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return 0;
  }
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) {
    std::cerr << "error [io_error]: cannot write " << path << "\n";
    return DM_ERR_IO;
  }
  return 0;
}

int open_artifact(const std::string& dir, ArtifactHandle& handle) {
  return report(dm_artifact_open(dir.c_str(), &handle.ptr));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hierarchical image-embedding explorer"};
  app.set_version_flag("--version", std::string(dm_version()));
  app.require_subcommand(1);

  // build
  std::string manifest, embeddings, projection, out_dir;
  auto* build = app.add_subcommand("build", "Cluster embeddings and write an artifact directory");
  build->add_option("--manifest", manifest, "Dataset manifest (JSON)")->required();
  build->add_option("--embeddings", embeddings, "Embedding matrix (binary or text)")->required();
  build->add_option("--projection", projection, "Optional N x 2 projection");
  build->add_option("--out", out_dir, "Output directory")->required();

  // gridify
  std::string grid_projection, grid_out;
  dm_grid_view view = dm_grid_view_default();
  double click_x = 0, click_y = 0;
  std::size_t zoom_k = 25;
  auto* gridify = app.add_subcommand("gridify", "Snap a 2-D projection to a grid");
  gridify->add_option("--projection", grid_projection, "N x 2 projection")->required();
  gridify->add_option("--out", grid_out, "Output grid JSON (default stdout)");
  gridify->add_option("--width", view.viewport_w, "Viewport width")->capture_default_str();
  gridify->add_option("--height", view.viewport_h, "Viewport height")->capture_default_str();
  gridify->add_option("--image", view.image_w, "Image size in pixels")->capture_default_str();
  auto* click_x_opt = gridify->add_option("--click-x", click_x, "Zoom: click x in projection space");
  auto* click_y_opt = gridify->add_option("--click-y", click_y, "Zoom: click y in projection space");
  gridify->add_option("--k", zoom_k, "Zoom: number of nearest points")->capture_default_str();
  click_x_opt->needs(click_y_opt);
  click_y_opt->needs(click_x_opt);

  // eval
  std::string eval_artifact, eval_grid, eval_out;
  std::vector<std::size_t> eval_k;
  auto* eval = app.add_subcommand("eval", "Neighbour-preservation report");
  eval->add_option("--artifact", eval_artifact, "Artifact directory")->required();
  eval->add_option("--grid", eval_grid, "Grid JSON from 'gridify'");
  eval->add_option("--k", eval_k, "Neighbourhood sizes")->delimiter(',');
  eval->add_option("--out", eval_out, "Output directory for knn_report.csv/json (default: CSV to stdout)");

  // serve
  std::string serve_artifact, host = "127.0.0.1";
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Serve the query API over HTTP");
  serve->add_option("--artifact", serve_artifact, "Artifact directory")->required();
  serve->add_option("--host", host, "Bind address")->capture_default_str();
  serve->add_option("--port", port, "Port")->capture_default_str()->check(CLI::Range(1, 65535));

  // query
  std::string query_artifact, target, method = "GET";
  auto* query = app.add_subcommand("query", "Answer one API request offline and print the body");
  query->add_option("--artifact", query_artifact, "Artifact directory")->required();
  query->add_option("target", target, "Request target, e.g. /layout?k=8")->required();
  query->add_option("--method", method, "HTTP method")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  if (build->parsed()) {
    const auto status = dm_build(manifest.c_str(), embeddings.c_str(),
                                 projection.empty() ? nullptr : projection.c_str(), out_dir.c_str());
    if (status == DM_OK) std::cerr << "wrote artifact to " << out_dir << "\n";
    return report(status);
  }

  if (gridify->parsed()) {
    view.image_h = view.image_w;
    OwnedString json;
    const auto status = click_x_opt->count() > 0
                            ? dm_zoom_regrid_file(grid_projection.c_str(), click_x, click_y, zoom_k, &view, &json.ptr)
                            : dm_gridify_file(grid_projection.c_str(), &view, &json.ptr);
    if (status != DM_OK) return report(status);
    return write_output(grid_out, json.view());
  }

  if (eval->parsed()) {
    ArtifactHandle artifact;
    if (const int rc = open_artifact(eval_artifact, artifact)) return rc;
    OwnedString csv, json;
    const auto status = dm_artifact_evaluate(artifact.ptr, eval_grid.empty() ? nullptr : eval_grid.c_str(),
                                             eval_k.data(), eval_k.size(), &csv.ptr, &json.ptr);
    if (status != DM_OK) return report(status);
    if (eval_out.empty()) return write_output("", csv.view());
    std::error_code ec;
    std::filesystem::create_directories(eval_out, ec);
    if (const int rc = write_output(eval_out + "/knn_report.csv", csv.view())) return rc;
    return write_output(eval_out + "/knn_report.json", json.view());
  }

  if (serve->parsed()) {
    ArtifactHandle artifact;
    if (const int rc = open_artifact(serve_artifact, artifact)) return rc;
    std::cerr << "serving " << dm_artifact_size(artifact.ptr) << " images on http://" << host << ":" << port << "\n";
    return report(dm_serve(artifact.ptr, host.c_str(), port));
  }

  if (query->parsed()) {
    ArtifactHandle artifact;
    if (const int rc = open_artifact(query_artifact, artifact)) return rc;
    dm_http_response response{};
    const auto status = dm_service_request(artifact.ptr, method.c_str(), target.c_str(), &response);
    if (status != DM_OK) return report(status);
    std::cout.write(response.body, static_cast<std::streamsize>(response.body_len));
    const int rc = response.status >= 400 ? 1 : 0;
    if (response.status >= 400) std::cerr << "HTTP " << response.status << "\n";
    dm_http_response_free(&response);
    return rc;
  }
  return 0;
}

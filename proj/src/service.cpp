#include "dendromap/service.hpp"

#include <charconv>
#include <cctype>
#include <functional>

#include <httplib.h>
#include <json.hpp>

#include "dendromap/error.hpp"
#include "dendromap/metrics.hpp"

namespace dendromap {

namespace {

using nlohmann::json;

HttpResponse json_response(int status, std::string body) {
  return {status, "application/json", std::move(body), std::nullopt};
}

HttpResponse error_response(int status, std::string_view code, std::string_view message) {
  const json body = {{"error", {{"code", code}, {"message", message}}}};
  return json_response(status, body.dump() + "\n");
}

int status_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownNode:
    case ErrorCode::UnknownLeaf:
      return 404;
    case ErrorCode::Io:
    case ErrorCode::Parse:
      return 500;
    default:
      return 400;
  }
}

int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

std::string percent_decode(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  for (std::size_t i = 0; i < text.size(); ++i) {
    if (text[i] == '+') {
      out += ' ';
    } else if (text[i] == '%' && i + 2 < text.size() && hex_value(text[i + 1]) >= 0 &&
               hex_value(text[i + 2]) >= 0) {
      out += static_cast<char>(hex_value(text[i + 1]) * 16 + hex_value(text[i + 2]));
      i += 2;
    } else {
      out += text[i];
    }
  }
  return out;
}

std::size_t parse_count(std::string_view name, std::string_view text) {
  std::size_t value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (text.empty() || ec != std::errc{} || ptr != text.data() + text.size())
    fail(ErrorCode::InvalidArgument, "parameter '" + std::string(name) + "' must be a non-negative integer");
  return value;
}

std::string content_type_for(const std::filesystem::path& path) {
  auto ext = path.extension().string();
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == ".png") return "image/png";
  if (ext == ".jpg" || ext == ".jpeg") return "image/jpeg";
  if (ext == ".gif") return "image/gif";
  if (ext == ".webp") return "image/webp";
  if (ext == ".svg") return "image/svg+xml";
  if (ext == ".bmp") return "image/bmp";
  return "application/octet-stream";
}

}  // namespace

QueryService::QueryService(const BuildArtifact& artifact) : artifact_(artifact) {}

HttpResponse QueryService::handle(std::string_view method, std::string_view target) const {
  const auto question = target.find('?');
  const auto path = target.substr(0, question);
  Params params;
  if (question != std::string_view::npos) {
    auto query = target.substr(question + 1);
    while (!query.empty()) {
      const auto amp = query.find('&');
      const auto pair = query.substr(0, amp);
      query = amp == std::string_view::npos ? std::string_view{} : query.substr(amp + 1);
      if (pair.empty()) continue;
      const auto eq = pair.find('=');
      params[percent_decode(pair.substr(0, eq))] =
          eq == std::string_view::npos ? std::string{} : percent_decode(pair.substr(eq + 1));
    }
  }

  if (method != "GET") return error_response(405, "method_not_allowed", "only GET is supported");
  try {
    if (path == "/dataset") return dataset();
    if (path == "/layout") return layout(params);
    if (path == "/class-table") return class_table(params);
    if (path == "/similar") return similar(params);
    if (path.starts_with("/image/")) return image(path.substr(7));
    return error_response(404, "not_found", "no endpoint at " + std::string(path));
  } catch (const Error& e) {
    return error_response(status_for(e.code()), to_string(e.code()), e.what());
  } catch (const std::exception& e) {
    return error_response(500, "internal_error", e.what());
  }
}

HttpResponse QueryService::dataset() const {
  const auto& manifest = artifact_.manifest;
  const json body = {{"schema_version", kArtifactSchemaVersion},
                     {"tool_version", artifact_.metadata.tool_version},
                     {"items", manifest.size()},
                     {"dims", artifact_.embeddings.dims()},
                     {"classes", manifest.classes},
                     {"has_predictions", manifest.has_predictions},
                     {"has_projection", artifact_.projection.has_value()},
                     {"root", artifact_.dendrogram.root()},
                     {"node_count", artifact_.dendrogram.node_count()},
                     {"defaults",
                      {{"k", kDefaultClusters},
                       {"image_size", kImageMedium},
                       {"image_sizes", {{"small", kImageSmall}, {"medium", kImageMedium}, {"large", kImageLarge}}}}}};
  return json_response(200, body.dump() + "\n");
}

HttpResponse QueryService::layout(const Params& params) const {
  const auto& tree = artifact_.dendrogram;
  const auto get = [&](std::string_view key) -> const std::string* {
    const auto it = params.find(key);
    return it == params.end() ? nullptr : &it->second;
  };

  const NodeId node = get("node") ? parse_count("node", *get("node")) : tree.root();
  tree.node(node);
  const std::size_t k = get("k") ? parse_count("k", *get("k")) : kDefaultClusters;
  if (k < 1) fail(ErrorCode::Range, "k must be at least 1");

  LayoutConfig config;
  if (const auto* w = get("w")) config.viewport_w = static_cast<std::int64_t>(parse_count("w", *w));
  if (const auto* h = get("h")) config.viewport_h = static_cast<std::int64_t>(parse_count("h", *h));
  std::int64_t image = kImageMedium;
  if (const auto* img = get("img")) {
    if (*img == "small")
      image = kImageSmall;
    else if (*img == "medium")
      image = kImageMedium;
    else if (*img == "large")
      image = kImageLarge;
    else
      image = static_cast<std::int64_t>(parse_count("img", *img));
  }
  config.image_w = config.image_h = image;

  const auto result = zoom(tree, node, k, config, &artifact_.manifest);
  return json_response(200, layout_to_json(result));
}

HttpResponse QueryService::class_table(const Params& params) const {
  const auto& tree = artifact_.dendrogram;
  const auto it = params.find("node");
  const NodeId node = it == params.end() ? tree.root() : parse_count("node", it->second);
  const auto leaves = tree.leaves_under(node);
  const auto rows = dendromap::class_table(artifact_.manifest, leaves);
  return json_response(200, class_table_to_json(artifact_.manifest, rows));
}

HttpResponse QueryService::similar(const Params& params) const {
  const auto id_it = params.find("id");
  if (id_it == params.end()) fail(ErrorCode::InvalidArgument, "missing parameter 'id'");
  const auto id = parse_count("id", id_it->second);
  const auto n_it = params.find("n");
  const std::size_t n =
      n_it == params.end() ? std::min<std::size_t>(10, artifact_.embeddings.rows() - 1) : parse_count("n", n_it->second);
  const auto ids = similar_images(artifact_.embeddings, id, n);
  const json body = {{"id", id}, {"n", n}, {"similar", ids}};
  return json_response(200, body.dump() + "\n");
}

HttpResponse QueryService::image(std::string_view id_text) const {
  const auto id = parse_count("id", id_text);
  if (id >= artifact_.manifest.size()) fail(ErrorCode::UnknownLeaf, "unknown image id " + std::to_string(id));
  const auto& uri = artifact_.manifest.items[id].image_uri;
  if (uri.starts_with("http://") || uri.starts_with("https://")) {
    HttpResponse redirect{302, "text/plain", "", uri};
    return redirect;
  }
  if (uri.empty()) return error_response(404, "not_found", "image " + std::to_string(id) + " has no uri");
  std::filesystem::path file(uri.starts_with("file://") ? uri.substr(7) : uri);
  if (file.is_relative()) file = artifact_.metadata.image_root / file;
  if (!std::filesystem::is_regular_file(file))
    return error_response(404, "not_found", "image file not found for id " + std::to_string(id));
  return {200, content_type_for(file), read_file(file), std::nullopt};
}

void serve(const QueryService& service, const std::string& host, int port, std::stop_token stop,
           const std::function<void(int)>& on_ready) {
  httplib::Server server;
  auto forward = [&service](const httplib::Request& req, httplib::Response& res) {
    const auto reply = service.handle(req.method, req.target);
    res.status = reply.status;
    if (reply.location) res.set_header("Location", *reply.location);
    res.set_content(reply.body, reply.content_type);
  };
  server.Get(".*", forward);
  server.Post(".*", forward);
  const int bound = port == 0 ? server.bind_to_any_port(host) : (server.bind_to_port(host, port) ? port : -1);
  if (bound < 0) fail(ErrorCode::Io, "cannot listen on " + host + ":" + std::to_string(port));
  const std::stop_callback halt(stop, [&server] { server.stop(); });
  if (on_ready) on_ready(bound);
  if (!server.listen_after_bind() && !stop.stop_requested())
    fail(ErrorCode::Io, "server on " + host + ":" + std::to_string(bound) + " stopped unexpectedly");
}

}  // namespace dendromap

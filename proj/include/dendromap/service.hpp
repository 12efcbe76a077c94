#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <stop_token>

#include "dendromap/artifact.hpp"
#include "dendromap/treemap.hpp"

namespace dendromap {

struct HttpResponse {
  int status = 200;
  std::string content_type = "application/json";
  std::string body;
  std::optional<std::string> location;  // set for redirects
};

// Image sizes offered by the size slider; "medium" is the default.
inline constexpr std::int64_t kImageSmall = 32;
inline constexpr std::int64_t kImageMedium = 48;
inline constexpr std::int64_t kImageLarge = 72;
inline constexpr std::size_t kDefaultClusters = 8;

/// Read-only query surface over a loaded artifact. Stateless: the response
/// is a function of the request target alone.
class QueryService {
 public:
  explicit QueryService(const BuildArtifact& artifact);

  /// `target` is the request path with an optional query string.
  HttpResponse handle(std::string_view method, std::string_view target) const;

 private:
  using Params = std::map<std::string, std::string, std::less<>>;

  HttpResponse dataset() const;
  HttpResponse layout(const Params& params) const;
  HttpResponse class_table(const Params& params) const;
  HttpResponse similar(const Params& params) const;
  HttpResponse image(std::string_view id) const;

  const BuildArtifact& artifact_;
};

/// Serves `service` over HTTP until `stop` is requested. Port 0 binds any
/// free port; `on_ready` receives the bound port once listening.
void serve(const QueryService& service, const std::string& host, int port, std::stop_token stop = {},
           const std::function<void(int)>& on_ready = {});

}  // namespace dendromap

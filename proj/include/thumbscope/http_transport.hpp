#pragma once

// HTTPS transport over cpp-httplib. Including this header requires OpenSSL
// at link time; the library headers never include it.

#ifndef CPPHTTPLIB_OPENSSL_SUPPORT
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include <httplib.h>

#include <string>

#include "thumbscope/corpus.hpp"

namespace thumbscope {

class HttplibTransport : public HttpTransport {
 public:
  explicit HttplibTransport(int timeout_seconds = 30) : timeout_(timeout_seconds) {}

  // A fresh client per request keeps concurrent calls independent.
  HttpResponse get(const std::string& url) override {
    const auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw TransportError("not an absolute URL: " + url, 0);
    const auto path_start = url.find('/', scheme_end + 3);
    const std::string origin = url.substr(0, path_start);
    const std::string path = path_start == std::string::npos ? "/" : url.substr(path_start);
    httplib::Client client(origin);
    client.set_follow_location(true);
    client.set_connection_timeout(timeout_, 0);
    client.set_read_timeout(timeout_, 0);
    const auto res = client.Get(path);
    if (!res) throw TransportError("request to " + origin + " failed: " + httplib::to_string(res.error()), 0);
    return {res->status, res->body};
  }

 private:
  int timeout_;
};

}  // namespace thumbscope

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <chrono>
#include <cstdlib>
#include <thread>

#include "seamstress/error.hpp"
#include "seamstress/llm_backend.hpp"

namespace seamstress {

using nlohmann::json;

namespace {

class HttpTransport : public ChatTransport {
 public:
  HttpTransport(BackendProfile profile, std::string api_key)
      : profile_(std::move(profile)), api_key_(std::move(api_key)), client_(profile_.base_url) {
    if (!client_.is_valid()) throw ConfigError("profile " + profile_.name + ": bad base_url " + profile_.base_url);
    client_.set_connection_timeout(std::chrono::seconds(std::min(profile_.timeout_seconds, 30)));
    client_.set_read_timeout(std::chrono::seconds(profile_.timeout_seconds));
    client_.set_write_timeout(std::chrono::seconds(profile_.timeout_seconds));
  }

  Completion complete(const std::vector<ChatMessage>& messages, std::size_t max_output) override {
    json body = json::object();
    json msgs = json::array();
    for (const auto& m : messages) msgs.push_back({{"role", m.role}, {"content", m.content}});
    body[json::json_pointer(profile_.messages_field)] = msgs;
    if (!profile_.model_field.empty()) body[json::json_pointer(profile_.model_field)] = profile_.model;
    if (!profile_.max_tokens_field.empty())
      body[json::json_pointer(profile_.max_tokens_field)] = max_output;

    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace(profile_.auth_header, profile_.auth_prefix + api_key_);
    for (const auto& [k, v] : profile_.extra_headers) headers.emplace(k, v);
    auto payload = body.dump();

    std::string last_error;
    bool rate_limited = false;
    for (int attempt = 0; attempt <= profile_.max_transport_retries; ++attempt) {
      if (attempt > 0) {
        long long ms = static_cast<long long>(profile_.backoff_ms) << std::min(attempt - 1, 16);
        std::this_thread::sleep_for(std::chrono::milliseconds(std::min(ms, 60000LL)));
      }
      auto res = client_.Post(profile_.path, headers, payload, "application/json");
      if (!res) {
        last_error = "request to " + profile_.base_url + profile_.path + " failed: " +
                     httplib::to_string(res.error());
        rate_limited = false;
        continue;
      }
      if (res->status == 429) {
        rate_limited = true;
        last_error = "rate limited by " + profile_.base_url;
        continue;
      }
      if (res->status >= 500) {
        rate_limited = false;
        last_error = "HTTP " + std::to_string(res->status) + " from " + profile_.base_url;
        continue;
      }
      if (res->status != 200)
        throw TransportError("HTTP " + std::to_string(res->status) + " from " + profile_.base_url +
                             ": " + res->body.substr(0, 500));
      return parse(res->body);
    }
    if (rate_limited) throw RateLimited(last_error);
    throw TransportError(last_error);
  }

 private:
  Completion parse(const std::string& text) const {
    try {
      auto j = json::parse(text);
      Completion c;
      c.text = j.at(json::json_pointer(profile_.response_text)).get<std::string>();
      if (!profile_.finish_reason.empty()) {
        json::json_pointer fp(profile_.finish_reason);
        c.truncated = j.contains(fp) && j.at(fp).is_string() &&
                      j.at(fp).get<std::string>() == profile_.truncated_reason;
      }
      return c;
    } catch (const json::exception& e) {
      throw TransportError("unexpected response body from " + profile_.base_url + ": " + e.what());
    }
  }

  BackendProfile profile_;
  std::string api_key_;
  httplib::Client client_;
};

}  // namespace

std::unique_ptr<ChatTransport> make_http_transport(const BackendProfile& profile) {
  profile.validate();
  if (profile.base_url.empty()) throw ConfigError("profile " + profile.name + " has no endpoint");
  std::string key;
  if (!profile.api_key_env.empty()) {
    const char* v = std::getenv(profile.api_key_env.c_str());
    if (!v || !*v)
      throw MissingCredentials("profile " + profile.name + " needs the environment variable " +
                               profile.api_key_env);
    key = v;
  }
  return std::make_unique<HttpTransport>(profile, key);
}

}  // namespace seamstress

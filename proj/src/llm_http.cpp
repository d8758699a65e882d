#define CPPHTTPLIB_OPENSSL_SUPPORT
#include "httplib.h"

#include <cstdlib>

#include "json.hpp"
#include "taxo/error.hpp"
#include "taxo/llm.hpp"

namespace taxo::llm {

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return (v != nullptr && *v != '\0') ? std::string(v) : std::move(fallback);
}

}  // namespace

HttpProvider::HttpProvider(std::string endpoint, std::string model, std::string api_key)
    : endpoint_(std::move(endpoint)), model_(std::move(model)), api_key_(std::move(api_key)) {}

std::shared_ptr<HttpProvider> HttpProvider::from_env() {
  const auto endpoint = env_or("TAXO_LLM_ENDPOINT", "");
  const auto key_var = env_or("TAXO_LLM_API_KEY_VAR", "OPENAI_API_KEY");
  const auto key = env_or(key_var.c_str(), "");
  if (endpoint.empty() || key.empty()) return nullptr;
  return std::make_shared<HttpProvider>(endpoint, env_or("TAXO_LLM_MODEL", "gpt-4"), key);
}

std::string HttpProvider::provider_id() const { return "http:" + endpoint_; }

std::string HttpProvider::complete(const std::string& prompt, std::chrono::milliseconds timeout) {
  const auto scheme_end = endpoint_.find("://");
  const auto path_begin =
      endpoint_.find('/', scheme_end == std::string::npos ? 0 : scheme_end + 3);
  const std::string base = endpoint_.substr(0, path_begin);
  const std::string path = path_begin == std::string::npos ? "/" : endpoint_.substr(path_begin);

  httplib::Client client(base);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout).count();
  client.set_connection_timeout(secs);
  client.set_read_timeout(secs);
  client.set_write_timeout(secs);
  client.set_bearer_token_auth(api_key_);

  nlohmann::json body;
  body["model"] = model_;
  body["temperature"] = 0;
  body["messages"] = nlohmann::json::array({{{"role", "user"}, {"content", prompt}}});

  auto res = client.Post(path, body.dump(), "application/json");
  if (!res) {
    if (res.error() == httplib::Error::Read || res.error() == httplib::Error::Write ||
        res.error() == httplib::Error::ConnectionTimeout) {
      throw TimeoutError(httplib::to_string(res.error()));
    }
    throw TransientError(httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransientError("HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw Error(ErrorCode::ProviderUnavailable, "HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    const auto j = nlohmann::json::parse(res->body);
    return j.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::ProviderUnavailable, std::string("unexpected response: ") + e.what());
  }
}

}  // namespace taxo::llm

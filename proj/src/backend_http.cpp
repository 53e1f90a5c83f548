#include "mhqg/backend.hpp"

#include "mhqg/error.hpp"

#include <httplib.h>
#include <nlohmann/json.hpp>

#include <chrono>
#include <regex>
#include <thread>

namespace mhqg {

namespace {

using nlohmann::json;

constexpr int kBackoffBaseMs = 200;
constexpr int kBackoffFactor = 2;

std::string require_string(const json& body, const char* key, const char* verb) {
  if (!body.is_object() || !body.contains(key) || !body.at(key).is_string()) {
    throw ProtocolError(std::string(verb) + ": response lacks string field \"" + key + "\"");
  }
  return body.at(key).get<std::string>();
}

}  // namespace

HttpBackend::HttpBackend(BackendDescriptor descriptor) : desc_(std::move(descriptor)) {
  desc_.kind = BackendKind::Remote;
  desc_.validate();
  static const std::regex kUrl(R"(^(https?://[^/]+)(/.*)?$)");
  std::smatch m;
  const std::string url = trim(*desc_.endpoint);
  if (!std::regex_match(url, m, kUrl)) throw ConfigError("malformed backend URL '" + url + "'");
  host_ = m[1].str();
  path_prefix_ = m[2].matched ? m[2].str() : std::string();
  while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
}

namespace {

json post(const std::string& host, const std::string& path, const json& payload, const BackendDescriptor& desc) {
  const std::string body = payload.dump();
  std::string last_error;
  for (int attempt = 0; attempt <= desc.retries; ++attempt) {
    if (attempt > 0) {
      int delay = kBackoffBaseMs;
      for (int k = 1; k < attempt; ++k) delay *= kBackoffFactor;
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }
    httplib::Client client(host);
    const auto timeout = std::chrono::milliseconds(desc.timeout_ms);
    client.set_connection_timeout(timeout);
    client.set_read_timeout(timeout);
    client.set_write_timeout(timeout);
    auto res = client.Post(path, body, "application/json");
    if (!res) {
      last_error = httplib::to_string(res.error());
      continue;
    }
    if (res->status == 200) {
      try {
        return json::parse(res->body);
      } catch (const json::parse_error& e) {
        throw ProtocolError(path + ": response is not JSON: " + e.what());
      }
    }
    if (res->status == 422) {
      std::string detail = res->body;
      try {
        const json err = json::parse(res->body);
        detail = err.value("error", std::string()) + ": " + err.value("detail", std::string());
      } catch (const json::exception&) {
      }
      throw ProtocolError(path + ": rejected (422) " + detail);
    }
    if (res->status == 501) throw BackendUnavailable(path + ": verb disabled on host (501)");
    if (res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    throw ProtocolError(path + ": unexpected HTTP " + std::to_string(res->status));
  }
  throw BackendUnavailable(path + ": " + last_error + " after " + std::to_string(desc.retries + 1) + " attempt(s)");
}

}  // namespace

std::string HttpBackend::do_gen_question_with_answer(std::string_view context, std::string_view answer) const {
  const json r = post(host_, path_prefix_ + "/v1/qg_ans", {{"context", context}, {"answer", answer}}, desc_);
  return require_string(r, "question", "qg_ans");
}

GeneratedQuestion HttpBackend::do_gen_question_with_entity(std::string_view context, std::string_view entity) const {
  const json r = post(host_, path_prefix_ + "/v1/qg_ent", {{"context", context}, {"entity", entity}}, desc_);
  return {require_string(r, "question", "qg_ent"), require_string(r, "answer", "qg_ent")};
}

std::string HttpBackend::do_describe_entity(std::string_view flattened_row, std::string_view entity) const {
  const json r = post(host_, path_prefix_ + "/v1/describe", {{"row", flattened_row}, {"entity", entity}}, desc_);
  return require_string(r, "sentence", "describe");
}

std::string HttpBackend::do_fill_mask(std::string_view text_with_mask, EntityType hint) const {
  const json r = post(host_, path_prefix_ + "/v1/fill_mask", {{"text", text_with_mask}, {"hint", to_string(hint)}}, desc_);
  return require_string(r, "fill", "fill_mask");
}

double HttpBackend::do_perplexity(std::string_view text) const {
  const json r = post(host_, path_prefix_ + "/v1/perplexity", {{"text", text}}, desc_);
  if (!r.is_object() || !r.contains("score") || !r.at("score").is_number()) {
    throw ProtocolError("perplexity: response lacks numeric field \"score\"");
  }
  return r.at("score").get<double>();
}

std::string HttpBackend::do_qdmr_to_question(const std::vector<std::string>& steps) const {
  const json r = post(host_, path_prefix_ + "/v1/qdmr2q", {{"steps", steps}}, desc_);
  return require_string(r, "question", "qdmr2q");
}

}  // namespace mhqg

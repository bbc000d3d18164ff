#ifdef TWOHOP_HTTPS
#define CPPHTTPLIB_OPENSSL_SUPPORT
#endif
#include "httplib.h"

#include "twohop/realworld/endpoint.hpp"

#include <cstdio>
#include <cstdlib>
#include <thread>

#include "json.hpp"
#include "twohop/util/hash.hpp"
#include "twohop/util/jsonl.hpp"

namespace twohop::realworld {

using nlohmann::json;

namespace {

std::string excerpt(const std::string& body) {
    constexpr std::size_t limit = 200;
    if (body.size() <= limit) return body;
    return body.substr(0, limit) + "...";
}

}  // namespace

// ---------------------------------------------------------------------------
// HttpChatAdapter

HttpChatAdapter::HttpChatAdapter(HttpEndpointConfig cfg) : cfg_(std::move(cfg)) {
    if (cfg_.base_url.empty()) throw std::invalid_argument("endpoint base_url is empty");
#ifndef TWOHOP_HTTPS
    if (cfg_.base_url.rfind("https://", 0) == 0)
        throw std::invalid_argument(
            "built without TLS support; use an http:// endpoint or rebuild with OpenSSL");
#endif
}

std::string HttpChatAdapter::name() const {
    return "http:" + (cfg_.model.empty() ? cfg_.base_url : cfg_.model);
}

void HttpChatAdapter::rate_limit() {
    if (cfg_.min_interval_ms <= 0) return;
    std::lock_guard<std::mutex> lock(rate_mutex_);
    const auto interval = std::chrono::milliseconds(cfg_.min_interval_ms);
    const auto now = std::chrono::steady_clock::now();
    if (last_start_.time_since_epoch().count() != 0 && now < last_start_ + interval)
        std::this_thread::sleep_until(last_start_ + interval);
    last_start_ = std::chrono::steady_clock::now();
}

std::string HttpChatAdapter::chat(const std::vector<model::ChatMessage>& messages,
                                  const model::GenerateOptions& opts) {
    const char* key = nullptr;
    if (!cfg_.api_key_env.empty()) {
        key = std::getenv(cfg_.api_key_env.c_str());
        if (key == nullptr || *key == '\0')
            throw std::runtime_error("environment variable " + cfg_.api_key_env +
                                     " is not set; endpoint credentials come from the environment");
    }

    json body;
    body["model"] = cfg_.model;
    auto& rows = body["messages"] = json::array();
    for (const auto& m : messages) rows.push_back({{"role", m.role}, {"content", m.content}});
    body["temperature"] = opts.temperature;
    body["max_tokens"] = opts.max_tokens;
    body["seed"] = opts.seed;
    const std::string payload = body.dump();

    httplib::Client client(cfg_.base_url);
    client.set_connection_timeout(cfg_.timeout_seconds, 0);
    client.set_read_timeout(cfg_.timeout_seconds, 0);
    client.set_write_timeout(cfg_.timeout_seconds, 0);
    httplib::Headers headers;
    if (key != nullptr) headers.emplace("Authorization", std::string("Bearer ") + key);

    const std::string where = "POST " + cfg_.base_url + cfg_.path;
    std::string last_error;
    for (int attempt = 0; attempt <= cfg_.max_retries; ++attempt) {
        if (attempt > 0)
            std::this_thread::sleep_for(std::chrono::milliseconds(100 * attempt));
        rate_limit();
        auto res = client.Post(cfg_.path, headers, payload, "application/json");
        if (!res) {
            last_error = "transport error: " + httplib::to_string(res.error());
            continue;
        }
        if (res->status == 429 || res->status >= 500) {
            last_error = "status " + std::to_string(res->status) + ": " + excerpt(res->body);
            continue;
        }
        if (res->status != 200)
            throw std::runtime_error(where + " failed with status " + std::to_string(res->status) +
                                     ": " + excerpt(res->body));
        try {
            const json reply = json::parse(res->body);
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const std::exception& e) {
            throw std::runtime_error(where + " returned an unexpected body (" + e.what() +
                                     "): " + excerpt(res->body));
        }
    }
    throw std::runtime_error(where + " failed after " + std::to_string(cfg_.max_retries + 1) +
                             " attempts; last error: " + last_error);
}

// ---------------------------------------------------------------------------
// CachingAdapter

CachingAdapter::CachingAdapter(model::ModelAdapter& inner, std::filesystem::path cache_dir,
                               long long max_calls)
    : inner_(inner), dir_(std::move(cache_dir)), max_calls_(max_calls) {
    std::filesystem::create_directories(dir_);
}

std::string CachingAdapter::name() const { return inner_.name(); }

bool CachingAdapter::can_suppress_cot() const { return inner_.can_suppress_cot(); }

std::string CachingAdapter::chat(const std::vector<model::ChatMessage>& messages,
                                 const model::GenerateOptions& opts) {
    json request;
    request["adapter"] = inner_.name();
    auto& rows = request["messages"] = json::array();
    for (const auto& m : messages) rows.push_back({{"role", m.role}, {"content", m.content}});
    request["temperature"] = opts.temperature;
    request["max_tokens"] = opts.max_tokens;
    request["seed"] = opts.seed;
    const std::string canonical = request.dump();

    char keybuf[17];
    std::snprintf(keybuf, sizeof keybuf, "%016llx",
                  (unsigned long long)util::fnv1a64(canonical));
    const std::filesystem::path entry = dir_ / (std::string(keybuf) + ".json");

    {
        std::shared_lock<std::shared_mutex> lock(cache_mutex_);
        if (std::filesystem::exists(entry)) {
            try {
                const json stored = util::read_json_file(entry);
                // Guard against hash collisions and stale formats: the entry
                // must carry the very request we are about to issue.
                if (stored.at("request") == request) {
                    hits_.fetch_add(1);
                    return stored.at("response").get<std::string>();
                }
            } catch (const std::exception&) {
                // Corrupt entry: fall through and rewrite it.
            }
        }
    }

    const long long ticket = misses_.fetch_add(1);
    if (max_calls_ >= 0 && ticket >= max_calls_) {
        misses_.fetch_sub(1);
        throw BudgetExhaustedError("endpoint call budget of " + std::to_string(max_calls_) +
                                   " exhausted");
    }

    std::string response;
    if (inner_.thread_safe()) {
        response = inner_.chat(messages, opts);
    } else {
        std::lock_guard<std::mutex> serialize(inner_mutex_);
        response = inner_.chat(messages, opts);
    }

    {
        std::unique_lock<std::shared_mutex> lock(cache_mutex_);
        std::filesystem::path tmp = entry;
        tmp += ".tmp";
        util::write_json_file(tmp, json{{"request", request}, {"response", response}});
        std::filesystem::rename(tmp, entry);
    }
    return response;
}

}  // namespace twohop::realworld

#pragma once

// Chat adapters for external HTTP endpoints, plus a disk cache wrapper so
// repeated runs replay recorded responses instead of spending endpoint calls.

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <shared_mutex>
#include <stdexcept>
#include <string>

#include "twohop/model/adapter.hpp"

namespace twohop::realworld {

struct HttpEndpointConfig {
    std::string base_url;                        // "https://api.example.com" or "http://127.0.0.1:8089"
    std::string path = "/v1/chat/completions";   // chat-completions style JSON endpoint
    std::string model;                           // model name sent in the request body
    std::string api_key_env = "TWOHOP_API_KEY";  // environment variable holding the bearer token;
                                                 // empty string = endpoint needs no credentials
    int timeout_seconds = 120;
    int max_retries = 2;        // extra attempts on 429, 5xx, or transport errors
    int min_interval_ms = 0;    // minimum spacing between request starts (rate limit)
    bool reasoning_only = false;  // model always emits CoT; rejected by no-CoT evals
};

// Speaks the chat-completions JSON protocol: POST {model, messages,
// temperature, max_tokens, seed}, read choices[0].message.content. Credentials
// come from the environment only; a missing variable raises at call time.
// Safe to call from several threads; the rate limiter serializes request
// starts. Chat is the only capability (no logits, no hidden states).
class HttpChatAdapter : public model::ModelAdapter {
public:
    explicit HttpChatAdapter(HttpEndpointConfig cfg);

    std::string name() const override;
    bool thread_safe() const override { return true; }
    bool can_suppress_cot() const override { return !cfg_.reasoning_only; }
    std::string chat(const std::vector<model::ChatMessage>& messages,
                     const model::GenerateOptions& opts) override;

    const HttpEndpointConfig& config() const { return cfg_; }

private:
    void rate_limit();

    HttpEndpointConfig cfg_;
    std::mutex rate_mutex_;
    std::chrono::steady_clock::time_point last_start_{};
};

// Raised by CachingAdapter when a cache miss would exceed the call budget.
class BudgetExhaustedError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Wraps the chat capability of another adapter with a directory cache.
// Each request is canonicalized to JSON, hashed, and stored as
// <dir>/<16 hex digits>.json holding {request, response}; a later identical
// request replays the stored response without touching the inner adapter.
// Reads take a shared lock and insertion an exclusive one, so concurrent
// readers are safe with a single writer; files land via write-to-temp plus
// atomic rename. Calls into a non-thread-safe inner adapter are serialized,
// which makes the wrapper thread-safe regardless of what it wraps.
// max_calls >= 0 caps inner calls (cache hits are free); exceeding it raises
// BudgetExhaustedError.
class CachingAdapter : public model::ModelAdapter {
public:
    CachingAdapter(model::ModelAdapter& inner, std::filesystem::path cache_dir,
                   long long max_calls = -1);

    std::string name() const override;  // the inner adapter's name, keeping cache keys stable
    bool thread_safe() const override { return true; }
    bool can_suppress_cot() const override;
    std::string chat(const std::vector<model::ChatMessage>& messages,
                     const model::GenerateOptions& opts) override;

    long long hits() const { return hits_.load(); }
    long long misses() const { return misses_.load(); }
    long long calls_made() const { return misses(); }
    const std::filesystem::path& cache_dir() const { return dir_; }

private:
    model::ModelAdapter& inner_;
    std::filesystem::path dir_;
    long long max_calls_;
    std::atomic<long long> hits_{0};
    std::atomic<long long> misses_{0};
    std::shared_mutex cache_mutex_;   // guards directory insertion order
    std::mutex inner_mutex_;          // serializes a non-thread-safe inner adapter
};

}  // namespace twohop::realworld

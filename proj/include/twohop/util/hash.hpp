#pragma once

#include <cstdint>
#include <string>
#include <string_view>

namespace twohop::util {

// FNV-1a 64-bit. Cheap, stable across platforms, good enough for content
// fingerprints in manifests and checkpoints (not for security).
class Fnv1a64 {
public:
    void update(const void* data, std::size_t n) {
        const auto* p = static_cast<const unsigned char*>(data);
        for (std::size_t i = 0; i < n; ++i) {
            state_ ^= p[i];
            state_ *= 0x100000001b3ull;
        }
    }
    void update(std::string_view s) { update(s.data(), s.size()); }
    std::uint64_t digest() const { return state_; }

private:
    std::uint64_t state_ = 0xcbf29ce484222325ull;
};

std::uint64_t fnv1a64(std::string_view s);

// "fnv1a64:" + 16 lowercase hex digits.
std::string content_hash(std::string_view s);
std::string format_hash(std::uint64_t h);

}  // namespace twohop::util

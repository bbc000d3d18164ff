#include "twohop/util/hash.hpp"

#include <cstdio>

namespace twohop::util {

std::uint64_t fnv1a64(std::string_view s) {
    Fnv1a64 h;
    h.update(s);
    return h.digest();
}

std::string format_hash(std::uint64_t h) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", (unsigned long long)h);
    return buf;
}

std::string content_hash(std::string_view s) { return format_hash(fnv1a64(s)); }

}  // namespace twohop::util

#include "twohop/util/paths.hpp"

#include <cstdlib>

#ifndef TWOHOP_DATA_DIR
#define TWOHOP_DATA_DIR "data"
#endif

namespace twohop::util {

std::filesystem::path data_dir() {
    if (const char* env = std::getenv("TWOHOP_DATA")) return env;
    return TWOHOP_DATA_DIR;
}

}  // namespace twohop::util

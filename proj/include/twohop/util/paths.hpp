#pragma once

#include <filesystem>

namespace twohop::util {

// Repo data directory holding template banks, name pools, schema files and
// fixtures. The TWOHOP_DATA environment variable overrides the compiled-in
// default (the source tree's data/).
std::filesystem::path data_dir();

}  // namespace twohop::util

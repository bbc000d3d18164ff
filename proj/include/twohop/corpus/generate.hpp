#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "twohop/corpus/types.hpp"

namespace twohop::corpus {

struct NamePools {
    std::vector<std::string> e1, e2, e3;

    // Reads e1.txt / e2.txt / e3.txt (one name per line) from a directory.
    static NamePools load(const std::filesystem::path& dir);
    static const NamePools& builtin();
};

// Draws globally unique entity names from the pools and assigns splits: the
// first n_demonstrated triplets are demonstrated, the rest undemonstrated.
// Pure function of its arguments.
Corpus generate_corpus(int n_demonstrated, int n_undemonstrated, const NamePools& pools,
                       std::uint64_t seed);

}  // namespace twohop::corpus

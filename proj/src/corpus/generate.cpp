#include "twohop/corpus/generate.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <stdexcept>
#include <unordered_set>

#include "twohop/util/paths.hpp"
#include "twohop/util/rng.hpp"

namespace twohop::corpus {

namespace {

std::vector<std::string> read_pool(const std::filesystem::path& file) {
    std::ifstream in(file);
    if (!in) throw std::runtime_error("cannot open name pool " + file.string());
    std::vector<std::string> names;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) names.push_back(line);
    }
    return names;
}

// Names must be single lexemes so entities stay single tokens by construction.
bool valid_name(const std::string& name) {
    if (name.empty()) return false;
    for (char c : name) {
        if (!(std::isalnum((unsigned char)c) || c == '_' || c == '\'' || c == '-')) return false;
    }
    return true;
}

std::vector<std::string> draw(const std::vector<std::string>& pool, const char* pool_name,
                              int count, std::mt19937_64& rng) {
    if ((int)pool.size() < count)
        throw std::runtime_error(std::string("name pool ") + pool_name + " exhausted: need " +
                                 std::to_string(count) + ", have " + std::to_string(pool.size()));
    std::vector<std::string> shuffled = pool;
    util::seeded_shuffle(shuffled, rng);
    shuffled.resize(count);
    return shuffled;
}

}  // namespace

NamePools NamePools::load(const std::filesystem::path& dir) {
    NamePools p;
    p.e1 = read_pool(dir / "e1.txt");
    p.e2 = read_pool(dir / "e2.txt");
    p.e3 = read_pool(dir / "e3.txt");
    return p;
}

const NamePools& NamePools::builtin() {
    static const NamePools pools = load(util::data_dir() / "pools");
    return pools;
}

Corpus generate_corpus(int n_demonstrated, int n_undemonstrated, const NamePools& pools,
                       std::uint64_t seed) {
    if (n_demonstrated < 0 || n_undemonstrated < 0)
        throw std::runtime_error("triplet counts must be nonnegative");
    const int n = n_demonstrated + n_undemonstrated;

    std::mt19937_64 rng(seed);
    const auto e1 = draw(pools.e1, "e1", n, rng);
    const auto e2 = draw(pools.e2, "e2", n, rng);
    const auto e3 = draw(pools.e3, "e3", n, rng);

    std::unordered_set<std::string> seen;
    for (const auto* role : {&e1, &e2, &e3}) {
        for (const auto& name : *role) {
            if (!valid_name(name))
                throw std::runtime_error("invalid entity name (must be a single word): \"" +
                                         name + "\"");
            if (!seen.insert(name).second)
                throw std::runtime_error("duplicate entity name across pools: \"" + name + "\"");
        }
    }

    Corpus corpus;
    corpus.triplets.reserve(n);
    for (int i = 0; i < n; ++i) {
        char id[16];
        std::snprintf(id, sizeof id, "t%04d", i);
        corpus.triplets.push_back({id, e1[i], e2[i], e3[i],
                                   i < n_demonstrated ? Split::demonstrated
                                                      : Split::undemonstrated});
    }
    return corpus;
}

}  // namespace twohop::corpus

#pragma once

#include <filesystem>
#include <vector>

#include "twohop/corpus/types.hpp"
#include "twohop/util/jsonl.hpp"

namespace twohop::corpus {

util::json to_json(const Triplet& t);
Triplet triplet_from_json(const util::json& j);

util::json to_json(const ChatExample& ex);
ChatExample chat_example_from_json(const util::json& j);

// A corpus directory holds triplets.jsonl; rendered sets live alongside it.
void save_corpus(const Corpus& corpus, const std::filesystem::path& dir);
Corpus load_corpus(const std::filesystem::path& dir);

void save_examples(const std::filesystem::path& file, const std::vector<ChatExample>& examples);
std::vector<ChatExample> load_examples(const std::filesystem::path& file);

}  // namespace twohop::corpus

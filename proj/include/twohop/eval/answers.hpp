#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace twohop::eval {

// Lowercased alphanumeric words; punctuation acts as a separator. This is the
// pinned normalization behind every containment check in grading.
std::vector<std::string> normalized_words(std::string_view s);

// Word-boundary containment: needle's normalized words appear contiguously in
// haystack's normalized words.
bool contains_word(std::string_view haystack, std::string_view needle);

enum class NoCotVerdict { correct, leak, wrong };

const char* to_string(NoCotVerdict v);

// Partition: leak iff the response names the bridge entity e2; else correct
// iff it names e3; else wrong.
NoCotVerdict check_no_cot_answer(std::string_view response, std::string_view e2,
                                 std::string_view e3);

// CoT responses are expected to name e2; only e3 containment decides.
bool check_cot_answer(std::string_view response, std::string_view e2, std::string_view e3);

}  // namespace twohop::eval

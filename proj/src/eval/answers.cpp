#include "twohop/eval/answers.hpp"

#include <cctype>

namespace twohop::eval {

std::vector<std::string> normalized_words(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c))) {
      cur.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

bool contains_word(std::string_view haystack, std::string_view needle) {
  auto h = normalized_words(haystack);
  auto n = normalized_words(needle);
  if (n.empty() || n.size() > h.size()) return false;
  for (size_t i = 0; i + n.size() <= h.size(); ++i) {
    size_t j = 0;
    while (j < n.size() && h[i + j] == n[j]) ++j;
    if (j == n.size()) return true;
  }
  return false;
}

const char* to_string(NoCotVerdict v) {
  switch (v) {
    case NoCotVerdict::correct: return "correct";
    case NoCotVerdict::leak: return "leak";
    case NoCotVerdict::wrong: return "wrong";
  }
  return "?";
}

NoCotVerdict check_no_cot_answer(std::string_view response, std::string_view e2,
                                 std::string_view e3) {
  if (contains_word(response, e2)) return NoCotVerdict::leak;
  if (contains_word(response, e3)) return NoCotVerdict::correct;
  return NoCotVerdict::wrong;
}

bool check_cot_answer(std::string_view response, std::string_view /*e2*/, std::string_view e3) {
  return contains_word(response, e3);
}

}  // namespace twohop::eval

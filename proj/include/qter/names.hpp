#pragma once

// Author-name handling shared by the index, the similarity measures and the
// blocking rule.

#include <string>
#include <string_view>
#include <vector>

namespace qter {

// Case-folds, collapses whitespace and strips the trailing period from each
// token. Dotted initial runs such as "W.W." are split into separate initials.
std::string normalize_name(std::string_view raw);

// Whitespace tokens of an already normalized name.
std::vector<std::string> name_tokens(std::string_view normalized);

struct NameParts {
  char first_initial = '\0';  // '\0' for single-token names
  std::string last;
};

NameParts split_name(std::string_view normalized);

// Blocking key: first initial of the first name followed by the first
// character of the last name.
std::string blocking_key(std::string_view normalized);

std::size_t levenshtein(std::string_view a, std::string_view b);

// Liberal candidate test on normalized names: first initials match, last names
// start with the same character and are at most two edits apart.
bool initials_rule(std::string_view a, std::string_view b);

}  // namespace qter

#include "qter/names.hpp"

#include <algorithm>
#include <cctype>

namespace qter {

namespace {

bool is_initial_run(std::string_view token) {
  // "w.w" or "j.r.r": single letters separated by periods
  if (token.size() < 3) return false;
  for (std::size_t i = 0; i < token.size(); ++i) {
    const bool want_alpha = (i % 2 == 0);
    const char c = token[i];
    if (want_alpha != (std::isalpha(static_cast<unsigned char>(c)) != 0)) return false;
    if (!want_alpha && c != '.') return false;
  }
  return token.size() % 2 == 1;
}

}  // namespace

std::string normalize_name(std::string_view raw) {
  std::string out;
  std::string token;
  auto flush = [&]() {
    while (!token.empty() && token.back() == '.') token.pop_back();
    if (token.empty()) return;
    if (is_initial_run(token)) {
      for (std::size_t i = 0; i < token.size(); i += 2) {
        if (!out.empty()) out.push_back(' ');
        out.push_back(token[i]);
      }
    } else {
      if (!out.empty()) out.push_back(' ');
      out += token;
    }
    token.clear();
  };
  for (char c : raw) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      flush();
    } else {
      token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
  }
  flush();
  return out;
}

std::vector<std::string> name_tokens(std::string_view normalized) {
  std::vector<std::string> tokens;
  std::size_t start = 0;
  while (start < normalized.size()) {
    auto end = normalized.find(' ', start);
    if (end == std::string_view::npos) end = normalized.size();
    if (end > start) tokens.emplace_back(normalized.substr(start, end - start));
    start = end + 1;
  }
  return tokens;
}

NameParts split_name(std::string_view normalized) {
  NameParts parts;
  const auto last_space = normalized.rfind(' ');
  if (last_space == std::string_view::npos) {
    parts.last = std::string(normalized);
    return parts;
  }
  parts.first_initial = normalized.empty() ? '\0' : normalized.front();
  parts.last = std::string(normalized.substr(last_space + 1));
  return parts;
}

std::string blocking_key(std::string_view normalized) {
  const NameParts parts = split_name(normalized);
  std::string key;
  key.push_back(parts.first_initial == '\0' ? '_' : parts.first_initial);
  key.push_back(parts.last.empty() ? '_' : parts.last.front());
  return key;
}

std::size_t levenshtein(std::string_view a, std::string_view b) {
  if (a.size() < b.size()) std::swap(a, b);
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      const std::size_t subst = diag + (a[i - 1] == b[j - 1] ? 0 : 1);
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, subst});
      diag = up;
    }
  }
  return row[b.size()];
}

bool initials_rule(std::string_view a, std::string_view b) {
  const NameParts pa = split_name(a);
  const NameParts pb = split_name(b);
  if (pa.first_initial != pb.first_initial) return false;
  if (pa.last.empty() || pb.last.empty()) return pa.last == pb.last;
  if (pa.last.front() != pb.last.front()) return false;
  return levenshtein(pa.last, pb.last) <= 2;
}

}  // namespace qter

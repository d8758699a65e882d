#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace taxo::text {

/// Decodes UTF-8; invalid bytes decode to U+FFFD one byte at a time.
std::u32string decode_utf8(std::string_view s);
std::string encode_utf8(std::u32string_view s);

/// Lowercase + diacritic folding (NFD with combining marks removed) for the
/// Latin blocks up to U+024F; combining marks anywhere are dropped.
/// normalize(normalize(s)) == normalize(s).
std::string normalize(std::string_view s);
char32_t fold_char(char32_t c);

bool is_combining_mark(char32_t c);
/// Letters, digits and hyphen: the characters a token is made of.
bool is_word_char(char32_t c);
bool is_upper(char32_t c);
bool is_letter(char32_t c);

std::string_view trim(std::string_view s);
std::vector<std::string> split_whitespace(std::string_view s);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Codepoint-level Levenshtein distance.
std::size_t levenshtein(std::u32string_view a, std::u32string_view b);
/// 1 - distance / max(length); 1.0 for two empty strings.
double levenshtein_similarity(std::string_view a, std::string_view b);

/// Normalized labels split into whitespace tokens and re-joined with single
/// spaces, so "Calça  Jeans" and "calca jeans" compare equal.
std::string normalize_label(std::string_view label);

/// Normalized word tokens (letter/digit/hyphen runs, edge hyphens trimmed),
/// ignoring sentence structure.
std::vector<std::string> word_tokens(std::string_view s);

/// Lowercase ASCII slug for filenames: non-alphanumerics collapse to '_'.
std::string slug(std::string_view label);

}  // namespace taxo::text

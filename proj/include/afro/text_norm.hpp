#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace afro::text {

// Ordered so that earlier entries win when two keys share a prefix.
using AbbreviationMap = std::vector<std::pair<std::string, std::string>>;

struct NumberGrammar {
  std::string decimal_word = "point";
  bool ordinals = true;  // "21st" -> "twenty first"
};

struct NormalizationRules {
  AbbreviationMap abbreviations;
  std::map<std::string, std::string> punctuation;  // symbol -> spoken form
  NumberGrammar numbers;

  // Shipped table: Alh, Maj, Dr, Mr, Mrs, Prof, St and ( ) : ;
  static NormalizationRules defaults();
  // Throws ValidationError if keys repeat, an expansion has a digit, or a
  // required symbol is missing from the punctuation map.
  void validate() const;
};

NormalizationRules load_rules(const std::filesystem::path& path);
NormalizationRules parse_rules(std::string_view json_text);

// Cardinal words, "forty two" style (no hyphen, no "and").
std::string cardinal(std::uint64_t n);
std::string ordinal(std::uint64_t n);

std::string expand_abbreviations(std::string_view text, const NormalizationRules& rules);
std::string verbalize_numbers(std::string_view text, const NormalizationRules& rules);
std::string verbalize_punctuation(std::string_view text, const NormalizationRules& rules);

// abbreviations -> numbers -> punctuation
std::string normalize_text(std::string_view text, const NormalizationRules& rules);

}  // namespace afro::text

#include <algorithm>
#include <array>
#include <cctype>

#include "afro/error.hpp"
#include "afro/text_norm.hpp"
#include "afro/util.hpp"
#include "json.hpp"

namespace afro::text {
namespace {

constexpr std::array<std::string_view, 20> kUnits = {
    "zero",    "one",     "two",       "three",    "four",     "five",    "six",
    "seven",   "eight",   "nine",      "ten",      "eleven",   "twelve",  "thirteen",
    "fourteen", "fifteen", "sixteen",  "seventeen", "eighteen", "nineteen"};
constexpr std::array<std::string_view, 10> kTens = {
    "", "", "twenty", "thirty", "forty", "fifty", "sixty", "seventy", "eighty", "ninety"};
constexpr std::array<std::string_view, 6> kScales = {
    "", "thousand", "million", "billion", "trillion", "quadrillion"};

bool is_digit(char c) { return c >= '0' && c <= '9'; }

// Bytes >= 0x80 count as word characters so UTF-8 letters bound tokens.
bool is_word_char(char c) {
  const auto u = static_cast<unsigned char>(c);
  return std::isalnum(u) || u >= 0x80 || c == '_';
}

char lower(char c) { return static_cast<char>(std::tolower(static_cast<unsigned char>(c))); }

void append_word(std::string& out, std::string_view w) {
  if (!out.empty()) out += ' ';
  out += w;
}

void below_thousand(std::string& out, unsigned n) {
  if (n >= 100) {
    append_word(out, kUnits[n / 100]);
    append_word(out, "hundred");
    n %= 100;
    if (n == 0) return;
  }
  if (n >= 20) {
    append_word(out, kTens[n / 10]);
    if (n % 10) append_word(out, kUnits[n % 10]);
  } else {
    append_word(out, kUnits[n]);
  }
}

std::string digitwise(std::string_view digits) {
  std::string out;
  for (char d : digits) append_word(out, kUnits[d - '0']);
  return out;
}

// Plain digit run (commas already removed) to words.
std::string read_integer(std::string_view digits) {
  if (digits.size() > 1 && digits.front() == '0') return digitwise(digits);
  if (digits.size() > 18) return digitwise(digits);
  std::uint64_t n = 0;
  for (char d : digits) n = n * 10 + static_cast<unsigned>(d - '0');
  return cardinal(n);
}

bool ordinal_suffix_at(std::string_view s, std::size_t pos, std::size_t& len) {
  static constexpr std::array<std::string_view, 4> suffixes = {"st", "nd", "rd", "th"};
  for (auto suf : suffixes) {
    if (s.substr(pos, 2) == suf && (pos + 2 >= s.size() || !is_word_char(s[pos + 2]))) {
      len = 2;
      return true;
    }
  }
  return false;
}

}  // namespace

std::string cardinal(std::uint64_t n) {
  if (n == 0) return std::string(kUnits[0]);
  std::array<unsigned, kScales.size() + 1> groups{};
  std::size_t count = 0;
  while (n > 0) {
    groups[count++] = static_cast<unsigned>(n % 1000);
    n /= 1000;
  }
  std::string out;
  for (std::size_t g = count; g-- > 0;) {
    if (groups[g] == 0) continue;
    below_thousand(out, groups[g]);
    if (g > 0) append_word(out, kScales[g]);
  }
  return out;
}

std::string ordinal(std::uint64_t n) {
  std::string words = cardinal(n);
  const std::size_t cut = words.rfind(' ') == std::string::npos ? 0 : words.rfind(' ') + 1;
  const std::string last = words.substr(cut);
  static const std::array<std::pair<std::string_view, std::string_view>, 6> irregular = {{
      {"one", "first"}, {"two", "second"}, {"three", "third"},
      {"five", "fifth"}, {"eight", "eighth"}, {"nine", "ninth"}}};
  std::string repl;
  for (auto [c, o] : irregular)
    if (last == c) repl = o;
  if (repl.empty()) {
    if (last == "twelve") repl = "twelfth";
    else if (last.back() == 'y') repl = last.substr(0, last.size() - 1) + "ieth";
    else repl = last + "th";
  }
  return words.substr(0, cut) + repl;
}

NormalizationRules NormalizationRules::defaults() {
  NormalizationRules r;
  r.abbreviations = {{"Alh", "Alhaji"},   {"Maj", "Major"},     {"Dr", "Doctor"},
                     {"Mrs", "Missus"},   {"Mr", "Mister"},     {"Prof", "Professor"},
                     {"St", "Saint"}};
  r.punctuation = {{"(", "open bracket"},
                   {")", "closed bracket"},
                   {":", "colon"},
                   {";", "semicolon"}};
  return r;
}

void NormalizationRules::validate() const {
  for (std::size_t i = 0; i < abbreviations.size(); ++i) {
    const auto& [key, expansion] = abbreviations[i];
    if (key.empty()) throw ValidationError("empty abbreviation key");
    for (std::size_t j = 0; j < i; ++j)
      if (abbreviations[j].first == key)
        throw ValidationError("duplicate abbreviation key \"" + key + "\"");
    if (std::any_of(expansion.begin(), expansion.end(), is_digit))
      throw ValidationError("abbreviation expansion contains a digit: \"" + expansion + "\"");
  }
  for (const char* required : {"(", ")", ":", ";"})
    if (!punctuation.count(required))
      throw ValidationError(std::string("punctuation map lacks \"") + required + "\"");
  for (const auto& [symbol, spoken] : punctuation) {
    if (symbol.empty() || spoken.empty())
      throw ValidationError("empty punctuation mapping");
    if (std::any_of(symbol.begin(), symbol.end(), [](char c) { return is_word_char(c); }))
      throw ValidationError("punctuation symbol must not contain word characters: \"" +
                            symbol + "\"");
  }
}

NormalizationRules parse_rules(std::string_view json_text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(json_text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("rules: malformed JSON: ") + e.what());
  }
  NormalizationRules r = NormalizationRules::defaults();
  if (j.contains("abbreviations")) {
    r.abbreviations.clear();
    const auto& a = j["abbreviations"];
    if (a.is_object()) {
      for (auto it = a.begin(); it != a.end(); ++it)
        r.abbreviations.emplace_back(it.key(), it.value().get<std::string>());
    } else if (a.is_array()) {
      for (const auto& pair : a)
        r.abbreviations.emplace_back(pair.at(0).get<std::string>(), pair.at(1).get<std::string>());
    } else {
      throw Error("rules: \"abbreviations\" must be an object or array of pairs");
    }
  }
  if (j.contains("punctuation")) {
    r.punctuation.clear();
    for (auto it = j["punctuation"].begin(); it != j["punctuation"].end(); ++it)
      r.punctuation[it.key()] = it.value().get<std::string>();
  }
  if (j.contains("numbers")) {
    const auto& n = j["numbers"];
    r.numbers.decimal_word = n.value("decimal_word", r.numbers.decimal_word);
    r.numbers.ordinals = n.value("ordinals", r.numbers.ordinals);
  }
  r.validate();
  return r;
}

NormalizationRules load_rules(const std::filesystem::path& path) {
  return parse_rules(read_file(path));
}

std::string expand_abbreviations(std::string_view text, const NormalizationRules& rules) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool at_boundary = i == 0 || !is_word_char(text[i - 1]);
    bool matched = false;
    if (at_boundary && is_word_char(text[i])) {
      for (const auto& [key, expansion] : rules.abbreviations) {
        if (i + key.size() > text.size() || text[i] != key[0]) continue;
        bool eq = true;
        for (std::size_t k = 1; k < key.size() && eq; ++k)
          eq = lower(text[i + k]) == lower(key[k]);
        if (!eq) continue;
        std::size_t end = i + key.size();
        if (end < text.size() && is_word_char(text[end])) continue;
        if (end < text.size() && text[end] == '.') ++end;
        out += expansion;
        i = end;
        matched = true;
        break;
      }
    }
    if (!matched) {
      // Copy the rest of the current word (or one separator) verbatim.
      if (is_word_char(text[i])) {
        while (i < text.size() && is_word_char(text[i])) out += text[i++];
      } else {
        out += text[i++];
      }
    }
  }
  return out;
}

std::string verbalize_numbers(std::string_view text, const NormalizationRules& rules) {
  std::string out;
  out.reserve(text.size() * 2);
  std::size_t i = 0;
  while (i < text.size()) {
    if (!is_digit(text[i])) {
      out += text[i++];
      continue;
    }
    std::size_t j = i;
    while (j < text.size() && is_digit(text[j])) ++j;
    std::string integer(text.substr(i, j - i));
    // Thousands separators: 1-3 leading digits then groups of ",ddd".
    if (integer.size() <= 3 && integer.front() != '0') {
      std::size_t k = j;
      std::string grouped = integer;
      while (k + 3 < text.size() + 0 && text[k] == ',' && is_digit(text[k + 1]) &&
             is_digit(text[k + 2]) && is_digit(text[k + 3]) &&
             (k + 4 >= text.size() || !is_digit(text[k + 4]))) {
        grouped.append(text.substr(k + 1, 3));
        k += 4;
      }
      if (k != j) {
        integer = grouped;
        j = k;
      }
    }
    std::string words;
    std::size_t suffix_len = 0;
    if (j + 1 < text.size() && text[j] == '.' && is_digit(text[j + 1])) {
      std::size_t k = j + 1;
      while (k < text.size() && is_digit(text[k])) ++k;
      words = read_integer(integer) + " " + rules.numbers.decimal_word + " " +
              digitwise(text.substr(j + 1, k - j - 1));
      j = k;
    } else if (rules.numbers.ordinals && integer.size() <= 18 &&
               (integer.size() == 1 || integer.front() != '0') &&
               ordinal_suffix_at(text, j, suffix_len)) {
      std::uint64_t n = 0;
      for (char d : integer) n = n * 10 + static_cast<unsigned>(d - '0');
      words = ordinal(n);
      j += suffix_len;
    } else {
      words = read_integer(integer);
    }
    out += words;
    i = j;
  }
  return out;
}

std::string verbalize_punctuation(std::string_view text, const NormalizationRules& rules) {
  auto is_space = [](char c) { return c == ' ' || c == '\t'; };
  auto attaches_left = [](char c) {
    return c == '.' || c == ',' || c == '!' || c == '?' || c == '\n' || c == '\r';
  };
  std::string out;
  out.reserve(text.size() * 2);
  bool pending_space = false;
  std::size_t i = 0;
  while (i < text.size()) {
    const std::string* spoken = nullptr;
    std::size_t symbol_len = 0;
    for (const auto& [symbol, form] : rules.punctuation) {
      if (symbol.size() > symbol_len && text.substr(i, symbol.size()) == symbol) {
        spoken = &form;
        symbol_len = symbol.size();
      }
    }
    if (spoken) {
      while (!out.empty() && is_space(out.back())) out.pop_back();
      if (!out.empty() && out.back() != '\n') out += ' ';
      out += *spoken;
      pending_space = true;
      i += symbol_len;
      while (i < text.size() && is_space(text[i])) ++i;
      continue;
    }
    if (pending_space) {
      if (!attaches_left(text[i])) out += ' ';
      pending_space = false;
    }
    out += text[i++];
  }
  return out;
}

std::string normalize_text(std::string_view text, const NormalizationRules& rules) {
  return verbalize_punctuation(verbalize_numbers(expand_abbreviations(text, rules), rules),
                               rules);
}

}  // namespace afro::text

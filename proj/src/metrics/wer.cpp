#include <cctype>

#include "afro/error.hpp"
#include "afro/metrics.hpp"
#include "afro/util.hpp"

namespace afro::metrics {

std::vector<std::string> wer_tokens(std::string_view text) {
  std::string cleaned;
  cleaned.reserve(text.size());
  for (char c : text) {
    const auto u = static_cast<unsigned char>(c);
    if (u < 0x80 && std::ispunct(u)) continue;
    cleaned.push_back(u < 0x80 ? static_cast<char>(std::tolower(u)) : c);
  }
  return split_whitespace(cleaned);
}

WerBreakdown wer(const std::vector<std::string>& ref, const std::vector<std::string>& hyp) {
  if (ref.empty()) throw Error("empty reference after normalization");
  const std::size_t n = ref.size();
  const std::size_t m = hyp.size();
  // cost[i][j]: edits to turn ref[0..i) into hyp[0..j)
  std::vector<std::size_t> cost((n + 1) * (m + 1));
  auto at = [&](std::size_t i, std::size_t j) -> std::size_t& { return cost[i * (m + 1) + j]; };
  for (std::size_t i = 0; i <= n; ++i) at(i, 0) = i;
  for (std::size_t j = 0; j <= m; ++j) at(0, j) = j;
  for (std::size_t i = 1; i <= n; ++i)
    for (std::size_t j = 1; j <= m; ++j) {
      const std::size_t diag = at(i - 1, j - 1) + (ref[i - 1] == hyp[j - 1] ? 0 : 1);
      at(i, j) = std::min({diag, at(i - 1, j) + 1, at(i, j - 1) + 1});
    }

  WerBreakdown b;
  b.ref_words = n;
  std::size_t i = n, j = m;
  while (i > 0 || j > 0) {
    if (i > 0 && j > 0) {
      const bool same = ref[i - 1] == hyp[j - 1];
      if (at(i, j) == at(i - 1, j - 1) + (same ? 0 : 1)) {
        if (!same) ++b.substitutions;
        --i;
        --j;
        continue;
      }
    }
    if (i > 0 && at(i, j) == at(i - 1, j) + 1) {
      ++b.deletions;
      --i;
    } else {
      ++b.insertions;
      --j;
    }
  }
  b.wer = static_cast<double>(b.substitutions + b.deletions + b.insertions) / static_cast<double>(n);
  return b;
}

WerBreakdown wer(std::string_view ref, std::string_view hyp, const WordNormalizer& norm) {
  return wer(norm(ref), norm(hyp));
}

WerBreakdown corpus_wer(std::span<const WerBreakdown> utterances) {
  WerBreakdown total;
  for (const auto& u : utterances) {
    total.substitutions += u.substitutions;
    total.deletions += u.deletions;
    total.insertions += u.insertions;
    total.ref_words += u.ref_words;
  }
  if (total.ref_words == 0) throw Error("no reference words");
  total.wer = static_cast<double>(total.substitutions + total.deletions + total.insertions) /
              static_cast<double>(total.ref_words);
  return total;
}

}  // namespace afro::metrics

#include <algorithm>
#include <cstdio>
#include <tuple>

#include "afro/metrics.hpp"

namespace afro::metrics {

std::string ordinal_label(std::size_t rank) {
  const std::size_t mod100 = rank % 100;
  const char* suffix = "th";
  if (mod100 < 11 || mod100 > 13) {
    switch (rank % 10) {
      case 1: suffix = "st"; break;
      case 2: suffix = "nd"; break;
      case 3: suffix = "rd"; break;
      default: break;
    }
  }
  return std::to_string(rank) + suffix;
}

std::vector<LeaderboardEntry> preference_ranking(const std::map<std::string, std::size_t>& votes) {
  std::vector<LeaderboardEntry> board;
  for (const auto& [model, wins] : votes) board.push_back({model, wins, 0});
  std::stable_sort(board.begin(), board.end(),
                   [](const auto& x, const auto& y) { return x.wins > y.wins; });
  for (std::size_t i = 0; i < board.size(); ++i)
    board[i].rank = (i > 0 && board[i].wins == board[i - 1].wins) ? board[i - 1].rank : i + 1;
  return board;
}

MetricReport build_report(std::span<const RatingRow> ratings, const std::vector<std::string>& group_by,
                          const std::map<std::string, std::size_t>& preference_votes) {
  std::map<std::pair<std::vector<std::string>, std::string>, std::vector<int>> cells;
  for (const auto& r : ratings) {
    std::vector<std::string> key;
    key.reserve(group_by.size());
    for (const auto& g : group_by) {
      auto it = r.attributes.find(g);
      key.push_back(it == r.attributes.end() ? std::string() : it->second);
    }
    cells[{std::move(key), r.dimension}].push_back(r.value);
  }
  MetricReport rep;
  rep.group_by = group_by;
  for (const auto& [key, values] : cells)
    rep.rows.push_back({key.first, key.second, aggregate_mos(values)});
  rep.leaderboard = preference_ranking(preference_votes);
  return rep;
}

nlohmann::ordered_json MetricReport::to_json() const {
  nlohmann::ordered_json rows_json = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json g = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < group_by.size(); ++i) g[group_by[i]] = r.group[i];
    rows_json.push_back({{"group", g},
                         {"dimension", r.dimension},
                         {"n", r.summary.n},
                         {"mean", r.summary.mean},
                         {"ci95", r.summary.ci95_half_width}});
  }
  nlohmann::ordered_json board = nlohmann::ordered_json::array();
  for (const auto& e : leaderboard)
    board.push_back({{"model", e.model}, {"wins", e.wins}, {"rank", e.rank},
                     {"label", "(" + std::to_string(e.wins) + ") " + ordinal_label(e.rank)}});
  return {{"group_by", group_by}, {"rows", rows_json}, {"leaderboard", board}};
}

std::string MetricReport::to_table() const {
  // Column widths from content.
  std::vector<std::size_t> width(group_by.size());
  for (std::size_t i = 0; i < group_by.size(); ++i) width[i] = group_by[i].size();
  std::size_t dim_width = std::string("dimension").size();
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < group_by.size(); ++i) width[i] = std::max(width[i], r.group[i].size());
    dim_width = std::max(dim_width, r.dimension.size());
  }
  std::string out;
  auto pad = [](const std::string& s, std::size_t w) { return s + std::string(w - s.size() + 2, ' '); };
  char buf[96];
  if (!rows.empty()) {
    for (std::size_t i = 0; i < group_by.size(); ++i) out += pad(group_by[i], width[i]);
    out += pad("dimension", dim_width);
    std::snprintf(buf, sizeof buf, "%6s  %s\n", "n", "mean ± ci95");
    out += buf;
    for (const auto& r : rows) {
      for (std::size_t i = 0; i < group_by.size(); ++i) out += pad(r.group[i], width[i]);
      out += pad(r.dimension, dim_width);
      std::snprintf(buf, sizeof buf, "%6zu  %.2f ± %.2f\n", r.summary.n, r.summary.mean,
                    r.summary.ci95_half_width);
      out += buf;
    }
  }
  if (!leaderboard.empty()) {
    if (!out.empty()) out += '\n';
    std::size_t mw = std::string("model").size();
    for (const auto& e : leaderboard) mw = std::max(mw, e.model.size());
    out += pad("model", mw) + "ranking\n";
    for (const auto& e : leaderboard)
      out += pad(e.model, mw) + "(" + std::to_string(e.wins) + ") " + ordinal_label(e.rank) + "\n";
  }
  return out;
}

}  // namespace afro::metrics

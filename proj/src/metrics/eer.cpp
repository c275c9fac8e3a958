#include <algorithm>
#include <cmath>

#include "afro/error.hpp"
#include "afro/metrics.hpp"

namespace afro::metrics {

double eer(const ScoreTrials& t) {
  if (t.genuine.empty() || t.impostor.empty())
    throw Error("EER needs at least one genuine and one impostor score");
  struct Scored {
    double score;
    bool genuine;
  };
  std::vector<Scored> all;
  all.reserve(t.genuine.size() + t.impostor.size());
  for (double s : t.genuine) {
    if (!std::isfinite(s)) throw Error("non-finite genuine score");
    all.push_back({s, true});
  }
  for (double s : t.impostor) {
    if (!std::isfinite(s)) throw Error("non-finite impostor score");
    all.push_back({s, false});
  }
  std::sort(all.begin(), all.end(), [](const Scored& a, const Scored& b) { return a.score < b.score; });

  const auto ng = static_cast<long long>(t.genuine.size());
  const auto ni = static_cast<long long>(t.impostor.size());
  // At a threshold: rejected genuine count r, accepted impostor count a.
  // FRR = r/ng, FAR = a/ni; sign of FRR - FAR is sign(r*ni - a*ng).
  long long rejected = 0;
  long long accepted = ni;
  long long prev_accepted = ni;
  long long prev_diff = -ng * ni;  // threshold below every score
  std::size_t k = 0;
  while (true) {
    // Advance past every score equal to the next distinct value.
    if (k < all.size()) {
      const double v = all[k].score;
      while (k < all.size() && all[k].score == v) {
        if (all[k].genuine) ++rejected;
        else --accepted;
        ++k;
      }
    }
    const long long diff = rejected * ni - accepted * ng;
    if (diff == 0) return static_cast<double>(accepted) / static_cast<double>(ni);
    if (diff > 0) {
      // Crossing between the previous point and this one.
      const double s = static_cast<double>(-prev_diff) / static_cast<double>(diff - prev_diff);
      const double far0 = static_cast<double>(prev_accepted) / static_cast<double>(ni);
      const double far1 = static_cast<double>(accepted) / static_cast<double>(ni);
      return far0 + s * (far1 - far0);
    }
    prev_diff = diff;
    prev_accepted = accepted;
    if (k >= all.size()) break;
  }
  return 1.0;  // not reached: above every score FRR = 1 > FAR = 0
}

}  // namespace afro::metrics

#include "afro/dsp.hpp"
#include "afro/util.hpp"

namespace afro::dsp {

const char* to_string(Eligibility e) {
  switch (e) {
    case Eligibility::eligible: return "eligible";
    case Eligibility::too_long_audio: return "too_long_audio";
    case Eligibility::too_long_text: return "too_long_text";
  }
  return "eligible";
}

Eligibility check_eligibility(const UtteranceRecord& r) {
  if (r.duration_s > kMaxDurationS) return Eligibility::too_long_audio;
  if (utf8_length(r.text) > kMaxTextChars) return Eligibility::too_long_text;
  return Eligibility::eligible;
}

}  // namespace afro::dsp

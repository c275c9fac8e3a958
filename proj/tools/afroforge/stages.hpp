#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include "context.hpp"

namespace afro::cli {

int stage_ingest(const Settings& s);
int stage_normalize_text(const Settings& s, std::istream& in, std::ostream& out);
int stage_preprocess(const Settings& s);
int stage_enhance(const Settings& s);
int stage_split(const Settings& s);
int stage_balance(const Settings& s);
int stage_embed(const Settings& s);
int stage_interpolate(const Settings& s);
int stage_eval(const std::string& metric, const Settings& s, std::ostream& out);
int stage_serve(const Settings& s, std::ostream& out);

std::vector<std::string> split_csv(const std::string& s);

}  // namespace afro::cli

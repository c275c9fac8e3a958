#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace afro::enhance::detail {

// Runs argv[0] (PATH lookup) with `input` on stdin and returns stdout.
// Kills the child and throws AdapterTimeout past timeout_s.
std::vector<std::uint8_t> run_subprocess(const std::vector<std::string>& argv,
                                         std::span<const std::uint8_t> input, double timeout_s);

std::vector<std::uint8_t> http_post(const std::string& url, std::span<const std::uint8_t> body,
                                    const std::string& content_type, double timeout_s);

}  // namespace afro::enhance::detail

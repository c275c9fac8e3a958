// Subprocess wrapper around the builtin mock adapters.
//
//   mock_adapter identity|fir|flatness|embedder [--mode N] [--sleep-ms N]
//                [--sleep-mode N] [--fail-mode N] [--garbage]
//
// WAV on stdin, WAV or one-line JSON on stdout. --sleep-ms and --fail-mode
// exist to exercise timeout and partial-failure handling.

#include <chrono>
#include <cstdio>
#include <iostream>
#include <iterator>
#include <thread>

#include "CLI11.hpp"
#include "afro/mock_adapters.hpp"

int main(int argc, char** argv) {
  CLI::App app{"mock enhancement adapter"};
  std::string role;
  int mode = -1, sleep_ms = 0, sleep_mode = -2, fail_mode = -2;
  bool garbage = false;
  app.add_option("role", role)->required()->check(CLI::IsMember({"identity", "fir", "flatness", "embedder"}));
  app.add_option("--mode", mode);
  app.add_option("--sleep-ms", sleep_ms);
  app.add_option("--sleep-mode", sleep_mode, "only sleep when --mode equals this");
  app.add_option("--fail-mode", fail_mode, "exit 3 when --mode equals this");
  app.add_flag("--garbage", garbage, "write bytes that are neither WAV nor JSON");
  CLI11_PARSE(app, argc, argv);

  std::vector<std::uint8_t> in((std::istreambuf_iterator<char>(std::cin)), std::istreambuf_iterator<char>());
  if (sleep_ms > 0 && (sleep_mode == -2 || sleep_mode == mode)) std::this_thread::sleep_for(std::chrono::milliseconds(sleep_ms));
  if (mode == fail_mode) {
    std::cerr << "mock failure for mode " << mode << "\n";
    return 3;
  }
  if (garbage) {
    std::cout << "not a wav";
    return 0;
  }
  try {
    const auto out = afro::enhance::mock::run_builtin(role, in, mode);
    std::fwrite(out.data(), 1, out.size(), stdout);
  } catch (const std::exception& e) {
    std::cerr << e.what() << "\n";
    return 2;
  }
  return 0;
}

// Runs AC1-AC13 and prints one line per criterion.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <string>
#include <thread>

#include "stickymv/acceptance.hpp"

int main(int argc, char** argv) {
  using namespace stickymv;
  std::size_t threads = std::max(1u, std::thread::hardware_concurrency());
  std::string only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--threads" && i + 1 < argc)
      threads = std::size_t(std::atoi(argv[++i]));
    else
      only = a;
  }
  AcceptanceSuite suite;
  Executor ex(threads);
  int failed = 0;
  for (const auto& c : suite.criteria()) {
    if (!only.empty() && c.id != only) continue;
    const auto t0 = std::chrono::steady_clock::now();
    CriterionResult r;
    try {
      r = c.run(ex, false);
    } catch (const std::exception& e) {
      r.pass = false;
      r.summary = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%-5s %s  %s: %s [%.1fs]\n", c.id.c_str(), r.pass ? "PASS" : "FAIL", c.title.c_str(),
                r.summary.c_str(), secs);
    std::fflush(stdout);
    if (!r.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}

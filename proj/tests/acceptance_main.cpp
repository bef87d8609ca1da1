// Acceptance gate: runs every numbered criterion and prints one PASS/FAIL
// line each. Exit status is nonzero when any criterion fails. Optional
// arguments: a list of criterion ids, and --threads N (default 4).

#include <cstdio>
#include <cstdlib>
#include <exception>
#include <string>
#include <vector>

#include <ulmc/harness.hpp>

int main(int argc, char** argv) {
  int n_threads = 4;
  std::vector<int> ids;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--threads" && i + 1 < argc) {
      n_threads = std::atoi(argv[++i]);
    } else {
      const int id = std::atoi(arg.c_str());
      if (id < 1 || id > ulmc::criterion_count) {
        std::fprintf(stderr, "unknown criterion '%s' (expected 1..%d)\n",
                     arg.c_str(), ulmc::criterion_count);
        return 1;
      }
      ids.push_back(id);
    }
  }
  if (ids.empty()) {
    for (int i = 1; i <= ulmc::criterion_count; ++i) ids.push_back(i);
  }

  int failures = 0;
  for (const int id : ids) {
    try {
      const auto r = ulmc::run_criterion(id, n_threads);
      std::printf("criterion %2d %-22s %s  (%.1f s)  %s\n", r.id, r.name.c_str(),
                  r.pass ? "PASS" : "FAIL", r.seconds, r.detail.c_str());
      if (!r.pass) ++failures;
    } catch (const std::exception& e) {
      std::printf("criterion %2d %-22s FAIL  (error: %s)\n", id, "-", e.what());
      ++failures;
    }
    std::fflush(stdout);
  }
  std::printf("acceptance: %zu/%zu criteria passed\n", ids.size() - std::size_t(failures),
              ids.size());
  return failures == 0 ? 0 : 1;
}

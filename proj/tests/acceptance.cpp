// Acceptance runner: prints one PASS/FAIL line per criterion and exits 1 if any listed criterion fails.
#include <chrono>
#include <cstdio>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "qcert/verify.hpp"

using namespace qcert;

namespace {

const std::map<int, std::vector<std::string>> kCriteria = {
    {1, {"moments"}},
    {2, {"weingarten"}},
    {3, {"instances"}},
    {4, {"corner"}},
    {5, {"ingster"}},
    {6, {"basic-power", "basic-sweep"}},
    {7, {"certify-two-bucket"}},
    {8, {"bounds"}},
    {9, {"pushforward"}},
    {10, {"tracepsd", "schur", "optimize", "geoseries", "sort_mix", "phi-second-moment"}},
};

}  // namespace

int main(int argc, char** argv) {
  std::vector<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.push_back(std::stoi(argv[i]));
  if (wanted.empty())
    for (const auto& [k, v] : kCriteria) wanted.push_back(k);

  VerifyOptions opts;
  bool all = true;
  for (int k : wanted) {
    const auto it = kCriteria.find(k);
    if (it == kCriteria.end()) {
      std::cerr << "unknown criterion " << k << "\n";
      return 2;
    }
    bool pass = true;
    std::string detail;
    const auto t0 = std::chrono::steady_clock::now();
    for (const auto& name : it->second) {
      const CheckResult r = find_check(name).run(opts);
      pass = pass && r.pass;
      if (!detail.empty()) detail += " | ";
      detail += name + (r.pass ? " ok: " : " FAIL: ") + r.summary;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("criterion %d: %s (%.1f s) %s\n", k, pass ? "PASS" : "FAIL", secs, detail.c_str());
    std::fflush(stdout);
    all = all && pass;
  }
  return all ? 0 : 1;
}

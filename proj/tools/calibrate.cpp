// Single-round power grid for basic_certify against HS-far states around I/d.
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "qcert/experiments.hpp"

int main(int argc, char** argv) {
  CLI::App app{"basic certification calibration"};
  std::size_t d = 16, trials = 200, threads = 1;
  double eps = 0.3, target = 2.0 / 3.0;
  std::uint64_t seed = 7;
  std::vector<double> c_l2{0.5, 0.7, 1.0};
  std::vector<double> grid{4, 8, 16, 32, 64};
  std::string out;
  app.add_option("--d", d);
  app.add_option("--eps", eps);
  app.add_option("--trials", trials);
  app.add_option("--seed", seed);
  app.add_option("--threads", threads);
  app.add_option("--target", target);
  app.add_option("--c-l2", c_l2);
  app.add_option("--grid", grid);
  app.add_option("--out", out);
  CLI11_PARSE(app, argc, argv);
  nlohmann::json runs = nlohmann::json::array();
  for (double c : c_l2) {
    const auto r = qcert::calibrate_basic(d, eps, c, grid, trials, seed, target, threads);
    runs.push_back(qcert::to_json(r));
    std::cerr << runs.back().dump() << "\n";
  }
  const nlohmann::json doc{{"seed", seed}, {"target", target}, {"runs", runs}};
  if (out.empty()) std::cout << doc.dump(2) << "\n";
  else std::ofstream(out) << doc.dump(2) << "\n";
  return 0;
}

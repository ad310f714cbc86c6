// Searches seeds for a kernel pair whose Euclidean extrapolation leaves the
// PSD cone and writes the fixture consumed by the tests.
//
//   find_extrapolation_seed OUT.json [first_seed]

#include <cstdlib>
#include <fstream>
#include <iostream>

#include "json.hpp"
#include "repsim/experiments.hpp"

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: find_extrapolation_seed OUT.json [first_seed]\n";
    return 2;
  }
  const std::uint64_t first = argc > 2 ? std::strtoull(argv[2], nullptr, 10) : 0;
  constexpr repsim::Index kStimuli = 8;
  constexpr repsim::Index kNeurons = 2;
  constexpr double kAlpha = 3.0;
  constexpr double kThreshold = 1e-6;

  const auto s = repsim::find_extrapolation_seed(first, kStimuli, kNeurons, kAlpha, kThreshold, 10000);
  if (!s.found) {
    std::cerr << "no seed found in " << s.tried << " tries\n";
    return 6;
  }
  nlohmann::ordered_json j{{"seed", s.seed},
                           {"stimuli", kStimuli},
                           {"neurons", kNeurons},
                           {"alpha", kAlpha},
                           {"threshold", kThreshold},
                           {"min_eigenvalue", s.min_eigenvalue},
                           {"seeds_tried", s.tried}};
  std::ofstream out(argv[1]);
  out << j.dump(2) << '\n';
  if (!out) {
    std::cerr << "cannot write " << argv[1] << "\n";
    return 2;
  }
  std::cout << "seed " << s.seed << " min eigenvalue " << s.min_eigenvalue << "\n";
  return 0;
}

// SPDX-License-Identifier: Apache-2.0
// Copyright 2026 The tracebayes Authors

// Writes a synthetic project: make_synthetic DIR SOURCES TARGETS LINKS [SEED [SIGNAL]]

#include <cstdio>
#include <cstdlib>
#include <string>

#include "synthetic.hpp"

int main(int argc, char** argv) {
  if (argc < 5) {
    std::fprintf(stderr, "usage: %s DIR SOURCES TARGETS LINKS [SEED [SIGNAL]]\n", argv[0]);
    return 2;
  }
  tracebayes::testing::SyntheticSpec spec;
  spec.sources = std::stoul(argv[2]);
  spec.targets = std::stoul(argv[3]);
  spec.links = std::stoul(argv[4]);
  if (argc > 5) spec.seed = std::stoull(argv[5]);
  if (argc > 6) spec.signal = std::stod(argv[6]);
  std::printf("%s\n", tracebayes::testing::write_synthetic_project(argv[1], spec).c_str());
  return 0;
}

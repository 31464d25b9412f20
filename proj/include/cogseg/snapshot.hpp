// cogseg/snapshot.hpp
//
// Self-describing binary model snapshot: dims, alphabets, canonical group
// order, all parameters and the inference hyperparameters. Round-trips
// bit-exactly.

#pragma once

#include <string>

#include "cogseg/phonetics.hpp"
#include "cogseg/segmentation.hpp"

namespace cogseg {

struct SnapshotMeta {
  double temperature = 0.2;
  double alpha = 1.0;
  LengthRange range{4, 10};
};

struct Snapshot {
  ModelParams params;
  ModelContext ctx;
  SnapshotMeta meta;
};

void save_snapshot(const std::string& path, const ModelParams& params,
                   const ModelContext& ctx, const SnapshotMeta& meta);

Snapshot load_snapshot(const std::string& path);

}  // namespace cogseg

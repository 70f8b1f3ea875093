#pragma once

#include <string>

#include "mfb/flow.hpp"
#include "mfb/surrogates.hpp"

namespace mfb {

/// Self-describing text checkpoints. Floats are written with 17 significant
/// digits so reloads are bit-exact.
void save_dense(const DenseSurrogate& s, const TrainConfig& cfg, const std::string& path);
DenseSurrogate load_dense(const std::string& path, TrainConfig* cfg = nullptr);

void save_neuram(const NeurAmModel& m, const TrainConfig& cfg, const std::string& path);
NeurAmModel load_neuram(const std::string& path, TrainConfig* cfg = nullptr);

void save_flow(const FlowModel& f, const TrainConfig& cfg, const std::string& path);
FlowModel load_flow(const std::string& path, TrainConfig* cfg = nullptr);

/// Peeks at the `kind` field ("dense", "neuram", "flow").
std::string checkpoint_kind(const std::string& path);

}  // namespace mfb

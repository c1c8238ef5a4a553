#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <string>

#include "fsml/dataset.hpp"
#include "fsml/learners.hpp"
#include "fsml/meta.hpp"
#include "fsml/protocol.hpp"
#include "json.hpp"

namespace fsml {

struct EvalSettings {
  int n_way = 5;
  int m_shot = 5;
  int q_query = -1;  // -1: match m_shot
  int episodes = 1000;
  int part = 2;
};

struct BaselineSettings {
  int shots = 5;
  int draws = 20;
  int hidden = 50;
  int epochs = 100;
  double lr = 0.01;
  int batch_size = 16;
  int episodes = 0;  // 0: held-out scoring only, no episodic pass
};

struct SkylineSettings {
  int hidden = 50;
  int epochs = 100;
  double lr = 0.01;
  int batch_size = 16;
  double holdout_fraction = 0.25;
};

struct ConfusionSettings {
  int n_way = 0;  // 0: every class of the part
  int m_shot = 5;
  int q_query = -1;
  int episodes = 1000;
  int part = 2;
};

struct AppConfig {
  AppConfig() {
    train.q_query = -1;
    train.val_q_query = -1;
  }

  SyntheticSpec synth;
  SplitMode split_mode = SplitMode::SPO;
  SplitCounts split_counts;
  std::array<double, 3> speaker_ratios{0.8, 0.1, 0.1};
  std::string preset;  // recorded when one set the class counts
  LearnerConfig learner;
  int embedding_dim = 64;
  bool relu = false;
  TrainConfig train;
  EvalSettings eval;
  BaselineSettings baseline;
  SkylineSettings skyline;
  ConfusionSettings confusion;
  uint64_t seed = 0;
};

// Strict: unknown keys and wrong types are rejected with the offending path.
AppConfig parse_config(const nlohmann::ordered_json& j);
AppConfig load_config(const std::filesystem::path& path);

// Resolves q_query = -1 sentinels to the matching m_shot.
void finalize_config(AppConfig& c);

// Range checks with key names. Expects a finalized config.
void validate_config(const AppConfig& c);

// Finalized config as the JSON embedded in every artifact. Seed excluded:
// artifacts record it as a sibling field.
nlohmann::ordered_json resolved_config_json(const AppConfig& c);

int parse_part(const std::string& name);  // train/val/test -> 0/1/2
SplitMode split_mode_from_name(const std::string& name);
const char* split_mode_name(SplitMode mode);

}  // namespace fsml

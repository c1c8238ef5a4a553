#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include "fsml/dataset.hpp"
#include "fsml/rng.hpp"
#include "json.hpp"

namespace fsml {

enum class SplitMode { SPO, NoSPO };

inline const char* split_part_name(int part) {
  static const char* names[3] = {"train", "val", "test"};
  return names[part];
}

struct SplitCounts {
  int n_train = 18;
  int n_val = 5;
  int n_test = 5;
};

struct SplitAssignment {
  SplitMode mode = SplitMode::SPO;
  uint64_t seed = 0;
  std::map<std::string, int> class_split;    // label -> part (assigned classes only)
  std::map<std::string, int> speaker_split;  // NoSPO only
  std::array<std::vector<int>, 3> retained;  // record indices, manifest order
  std::array<std::vector<std::string>, 3> part_classes;  // sorted
  // label -> retained record indices for that class, manifest order.
  std::array<std::map<std::string, std::vector<int>>, 3> by_class;
};

// Classes are shuffled by seed and assigned by counts. Under NoSPO an
// independent speaker partition (by ratios) is intersected with the class
// partition: a record survives only where both agree.
SplitAssignment make_split(const DatasetManifest& mf, SplitCounts counts, SplitMode mode,
                           std::array<double, 3> speaker_ratios, uint64_t seed);

struct SplitStatsRow {
  int n_classes = 0;
  int n_files = 0;
  int n_speakers = 0;
};
std::array<SplitStatsRow, 3> split_stats(const DatasetManifest& mf,
                                         const SplitAssignment& split);

void save_split(const std::filesystem::path& path, const DatasetManifest& mf,
                const SplitAssignment& split, const nlohmann::ordered_json& config);
SplitAssignment load_split(const std::filesystem::path& path, const DatasetManifest& mf);

struct EpisodeSpec {
  int n_way = 5;
  int m_shot = 5;
  int q_query = 5;
  int part = 2;  // train=0 val=1 test=2
};

struct Episode {
  EpisodeSpec spec;
  std::vector<std::string> class_names;  // sampled order; position = local index
  std::vector<std::pair<int, int>> support;  // (record index, local class)
  std::vector<std::pair<int, int>> query;
};

// Throws ValidationError naming the limiting class if any class of the part
// has fewer than m_shot + q_query retained records, or the part is too small.
void check_feasible(const SplitAssignment& split, const EpisodeSpec& spec);

// Uniform over the part's classes (without replacement inside an episode),
// uniform over each class's records; consumes rng sequentially.
Episode generate_episode(const SplitAssignment& split, const EpisodeSpec& spec, Rng& rng);

}  // namespace fsml

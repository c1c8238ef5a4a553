#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "fsml/io.hpp"

namespace fsml {

struct UtteranceRecord {
  std::string utterance_id;
  std::string speaker_id;
  std::string label;
  std::filesystem::path feature_path;  // as stored in the manifest (relative)
  std::filesystem::path resolved_path;  // absolute, for reading
  int n_frames = 0;
  int feature_dim = 0;
};

struct DatasetManifest {
  std::vector<UtteranceRecord> records;   // manifest line order
  std::vector<std::string> classes;       // sorted unique labels
  std::vector<std::string> speakers;      // sorted unique speaker ids
  int feature_dim = 0;
  std::filesystem::path dir;              // directory of the manifest file
};

// Manifest: UTF-8 JSONL, keys utterance_id, speaker_id, label, feature_path
// (relative to the manifest's directory), n_frames, feature_dim.
DatasetManifest load_manifest(const std::filesystem::path& path);

// Header must match the record's n_frames/feature_dim.
MatrixF read_features(const UtteranceRecord& record);
void write_features(const std::filesystem::path& path, const MatrixF& m);

// f64 accumulation; component-wise mean over frames.
Eigen::VectorXd mean_pool(const MatrixF& m);

struct SyntheticSpec {
  int n_classes = 28;
  int n_speakers = 8;
  int utterances_per_class = 40;
  int feature_dim = 256;
  int frames_min = 8;
  int frames_max = 16;
  // Mean inter-class distance between class mean vectors, in units of the
  // within-class frame standard deviation (which is 1).
  double class_separation = 3.0;
  // 0: class means drawn isotropically in the full feature space. Positive:
  // means confined to a shared random signal_dim-dimensional subspace, so the
  // class structure is transferable while frame noise stays full-dimensional.
  int signal_dim = 0;
  uint64_t seed = 0;
};

// Writes manifest.jsonl + features/*.fsfa under out_dir; byte-deterministic
// for a fixed spec. Returns the loaded-equivalent manifest.
DatasetManifest generate_synthetic(const SyntheticSpec& spec,
                                   const std::filesystem::path& out_dir);

}  // namespace fsml

#pragma once

#include <Eigen/Core>
#include <filesystem>
#include <string>
#include <vector>

namespace fsml {

// Frame features: one row per frame, f32 on disk and in memory.
using MatrixF = Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Feature archive ("FSFA"): magic, version u32 = 1, n_frames u32,
// feature_dim u32, then n_frames*feature_dim f32 row-major. All little-endian;
// exactly 16 + 4*n_frames*feature_dim bytes.
MatrixF read_fsfa(const std::filesystem::path& path);
void write_fsfa(const std::filesystem::path& path, const MatrixF& m);

// Checkpoint ("FSCK"): magic, version u32 = 1, feature_dim u32,
// embedding_dim u32, W row-major f32, b f32, temperature f32. When worker
// regressors were trained, a trailer follows: n_workers u32, then per worker
// name_len u32, name bytes, target_dim u32, V row-major f32 (target_dim x
// embedding_dim), c f32 (target_dim).
struct Checkpoint {
  Eigen::MatrixXd W;  // embedding_dim x feature_dim
  Eigen::VectorXd b;  // embedding_dim
  double temperature = 1.0;
  struct Worker {
    std::string name;
    Eigen::MatrixXd V;
    Eigen::VectorXd c;
  };
  std::vector<Worker> workers;
};

Checkpoint read_fsck(const std::filesystem::path& path);
void write_fsck(const std::filesystem::path& path, const Checkpoint& ck);

// Whole-file helpers shared by the text artifacts (manifests, reports).
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& content);

}  // namespace fsml

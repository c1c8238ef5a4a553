#include "fsml/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>

#include "fsml/error.hpp"

namespace fsml {

namespace {

void put_u32(std::string& out, uint32_t v) {
  out.push_back(static_cast<char>(v & 0xff));
  out.push_back(static_cast<char>((v >> 8) & 0xff));
  out.push_back(static_cast<char>((v >> 16) & 0xff));
  out.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& out, float f) {
  uint32_t v;
  std::memcpy(&v, &f, 4);
  put_u32(out, v);
}

struct ByteReader {
  const std::string& buf;
  size_t pos = 0;
  const std::filesystem::path& path;

  uint32_t u32() {
    if (pos + 4 > buf.size())
      throw ValidationError("truncated file: " + path.string());
    uint32_t v = (static_cast<uint32_t>(static_cast<unsigned char>(buf[pos])) |
                  static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + 1])) << 8 |
                  static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + 2])) << 16 |
                  static_cast<uint32_t>(static_cast<unsigned char>(buf[pos + 3])) << 24);
    pos += 4;
    return v;
  }

  float f32() {
    uint32_t v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }

  std::string bytes(size_t n) {
    if (pos + n > buf.size())
      throw ValidationError("truncated file: " + path.string());
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }

  bool at_end() const { return pos == buf.size(); }
};

std::string read_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open file: " + path.string());
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw ValidationError("read failure: " + path.string());
  return buf;
}

void write_binary(const std::filesystem::path& path, const std::string& buf) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ValidationError("cannot write file: " + path.string());
  out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!out) throw ValidationError("write failure: " + path.string());
}

}  // namespace

MatrixF read_fsfa(const std::filesystem::path& path) {
  std::string buf = read_binary(path);
  ByteReader r{buf, 0, path};
  if (r.bytes(4) != "FSFA")
    throw ValidationError("bad magic (expected FSFA): " + path.string());
  uint32_t version = r.u32();
  if (version != 1)
    throw ValidationError("unsupported FSFA version " + std::to_string(version) + ": " +
                          path.string());
  uint32_t n_frames = r.u32();
  uint32_t dim = r.u32();
  if (n_frames == 0 || dim == 0)
    throw ValidationError("empty feature archive: " + path.string());
  size_t expect = 16 + 4ull * n_frames * dim;
  if (buf.size() != expect)
    throw ValidationError("truncated feature archive (" + std::to_string(buf.size()) +
                          " bytes, expected " + std::to_string(expect) + "): " + path.string());
  MatrixF m(n_frames, dim);
  for (uint32_t i = 0; i < n_frames; ++i)
    for (uint32_t j = 0; j < dim; ++j) {
      float f = r.f32();
      if (!std::isfinite(f))
        throw ValidationError("non-finite value at frame " + std::to_string(i) + " dim " +
                              std::to_string(j) + ": " + path.string());
      m(i, j) = f;
    }
  return m;
}

void write_fsfa(const std::filesystem::path& path, const MatrixF& m) {
  if (m.rows() == 0 || m.cols() == 0)
    throw ValidationError("refusing to write empty feature matrix: " + path.string());
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j)))
        throw ValidationError("refusing to write non-finite feature matrix: " + path.string());
  std::string buf;
  buf.reserve(16 + 4ull * static_cast<size_t>(m.size()));
  buf += "FSFA";
  put_u32(buf, 1);
  put_u32(buf, static_cast<uint32_t>(m.rows()));
  put_u32(buf, static_cast<uint32_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) put_f32(buf, m(i, j));
  write_binary(path, buf);
}

Checkpoint read_fsck(const std::filesystem::path& path) {
  std::string buf = read_binary(path);
  ByteReader r{buf, 0, path};
  if (r.bytes(4) != "FSCK")
    throw ValidationError("bad magic (expected FSCK): " + path.string());
  uint32_t version = r.u32();
  if (version != 1)
    throw ValidationError("unsupported FSCK version " + std::to_string(version) + ": " +
                          path.string());
  uint32_t feat = r.u32();
  uint32_t emb = r.u32();
  if (feat == 0 || emb == 0)
    throw ValidationError("degenerate checkpoint dims: " + path.string());
  Checkpoint ck;
  ck.W.resize(emb, feat);
  for (uint32_t i = 0; i < emb; ++i)
    for (uint32_t j = 0; j < feat; ++j) ck.W(i, j) = r.f32();
  ck.b.resize(emb);
  for (uint32_t i = 0; i < emb; ++i) ck.b(i) = r.f32();
  ck.temperature = r.f32();
  if (!r.at_end()) {
    uint32_t n_workers = r.u32();
    for (uint32_t w = 0; w < n_workers; ++w) {
      Checkpoint::Worker worker;
      uint32_t name_len = r.u32();
      worker.name = r.bytes(name_len);
      uint32_t tdim = r.u32();
      worker.V.resize(tdim, emb);
      for (uint32_t i = 0; i < tdim; ++i)
        for (uint32_t j = 0; j < emb; ++j) worker.V(i, j) = r.f32();
      worker.c.resize(tdim);
      for (uint32_t i = 0; i < tdim; ++i) worker.c(i) = r.f32();
      ck.workers.push_back(std::move(worker));
    }
  }
  if (!r.at_end()) throw ValidationError("trailing bytes in checkpoint: " + path.string());
  return ck;
}

void write_fsck(const std::filesystem::path& path, const Checkpoint& ck) {
  std::string buf;
  buf += "FSCK";
  put_u32(buf, 1);
  put_u32(buf, static_cast<uint32_t>(ck.W.cols()));
  put_u32(buf, static_cast<uint32_t>(ck.W.rows()));
  for (Eigen::Index i = 0; i < ck.W.rows(); ++i)
    for (Eigen::Index j = 0; j < ck.W.cols(); ++j)
      put_f32(buf, static_cast<float>(ck.W(i, j)));
  for (Eigen::Index i = 0; i < ck.b.size(); ++i) put_f32(buf, static_cast<float>(ck.b(i)));
  put_f32(buf, static_cast<float>(ck.temperature));
  if (!ck.workers.empty()) {
    put_u32(buf, static_cast<uint32_t>(ck.workers.size()));
    for (const auto& w : ck.workers) {
      put_u32(buf, static_cast<uint32_t>(w.name.size()));
      buf += w.name;
      put_u32(buf, static_cast<uint32_t>(w.V.rows()));
      for (Eigen::Index i = 0; i < w.V.rows(); ++i)
        for (Eigen::Index j = 0; j < w.V.cols(); ++j)
          put_f32(buf, static_cast<float>(w.V(i, j)));
      for (Eigen::Index i = 0; i < w.c.size(); ++i) put_f32(buf, static_cast<float>(w.c(i)));
    }
  }
  write_binary(path, buf);
}

std::string read_text_file(const std::filesystem::path& path) {
  return read_binary(path);
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  write_binary(path, content);
}

}  // namespace fsml

#include <cstdint>
#include <fstream>
#include <string>

#include "doctest.h"
#include "fsml/error.hpp"
#include "fsml/io.hpp"
#include "fsml/rng.hpp"
#include "helpers.hpp"

using namespace fsml;

namespace {

std::string slurp(const std::filesystem::path& p) { return read_text_file(p); }

void spit(const std::filesystem::path& p, const std::string& bytes) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
}

MatrixF make_features(int rows, int cols, uint64_t seed) {
  Rng rng(seed);
  MatrixF m(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j) m(i, j) = static_cast<float>(rng.gaussian());
  return m;
}

}  // namespace

TEST_CASE("feature archive round-trips exactly") {
  testutil::TmpDir tmp("fsfa");
  MatrixF m = make_features(7, 5, 3);
  auto p = tmp.path / "x.fsfa";
  write_fsfa(p, m);
  CHECK(std::filesystem::file_size(p) == 16 + 4u * 7 * 5);
  MatrixF back = read_fsfa(p);
  REQUIRE(back.rows() == 7);
  REQUIRE(back.cols() == 5);
  CHECK((back - m).cwiseAbs().maxCoeff() == 0.0f);

  // byte determinism of the writer
  write_fsfa(tmp.path / "y.fsfa", m);
  CHECK(slurp(p) == slurp(tmp.path / "y.fsfa"));
}

TEST_CASE("feature archive header layout is exactly as specified") {
  testutil::TmpDir tmp("fsfa-h");
  MatrixF m(1, 2);
  m << 1.0f, -2.5f;
  auto p = tmp.path / "h.fsfa";
  write_fsfa(p, m);
  std::string buf = slurp(p);
  REQUIRE(buf.size() == 24);
  CHECK(buf.substr(0, 4) == "FSFA");
  auto u32at = [&](size_t off) {
    return static_cast<uint32_t>(static_cast<unsigned char>(buf[off])) |
           static_cast<uint32_t>(static_cast<unsigned char>(buf[off + 1])) << 8 |
           static_cast<uint32_t>(static_cast<unsigned char>(buf[off + 2])) << 16 |
           static_cast<uint32_t>(static_cast<unsigned char>(buf[off + 3])) << 24;
  };
  CHECK(u32at(4) == 1);   // version
  CHECK(u32at(8) == 1);   // n_frames
  CHECK(u32at(12) == 2);  // feature_dim
  CHECK(u32at(16) == 0x3f800000);  // 1.0f little-endian
}

TEST_CASE("feature archive rejects malformed files") {
  testutil::TmpDir tmp("fsfa-bad");
  MatrixF m = make_features(3, 4, 1);
  auto good = tmp.path / "good.fsfa";
  write_fsfa(good, m);
  std::string buf = slurp(good);

  CHECK_THROWS_AS(read_fsfa(tmp.path / "missing.fsfa"), ValidationError);

  spit(tmp.path / "magic.fsfa", "XXXX" + buf.substr(4));
  CHECK_THROWS_WITH_AS(read_fsfa(tmp.path / "magic.fsfa"),
                       doctest::Contains("bad magic"), ValidationError);

  std::string v2 = buf;
  v2[4] = 2;
  spit(tmp.path / "version.fsfa", v2);
  CHECK_THROWS_WITH_AS(read_fsfa(tmp.path / "version.fsfa"),
                       doctest::Contains("version"), ValidationError);

  spit(tmp.path / "trunc.fsfa", buf.substr(0, buf.size() - 3));
  CHECK_THROWS_WITH_AS(read_fsfa(tmp.path / "trunc.fsfa"),
                       doctest::Contains("truncated"), ValidationError);

  spit(tmp.path / "extra.fsfa", buf + "zz");
  CHECK_THROWS_AS(read_fsfa(tmp.path / "extra.fsfa"), ValidationError);

  std::string zero = buf.substr(0, 8);
  zero += std::string(8, '\0');
  spit(tmp.path / "empty.fsfa", zero);
  CHECK_THROWS_WITH_AS(read_fsfa(tmp.path / "empty.fsfa"), doctest::Contains("empty"),
                       ValidationError);

  std::string naned = buf;
  naned[16] = '\x01';
  naned[17] = '\x00';
  naned[18] = '\x80';
  naned[19] = '\x7f';  // 0x7f800001 = quiet-ish NaN
  spit(tmp.path / "nan.fsfa", naned);
  CHECK_THROWS_WITH_AS(read_fsfa(tmp.path / "nan.fsfa"),
                       doctest::Contains("non-finite"), ValidationError);

  MatrixF inf = m;
  inf(0, 0) = std::numeric_limits<float>::infinity();
  CHECK_THROWS_AS(write_fsfa(tmp.path / "inf.fsfa", inf), ValidationError);
  CHECK_THROWS_AS(write_fsfa(tmp.path / "none.fsfa", MatrixF(0, 4)), ValidationError);
}

TEST_CASE("checkpoint round-trips through f32") {
  testutil::TmpDir tmp("fsck");
  Rng rng(7);
  Checkpoint ck;
  ck.W = testutil::random_matrix(6, 9, rng);
  ck.b = testutil::random_matrix(6, 1, rng).col(0);
  ck.temperature = 1.375;  // exactly representable
  auto p = tmp.path / "ck.fsck";
  write_fsck(p, ck);
  Checkpoint back = read_fsck(p);
  REQUIRE(back.W.rows() == 6);
  REQUIRE(back.W.cols() == 9);
  CHECK(back.temperature == 1.375);
  CHECK((back.W.cast<float>() - ck.W.cast<float>()).cwiseAbs().maxCoeff() == 0.0f);
  CHECK((back.b.cast<float>() - ck.b.cast<float>()).cwiseAbs().maxCoeff() == 0.0f);
  CHECK(back.workers.empty());
}

TEST_CASE("checkpoint worker trailer round-trips") {
  testutil::TmpDir tmp("fsck-w");
  Rng rng(8);
  Checkpoint ck;
  ck.W = testutil::random_matrix(4, 5, rng);
  ck.b = Eigen::VectorXd::Zero(4);
  ck.temperature = 2.0;
  Checkpoint::Worker w1{"frame_mean", testutil::random_matrix(5, 4, rng),
                        testutil::random_matrix(5, 1, rng).col(0)};
  Checkpoint::Worker w2{"frame_logvar", testutil::random_matrix(5, 4, rng),
                        testutil::random_matrix(5, 1, rng).col(0)};
  ck.workers = {w1, w2};
  auto p = tmp.path / "ck.fsck";
  write_fsck(p, ck);
  Checkpoint back = read_fsck(p);
  REQUIRE(back.workers.size() == 2);
  CHECK(back.workers[0].name == "frame_mean");
  CHECK(back.workers[1].name == "frame_logvar");
  CHECK(back.workers[1].V.rows() == 5);
  CHECK(back.workers[1].V.cols() == 4);
  CHECK((back.workers[0].V.cast<float>() - w1.V.cast<float>()).cwiseAbs().maxCoeff() ==
        0.0f);
  CHECK((back.workers[1].c.cast<float>() - w2.c.cast<float>()).cwiseAbs().maxCoeff() ==
        0.0f);
}

TEST_CASE("checkpoint rejects malformed files") {
  testutil::TmpDir tmp("fsck-bad");
  Checkpoint ck;
  ck.W = Eigen::MatrixXd::Ones(2, 3);
  ck.b = Eigen::VectorXd::Zero(2);
  auto p = tmp.path / "ck.fsck";
  write_fsck(p, ck);
  std::string buf = slurp(p);

  spit(tmp.path / "magic.fsck", "FSFA" + buf.substr(4));
  CHECK_THROWS_WITH_AS(read_fsck(tmp.path / "magic.fsck"),
                       doctest::Contains("bad magic"), ValidationError);

  spit(tmp.path / "trail.fsck", buf + "x");
  CHECK_THROWS_AS(read_fsck(tmp.path / "trail.fsck"), ValidationError);

  spit(tmp.path / "short.fsck", buf.substr(0, buf.size() - 2));
  CHECK_THROWS_WITH_AS(read_fsck(tmp.path / "short.fsck"),
                       doctest::Contains("truncated"), ValidationError);
}

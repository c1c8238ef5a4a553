#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "doctest.h"
#include "fsml/dataset.hpp"
#include "fsml/error.hpp"
#include "fsml/protocol.hpp"
#include "helpers.hpp"

using namespace fsml;

namespace {

// In-memory manifest; features never touched by protocol code.
DatasetManifest fake_manifest(int n_classes, int n_speakers, int per_class) {
  DatasetManifest mf;
  mf.feature_dim = 4;
  mf.dir = ".";
  int counter = 0;
  std::set<std::string> cls, spk;
  for (int k = 0; k < n_classes; ++k)
    for (int j = 0; j < per_class; ++j) {
      UtteranceRecord r;
      char buf[32];
      std::snprintf(buf, sizeof buf, "utt%05d", counter);
      r.utterance_id = buf;
      std::snprintf(buf, sizeof buf, "cls%03d", k);
      r.label = buf;
      std::snprintf(buf, sizeof buf, "spk%03d", (k * per_class + j) % n_speakers);
      r.speaker_id = buf;
      r.feature_path = r.utterance_id + ".fsfa";
      r.resolved_path = r.feature_path;
      r.n_frames = 3;
      r.feature_dim = 4;
      cls.insert(r.label);
      spk.insert(r.speaker_id);
      mf.records.push_back(std::move(r));
      ++counter;
    }
  mf.classes.assign(cls.begin(), cls.end());
  mf.speakers.assign(spk.begin(), spk.end());
  return mf;
}

}  // namespace

TEST_CASE("class splits are disjoint, exhaustive per counts, and seeded") {
  DatasetManifest mf = fake_manifest(12, 5, 6);
  SplitCounts counts{6, 3, 3};
  for (uint64_t seed = 0; seed < 25; ++seed) {
    SplitAssignment s = make_split(mf, counts, SplitMode::SPO, {0.8, 0.1, 0.1}, seed);
    CHECK(s.part_classes[0].size() == 6);
    CHECK(s.part_classes[1].size() == 3);
    CHECK(s.part_classes[2].size() == 3);
    std::set<std::string> all;
    for (int p = 0; p < 3; ++p)
      for (const auto& c : s.part_classes[p]) CHECK(all.insert(c).second);
    CHECK(all.size() == 12);
    // SPO keeps every record of an assigned class
    size_t retained = s.retained[0].size() + s.retained[1].size() + s.retained[2].size();
    CHECK(retained == mf.records.size());
  }
  SplitAssignment a = make_split(mf, counts, SplitMode::SPO, {0.8, 0.1, 0.1}, 1);
  SplitAssignment b = make_split(mf, counts, SplitMode::SPO, {0.8, 0.1, 0.1}, 1);
  SplitAssignment c = make_split(mf, counts, SplitMode::SPO, {0.8, 0.1, 0.1}, 2);
  CHECK(a.part_classes[0] == b.part_classes[0]);
  CHECK(a.part_classes[0] != c.part_classes[0]);
}

TEST_CASE("speaker-open splits keep speakers disjoint and filter records") {
  DatasetManifest mf = fake_manifest(10, 8, 8);
  SplitCounts counts{6, 2, 2};
  for (uint64_t seed = 100; seed < 120; ++seed) {
    SplitAssignment s =
        make_split(mf, counts, SplitMode::NoSPO, {0.5, 0.25, 0.25}, seed);
    // speakers partitioned across parts
    std::set<std::string> seen;
    for (const auto& [spk, part] : s.speaker_split) {
      CHECK(part >= 0);
      CHECK(part <= 2);
      CHECK(seen.insert(spk).second);
    }
    CHECK(seen.size() == mf.speakers.size());

    // brute-force filter oracle: retained iff class part == speaker part
    std::array<std::set<int>, 3> expect;
    for (size_t i = 0; i < mf.records.size(); ++i) {
      const auto& r = mf.records[i];
      auto ci = s.class_split.find(r.label);
      if (ci == s.class_split.end()) continue;
      int cp = ci->second;
      int sp = s.speaker_split.at(r.speaker_id);
      if (cp == sp) expect[cp].insert(static_cast<int>(i));
    }
    for (int p = 0; p < 3; ++p) {
      std::set<int> got(s.retained[p].begin(), s.retained[p].end());
      CHECK(got == expect[p]);
      // no speaker leaks into another part's retained records
      for (int idx : s.retained[p])
        CHECK(s.speaker_split.at(mf.records[static_cast<size_t>(idx)].speaker_id) == p);
    }
  }
}

TEST_CASE("degenerate speaker filters are rejected with the class named") {
  // 3 speakers, 1 utterance per class: intersecting partitions must starve
  // some class.
  DatasetManifest mf = fake_manifest(9, 3, 1);
  SplitCounts counts{3, 3, 3};
  CHECK_THROWS_WITH_AS(
      make_split(mf, counts, SplitMode::NoSPO, {0.34, 0.33, 0.33}, 0),
      doctest::Contains("zero records"), ValidationError);
}

TEST_CASE("split validation errors") {
  DatasetManifest mf = fake_manifest(6, 4, 3);
  CHECK_THROWS_WITH_AS(make_split(mf, {5, 1, 1}, SplitMode::SPO, {0.8, 0.1, 0.1}, 0),
                       doctest::Contains("needs 7 classes"), ValidationError);
  CHECK_THROWS_AS(make_split(mf, {4, 1, 1}, SplitMode::NoSPO, {0.5, 0.5, 0.5}, 0),
                  ValidationError);
  DatasetManifest two = fake_manifest(6, 2, 4);
  CHECK_THROWS_WITH_AS(make_split(two, {4, 1, 1}, SplitMode::NoSPO, {0.4, 0.3, 0.3}, 0),
                       doctest::Contains("at least 3 speakers"), ValidationError);
}

TEST_CASE("split files round-trip and are validated on load") {
  testutil::TmpDir tmp("split");
  DatasetManifest mf = fake_manifest(10, 6, 5);
  SplitCounts counts{5, 3, 2};
  SplitAssignment s = make_split(mf, counts, SplitMode::NoSPO, {0.5, 0.25, 0.25}, 77);
  auto p = tmp.path / "split.json";
  save_split(p, mf, s, nlohmann::ordered_json{{"note", "test"}});
  SplitAssignment back = load_split(p, mf);
  CHECK(back.mode == s.mode);
  CHECK(back.seed == s.seed);
  CHECK(back.class_split == s.class_split);
  CHECK(back.speaker_split == s.speaker_split);
  for (int part = 0; part < 3; ++part) {
    CHECK(back.retained[part] == s.retained[part]);
    CHECK(back.part_classes[part] == s.part_classes[part]);
    CHECK(back.by_class[part] == s.by_class[part]);
  }

  // same split against a manifest with an extra record: unknown ids fail
  DatasetManifest bigger = fake_manifest(10, 6, 6);
  CHECK_THROWS_AS(load_split(p, bigger), ValidationError);

  CHECK_THROWS_AS(load_split(tmp.path / "missing.json", mf), ValidationError);
}

TEST_CASE("tampered split files are rejected") {
  testutil::TmpDir tmp("split-bad");
  DatasetManifest mf = fake_manifest(8, 5, 4);
  SplitAssignment s = make_split(mf, {4, 2, 2}, SplitMode::SPO, {0.8, 0.1, 0.1}, 3);
  auto p = tmp.path / "split.json";
  save_split(p, mf, s, nlohmann::ordered_json::object());
  std::string text = read_text_file(p);

  // duplicate class assignment across parts
  auto j = nlohmann::ordered_json::parse(text);
  j["class_split"]["val"].push_back(j["class_split"]["train"][0]);
  write_text_file(tmp.path / "dup.json", j.dump());
  CHECK_THROWS_AS(load_split(tmp.path / "dup.json", mf), ValidationError);

  auto j2 = nlohmann::ordered_json::parse(text);
  j2["class_split"]["train"].push_back("clsXYZ");
  write_text_file(tmp.path / "unknown.json", j2.dump());
  CHECK_THROWS_AS(load_split(tmp.path / "unknown.json", mf), ValidationError);

  auto j3 = nlohmann::ordered_json::parse(text);
  j3["mode"] = "banana";
  write_text_file(tmp.path / "mode.json", j3.dump());
  CHECK_THROWS_AS(load_split(tmp.path / "mode.json", mf), ValidationError);
}

TEST_CASE("episodes respect counts, disjointness and feasibility") {
  DatasetManifest mf = fake_manifest(9, 4, 8);
  SplitAssignment s = make_split(mf, {5, 2, 2}, SplitMode::SPO, {0.8, 0.1, 0.1}, 9);
  EpisodeSpec spec;
  spec.n_way = 3;
  spec.m_shot = 2;
  spec.q_query = 3;
  spec.part = 0;
  check_feasible(s, spec);

  Rng rng(42);
  for (int e = 0; e < 500; ++e) {
    Episode ep = generate_episode(s, spec, rng);
    REQUIRE(ep.class_names.size() == 3);
    std::set<std::string> uniq(ep.class_names.begin(), ep.class_names.end());
    CHECK(uniq.size() == 3);
    REQUIRE(ep.support.size() == 6);
    REQUIRE(ep.query.size() == 9);
    std::set<int> support_ids, query_ids;
    std::map<int, int> support_per_class, query_per_class;
    for (auto& [idx, local] : ep.support) {
      CHECK(support_ids.insert(idx).second);
      REQUIRE(local >= 0);
      REQUIRE(local < 3);
      support_per_class[local]++;
      CHECK(mf.records[static_cast<size_t>(idx)].label ==
            ep.class_names[static_cast<size_t>(local)]);
    }
    for (auto& [idx, local] : ep.query) {
      CHECK(query_ids.insert(idx).second);
      CHECK(support_ids.count(idx) == 0);  // support and query never share records
      query_per_class[local]++;
      CHECK(mf.records[static_cast<size_t>(idx)].label ==
            ep.class_names[static_cast<size_t>(local)]);
    }
    for (int k = 0; k < 3; ++k) {
      CHECK(support_per_class[k] == 2);
      CHECK(query_per_class[k] == 3);
    }
    // all drawn records really belong to the episode's part
    for (auto& [idx, local] : ep.support)
      CHECK(s.class_split.at(mf.records[static_cast<size_t>(idx)].label) == 0);
  }

  // determinism: same seed, same stream
  Rng r1(7), r2(7);
  Episode e1 = generate_episode(s, spec, r1);
  Episode e2 = generate_episode(s, spec, r2);
  CHECK(e1.class_names == e2.class_names);
  CHECK(e1.support == e2.support);
  CHECK(e1.query == e2.query);
}

TEST_CASE("infeasible episode specs name the limiting class") {
  DatasetManifest mf = fake_manifest(6, 3, 4);
  SplitAssignment s = make_split(mf, {4, 1, 1}, SplitMode::SPO, {0.8, 0.1, 0.1}, 1);
  EpisodeSpec spec;
  spec.n_way = 3;
  spec.m_shot = 2;
  spec.q_query = 3;  // needs 5 > 4 records
  spec.part = 0;
  CHECK_THROWS_WITH_AS(check_feasible(s, spec), doctest::Contains("episode needs 5"),
                       ValidationError);
  spec.q_query = 2;
  check_feasible(s, spec);
  EpisodeSpec wide = spec;
  wide.n_way = 5;
  CHECK_THROWS_WITH_AS(check_feasible(s, wide), doctest::Contains("episode needs 5"),
                       ValidationError);
  EpisodeSpec narrow = spec;
  narrow.n_way = 1;
  CHECK_THROWS_AS(check_feasible(s, narrow), ValidationError);
}

TEST_CASE("episode class sampling is uniform over the part") {
  DatasetManifest mf = fake_manifest(8, 4, 6);
  SplitAssignment s = make_split(mf, {6, 1, 1}, SplitMode::SPO, {0.8, 0.1, 0.1}, 2);
  EpisodeSpec spec;
  spec.n_way = 2;
  spec.m_shot = 2;
  spec.q_query = 2;
  spec.part = 0;
  std::map<std::string, int> hits;
  const int episodes = 6000;
  Rng rng(13);
  for (int e = 0; e < episodes; ++e) {
    Episode ep = generate_episode(s, spec, rng);
    for (const auto& c : ep.class_names) hits[c]++;
  }
  double expected = episodes * 2.0 / 6.0, stat = 0.0;
  REQUIRE(hits.size() == 6);
  for (const auto& [c, h] : hits) stat += (h - expected) * (h - expected) / expected;
  CHECK(testutil::chi2_sf(stat, 5) > 0.001);
}

#include "fsml/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "fsml/error.hpp"
#include "fsml/io.hpp"

namespace fsml {

namespace {
using ordered_json = nlohmann::ordered_json;

void finalize(const DatasetManifest& mf, SplitAssignment& s) {
  for (int p = 0; p < 3; ++p) {
    s.by_class[p].clear();
    for (int idx : s.retained[p]) s.by_class[p][mf.records[idx].label].push_back(idx);
    s.part_classes[p].clear();
    for (const auto& [label, part] : s.class_split)
      if (part == p) s.part_classes[p].push_back(label);
    // map iteration is sorted already; keep explicit for clarity
    std::sort(s.part_classes[p].begin(), s.part_classes[p].end());
  }
}

}  // namespace

SplitAssignment make_split(const DatasetManifest& mf, SplitCounts counts, SplitMode mode,
                           std::array<double, 3> speaker_ratios, uint64_t seed) {
  if (counts.n_train < 1 || counts.n_val < 0 || counts.n_test < 1)
    throw ValidationError("split counts must have n_train >= 1, n_val >= 0, n_test >= 1");
  int total = counts.n_train + counts.n_val + counts.n_test;
  if (total > static_cast<int>(mf.classes.size()))
    throw ValidationError("split needs " + std::to_string(total) + " classes but manifest has " +
                          std::to_string(mf.classes.size()));

  SplitAssignment s;
  s.mode = mode;
  s.seed = seed;

  std::vector<std::string> classes = mf.classes;  // sorted
  Rng class_rng(derive_seed(seed, "split-classes"));
  class_rng.shuffle(classes);
  for (int i = 0; i < total; ++i) {
    int part = i < counts.n_train ? 0 : (i < counts.n_train + counts.n_val ? 1 : 2);
    s.class_split[classes[i]] = part;
  }

  if (mode == SplitMode::NoSPO) {
    double rsum = speaker_ratios[0] + speaker_ratios[1] + speaker_ratios[2];
    if (speaker_ratios[0] <= 0 || speaker_ratios[1] <= 0 || speaker_ratios[2] <= 0 ||
        std::abs(rsum - 1.0) > 1e-6)
      throw ValidationError("speaker ratios must be positive and sum to 1");
    int n_spk = static_cast<int>(mf.speakers.size());
    if (n_spk < 3) throw ValidationError("no-spo split needs at least 3 speakers");
    std::vector<std::string> speakers = mf.speakers;  // sorted
    Rng spk_rng(derive_seed(seed, "split-speakers"));
    spk_rng.shuffle(speakers);
    int n_val = std::max(1, static_cast<int>(std::floor(speaker_ratios[1] * n_spk)));
    int n_test = std::max(1, static_cast<int>(std::floor(speaker_ratios[2] * n_spk)));
    int n_train = n_spk - n_val - n_test;
    if (n_train < 1) throw ValidationError("speaker ratios leave no train speakers");
    for (int i = 0; i < n_spk; ++i) {
      int part = i < n_train ? 0 : (i < n_train + n_val ? 1 : 2);
      s.speaker_split[speakers[i]] = part;
    }
  }

  for (int idx = 0; idx < static_cast<int>(mf.records.size()); ++idx) {
    const auto& r = mf.records[idx];
    auto ci = s.class_split.find(r.label);
    if (ci == s.class_split.end()) continue;
    if (mode == SplitMode::NoSPO) {
      auto si = s.speaker_split.find(r.speaker_id);
      if (si == s.speaker_split.end() || si->second != ci->second) continue;
    }
    s.retained[ci->second].push_back(idx);
  }

  finalize(mf, s);

  for (int p = 0; p < 3; ++p)
    for (const auto& label : s.part_classes[p])
      if (!s.by_class[p].count(label))
        throw ValidationError(std::string("split leaves class '") + label +
                              "' with zero records in " + split_part_name(p));
  return s;
}

std::array<SplitStatsRow, 3> split_stats(const DatasetManifest& mf,
                                         const SplitAssignment& split) {
  std::array<SplitStatsRow, 3> rows;
  for (int p = 0; p < 3; ++p) {
    std::set<std::string> cls, spk;
    for (int idx : split.retained[p]) {
      cls.insert(mf.records[idx].label);
      spk.insert(mf.records[idx].speaker_id);
    }
    rows[p].n_classes = static_cast<int>(cls.size());
    rows[p].n_files = static_cast<int>(split.retained[p].size());
    rows[p].n_speakers = static_cast<int>(spk.size());
  }
  return rows;
}

void save_split(const std::filesystem::path& path, const DatasetManifest& mf,
                const SplitAssignment& split, const ordered_json& config) {
  ordered_json j;
  j["config"] = config;
  j["mode"] = split.mode == SplitMode::SPO ? "spo" : "nospo";
  j["seed"] = split.seed;
  ordered_json cls;
  for (int p = 0; p < 3; ++p) cls[split_part_name(p)] = split.part_classes[p];
  j["class_split"] = cls;
  if (split.mode == SplitMode::NoSPO) {
    ordered_json spk;
    for (int p = 0; p < 3; ++p) {
      std::vector<std::string> names;
      for (const auto& [name, part] : split.speaker_split)
        if (part == p) names.push_back(name);
      spk[split_part_name(p)] = names;
    }
    j["speaker_split"] = spk;
  }
  ordered_json ret;
  for (int p = 0; p < 3; ++p) {
    std::vector<std::string> ids;
    for (int idx : split.retained[p]) ids.push_back(mf.records[idx].utterance_id);
    ret[split_part_name(p)] = ids;
  }
  j["retained"] = ret;
  write_text_file(path, j.dump(2) + "\n");
}

SplitAssignment load_split(const std::filesystem::path& path, const DatasetManifest& mf) {
  nlohmann::json j = nlohmann::json::parse(read_text_file(path), nullptr, false);
  if (j.is_discarded() || !j.is_object())
    throw ValidationError("malformed split file: " + path.string());
  auto fail = [&](const std::string& why) {
    throw ValidationError("split file " + path.string() + ": " + why);
  };

  SplitAssignment s;
  try {
    std::string mode = j.at("mode").get<std::string>();
    if (mode == "spo")
      s.mode = SplitMode::SPO;
    else if (mode == "nospo")
      s.mode = SplitMode::NoSPO;
    else
      fail("unknown mode '" + mode + "'");
    s.seed = j.at("seed").get<uint64_t>();
    for (int p = 0; p < 3; ++p)
      for (const auto& label : j.at("class_split").at(split_part_name(p)))
        if (!s.class_split.emplace(label.get<std::string>(), p).second)
          fail("class '" + label.get<std::string>() + "' assigned to two splits");
    if (s.mode == SplitMode::NoSPO)
      for (int p = 0; p < 3; ++p)
        for (const auto& name : j.at("speaker_split").at(split_part_name(p)))
          if (!s.speaker_split.emplace(name.get<std::string>(), p).second)
            fail("speaker '" + name.get<std::string>() + "' assigned to two splits");

    std::map<std::string, int> id_to_idx;
    for (int i = 0; i < static_cast<int>(mf.records.size()); ++i)
      id_to_idx[mf.records[i].utterance_id] = i;
    for (int p = 0; p < 3; ++p)
      for (const auto& id : j.at("retained").at(split_part_name(p))) {
        auto it = id_to_idx.find(id.get<std::string>());
        if (it == id_to_idx.end())
          fail("retained utterance '" + id.get<std::string>() + "' not in manifest");
        s.retained[p].push_back(it->second);
      }
  } catch (const nlohmann::json::exception& e) {
    fail(std::string("missing or bad field: ") + e.what());
  }

  // The file must describe a protocol the invariants accept.
  for (int p = 0; p < 3; ++p)
    for (int idx : s.retained[p]) {
      const auto& r = mf.records[idx];
      auto ci = s.class_split.find(r.label);
      if (ci == s.class_split.end() || ci->second != p)
        throw ValidationError("split file " + path.string() + ": record '" + r.utterance_id +
                              "' retained in " + split_part_name(p) +
                              " but its class is assigned elsewhere");
      if (s.mode == SplitMode::NoSPO) {
        auto si = s.speaker_split.find(r.speaker_id);
        if (si == s.speaker_split.end() || si->second != p)
          throw ValidationError("split file " + path.string() + ": record '" + r.utterance_id +
                                "' violates speaker disjointness");
      }
    }

  finalize(mf, s);
  return s;
}

void check_feasible(const SplitAssignment& split, const EpisodeSpec& spec) {
  if (spec.n_way < 2) throw ValidationError("episodes need n_way >= 2");
  if (spec.m_shot < 1 || spec.q_query < 1)
    throw ValidationError("episodes need m_shot >= 1 and q_query >= 1");
  if (spec.part < 0 || spec.part > 2) throw ValidationError("bad split part");
  const auto& classes = split.part_classes[spec.part];
  if (static_cast<int>(classes.size()) < spec.n_way)
    throw ValidationError(std::string(split_part_name(spec.part)) + " split has " +
                          std::to_string(classes.size()) + " classes, episode needs " +
                          std::to_string(spec.n_way));
  int need = spec.m_shot + spec.q_query;
  for (const auto& label : classes) {
    int have = static_cast<int>(split.by_class[spec.part].at(label).size());
    if (have < need)
      throw ValidationError("class '" + label + "' has " + std::to_string(have) +
                            " records in " + split_part_name(spec.part) + ", episode needs " +
                            std::to_string(need));
  }
}

Episode generate_episode(const SplitAssignment& split, const EpisodeSpec& spec, Rng& rng) {
  const auto& classes = split.part_classes[spec.part];
  if (static_cast<int>(classes.size()) < spec.n_way)
    throw ValidationError("episode infeasible: too few classes");
  Episode ep;
  ep.spec = spec;
  std::vector<int> chosen =
      rng.sample_without_replacement(static_cast<int>(classes.size()), spec.n_way);
  for (int local = 0; local < spec.n_way; ++local) {
    const std::string& label = classes[chosen[local]];
    const auto& pool = split.by_class[spec.part].at(label);
    int need = spec.m_shot + spec.q_query;
    if (static_cast<int>(pool.size()) < need)
      throw ValidationError("episode infeasible: class '" + label + "' has " +
                            std::to_string(pool.size()) + " records, needs " +
                            std::to_string(need));
    ep.class_names.push_back(label);
    std::vector<int> picks =
        rng.sample_without_replacement(static_cast<int>(pool.size()), need);
    for (int i = 0; i < spec.m_shot; ++i) ep.support.emplace_back(pool[picks[i]], local);
    for (int i = spec.m_shot; i < need; ++i) ep.query.emplace_back(pool[picks[i]], local);
  }
  return ep;
}

}  // namespace fsml

#include "sscr/episodes.hpp"

#include <fstream>
#include <stdexcept>

#include "json.hpp"

namespace sscr {

using nlohmann::json;

namespace {

Episode generate_episode(int id, int turns, Rng& rng) {
  Episode ep;
  ep.id = id;
  Scene scene;
  for (int t = 0; t < turns; ++t) {
    Turn turn;
    turn.edit = sample_feasible_edit(scene, rng);
    turn.text = synthesize(turn.edit);
    scene = apply_edit(scene, turn.edit);
    turn.scene = scene;
    ep.turns.push_back(std::move(turn));
  }
  return ep;
}

json spec_to_json(const ObjectSpec& spec) {
  return json::array({color_names()[static_cast<size_t>(spec.color)],
                      shape_names()[static_cast<size_t>(spec.shape)]});
}

ObjectSpec spec_from_json(const json& j) {
  if (!j.is_array() || j.size() != 2) throw std::runtime_error("episodes: bad object spec");
  ObjectSpec spec;
  bool found = false;
  for (int c = 0; c < kNumColors; ++c) {
    if (j[0].get<std::string>() == color_names()[static_cast<size_t>(c)]) {
      spec.color = static_cast<Color>(c);
      found = true;
    }
  }
  if (!found) throw std::runtime_error("episodes: unknown color '" + j[0].get<std::string>() + "'");
  found = false;
  for (int s = 0; s < kNumShapes; ++s) {
    if (j[1].get<std::string>() == shape_names()[static_cast<size_t>(s)]) {
      spec.shape = static_cast<Shape3>(s);
      found = true;
    }
  }
  if (!found) throw std::runtime_error("episodes: unknown shape '" + j[1].get<std::string>() + "'");
  return spec;
}

}  // namespace

std::vector<Episode> generate_episodes(int count, int turns, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Episode> out;
  out.reserve(static_cast<size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(generate_episode(i, turns, rng));
  return out;
}

DatasetSplits make_splits(const std::vector<Episode>& all, int n_train, int n_val, int n_test) {
  if (n_train + n_val + n_test > static_cast<int>(all.size())) {
    throw std::invalid_argument("make_splits: not enough episodes");
  }
  DatasetSplits s;
  auto it = all.begin();
  s.train.assign(it, it + n_train);
  it += n_train;
  s.val.assign(it, it + n_val);
  it += n_val;
  s.test.assign(it, it + n_test);
  return s;
}

std::vector<Episode> subsample_episodes(const std::vector<Episode>& episodes, double fraction,
                                        std::uint64_t seed) {
  if (fraction < 0.0 || fraction > 1.0) {
    throw std::invalid_argument("subsample_episodes: fraction must be in [0,1]");
  }
  const int n = static_cast<int>(episodes.size());
  const int k = std::max(1, static_cast<int>(fraction * n + 0.5));
  if (k >= n) return episodes;
  Rng rng(seed);
  std::vector<Episode> out;
  out.reserve(static_cast<size_t>(k));
  for (int idx : rng.sample_indices(n, k)) out.push_back(episodes[static_cast<size_t>(idx)]);
  return out;
}

const std::vector<ObjectSpec>& zero_shot_holdout() {
  static const std::vector<ObjectSpec> holdout = {
      {Color::Gray, Shape3::Cube},
      {Color::Red, Shape3::Cube},
      {Color::Green, Shape3::Sphere},
      {Color::Purple, Shape3::Cylinder},
  };
  return holdout;
}

bool mentions_holdout(const Episode& episode) {
  for (const Turn& turn : episode.turns) {
    for (const ObjectSpec& h : zero_shot_holdout()) {
      if (turn.edit.target == h) return true;
      if (turn.edit.anchor.has_value() && *turn.edit.anchor == h) return true;
    }
  }
  return false;
}

DatasetSplits generate_zero_shot_data(int n_train, int n_val, int n_test, int turns,
                                      std::uint64_t seed) {
  Rng rng(seed);
  DatasetSplits s;
  int id = 0;
  // Cap attempts so a bad configuration cannot spin forever.
  const int max_attempts = 200 * (n_train + n_val + n_test + 1);
  for (int attempt = 0; attempt < max_attempts; ++attempt) {
    if (static_cast<int>(s.train.size()) == n_train && static_cast<int>(s.val.size()) == n_val &&
        static_cast<int>(s.test.size()) == n_test) {
      return s;
    }
    Episode ep = generate_episode(id, turns, rng);
    if (mentions_holdout(ep)) {
      if (static_cast<int>(s.test.size()) < n_test) {
        ep.id = id++;
        s.test.push_back(std::move(ep));
      }
    } else if (static_cast<int>(s.train.size()) < n_train) {
      ep.id = id++;
      s.train.push_back(std::move(ep));
    } else if (static_cast<int>(s.val.size()) < n_val) {
      ep.id = id++;
      s.val.push_back(std::move(ep));
    }
  }
  throw std::runtime_error("generate_zero_shot_data: could not fill split quotas");
}

void save_episodes(const std::vector<Episode>& episodes, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);

  json header = {{"format", "sscr-episodes"}, {"version", 1}, {"grid", kGridSize}};
  out << header.dump() << "\n";

  for (const Episode& ep : episodes) {
    json turns = json::array();
    for (const Turn& turn : ep.turns) {
      json jt;
      jt["text"] = turn.text;
      jt["target"] = spec_to_json(turn.edit.target);
      jt["relation"] = relation_name(turn.edit.relation);
      jt["anchor"] = turn.edit.anchor.has_value() ? spec_to_json(*turn.edit.anchor) : json(nullptr);
      json scene = json::array();
      for (const Placement& p : turn.scene.placements) {
        scene.push_back(json::array({color_names()[static_cast<size_t>(p.spec.color)],
                                     shape_names()[static_cast<size_t>(p.spec.shape)], p.x, p.y}));
      }
      jt["scene"] = scene;
      turns.push_back(std::move(jt));
    }
    json je = {{"id", ep.id}, {"turns", turns}};
    out << je.dump() << "\n";
  }
  if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Episode> load_episodes(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open: " + path);

  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("episodes: empty file " + path);
  const json header = json::parse(line);
  if (header.value("format", "") != "sscr-episodes" || header.value("version", 0) != 1) {
    throw std::runtime_error("episodes: unrecognized header in " + path);
  }
  if (header.value("grid", 0) != kGridSize) {
    throw std::runtime_error("episodes: grid size mismatch in " + path);
  }

  std::vector<Episode> episodes;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const json je = json::parse(line);
    Episode ep;
    ep.id = je.at("id").get<int>();
    Scene replay;
    for (const json& jt : je.at("turns")) {
      Turn turn;
      turn.text = jt.at("text").get<std::string>();
      turn.edit = parse(turn.text);

      // Stored fields must agree with the parsed text.
      if (!(spec_from_json(jt.at("target")) == turn.edit.target) ||
          relation_from_name(jt.at("relation").get<std::string>()) != turn.edit.relation) {
        throw std::runtime_error("episode " + std::to_string(ep.id) +
                                 ": stored edit disagrees with instruction text");
      }
      const json& ja = jt.at("anchor");
      if (ja.is_null() != !turn.edit.anchor.has_value() ||
          (!ja.is_null() && !(spec_from_json(ja) == *turn.edit.anchor))) {
        throw std::runtime_error("episode " + std::to_string(ep.id) +
                                 ": stored anchor disagrees with instruction text");
      }

      replay = apply_edit(replay, turn.edit);
      Scene stored;
      for (const json& jp : jt.at("scene")) {
        if (!jp.is_array() || jp.size() != 4) throw std::runtime_error("episodes: bad placement");
        ObjectSpec spec = spec_from_json(json::array({jp[0], jp[1]}));
        stored.placements.push_back({spec, jp[2].get<int>(), jp[3].get<int>()});
      }
      stored.check_valid();
      if (!(stored == replay)) {
        throw std::runtime_error("episode " + std::to_string(ep.id) +
                                 ": stored scene does not match edit replay");
      }
      turn.scene = stored;
      ep.turns.push_back(std::move(turn));
    }
    episodes.push_back(std::move(ep));
  }
  return episodes;
}

}  // namespace sscr

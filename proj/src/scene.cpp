#include "sscr/scene.hpp"

#include <algorithm>
#include <cstdint>

namespace sscr {

const std::array<const char*, kNumColors>& color_names() {
  static const std::array<const char*, kNumColors> names = {
      "gray", "red", "blue", "green", "brown", "purple", "cyan", "yellow"};
  return names;
}

const std::array<const char*, kNumShapes>& shape_names() {
  static const std::array<const char*, kNumShapes> names = {"cube", "sphere", "cylinder"};
  return names;
}

Color color_from_name(const std::string& name) {
  const auto& names = color_names();
  for (int i = 0; i < kNumColors; ++i) {
    if (name == names[static_cast<size_t>(i)]) return static_cast<Color>(i);
  }
  throw std::invalid_argument("unknown color '" + name + "'");
}

Shape3 shape_from_name(const std::string& name) {
  const auto& names = shape_names();
  for (int i = 0; i < kNumShapes; ++i) {
    if (name == names[static_cast<size_t>(i)]) return static_cast<Shape3>(i);
  }
  throw std::invalid_argument("unknown shape '" + name + "'");
}

std::string ObjectSpec::str() const {
  return std::string(color_names()[static_cast<size_t>(color)]) + " " +
         shape_names()[static_cast<size_t>(shape)];
}

bool Scene::operator==(const Scene& o) const {
  if (grid != o.grid || placements.size() != o.placements.size()) return false;
  auto key = [](const Placement& p) {
    return std::tuple(p.spec.index(), p.x, p.y);
  };
  auto a = placements;
  auto b = o.placements;
  auto lt = [&](const Placement& l, const Placement& r) { return key(l) < key(r); };
  std::sort(a.begin(), a.end(), lt);
  std::sort(b.begin(), b.end(), lt);
  return a == b;
}

bool Scene::occupied(int x, int y) const {
  for (const auto& p : placements) {
    if (p.x == x && p.y == y) return true;
  }
  return false;
}

std::optional<Placement> Scene::find(const ObjectSpec& spec) const {
  for (const auto& p : placements) {
    if (p.spec == spec) return p;
  }
  return std::nullopt;
}

void Scene::check_valid() const {
  for (size_t i = 0; i < placements.size(); ++i) {
    const auto& p = placements[i];
    if (p.x < 0 || p.x >= grid || p.y < 0 || p.y >= grid) {
      throw std::invalid_argument("scene: placement outside grid at (" + std::to_string(p.x) +
                                  "," + std::to_string(p.y) + ")");
    }
    for (size_t j = i + 1; j < placements.size(); ++j) {
      const auto& q = placements[j];
      if (p.x == q.x && p.y == q.y) {
        throw std::invalid_argument("scene: two objects in cell (" + std::to_string(p.x) + "," +
                                    std::to_string(p.y) + ")");
      }
      if (p.spec == q.spec) {
        throw std::invalid_argument("scene: duplicate object '" + p.spec.str() + "'");
      }
    }
  }
}

const char* relation_name(Relation r) {
  switch (r) {
    case Relation::AtCenter: return "at-the-center";
    case Relation::Behind: return "behind";
    case Relation::InFrontOf: return "in-front-of";
    case Relation::LeftOf: return "left-of";
    case Relation::RightOf: return "right-of";
  }
  return "?";
}

Relation relation_from_name(const std::string& name) {
  for (Relation r : {Relation::AtCenter, Relation::Behind, Relation::InFrontOf,
                     Relation::LeftOf, Relation::RightOf}) {
    if (name == relation_name(r)) return r;
  }
  throw std::invalid_argument("unknown relation '" + name + "'");
}

Scene apply_edit(const Scene& scene, const ParsedEdit& edit, std::uint64_t /*rng_seed*/) {
  if (scene.contains(edit.target)) {
    throw EditError("edit: scene already contains a " + edit.target.str());
  }

  int tx = -1, ty = -1;
  if (edit.relation == Relation::AtCenter) {
    tx = scene.grid / 2;
    ty = scene.grid / 2;
    if (scene.occupied(tx, ty)) {
      throw EditError("edit: center cell is occupied");
    }
  } else {
    if (!edit.anchor.has_value()) {
      throw EditError("edit: relative relation without an anchor");
    }
    auto anchor = scene.find(*edit.anchor);
    if (!anchor.has_value()) {
      throw EditError("edit: no " + edit.anchor->str() + " in the scene");
    }
    auto satisfies = [&](int x, int y) {
      switch (edit.relation) {
        case Relation::LeftOf: return x < anchor->x;
        case Relation::RightOf: return x > anchor->x;
        case Relation::Behind: return y < anchor->y;
        case Relation::InFrontOf: return y > anchor->y;
        default: return false;
      }
    };
    long best = -1;
    for (int y = 0; y < scene.grid; ++y) {
      for (int x = 0; x < scene.grid; ++x) {
        if (!satisfies(x, y) || scene.occupied(x, y)) continue;
        long dx = x - anchor->x, dy = y - anchor->y;
        long d2 = dx * dx + dy * dy;
        if (best < 0 || d2 < best) {  // scan order is (row, column), so first hit wins ties
          best = d2;
          tx = x;
          ty = y;
        }
      }
    }
    if (best < 0) {
      throw EditError("edit: no free cell " + std::string(relation_name(edit.relation)) +
                      " the " + edit.anchor->str());
    }
  }

  Scene out = scene;
  out.placements.push_back({edit.target, tx, ty});
  return out;
}

bool edit_feasible(const Scene& scene, const ParsedEdit& edit) {
  if (scene.contains(edit.target)) return false;
  if (edit.relation == Relation::AtCenter) {
    return !scene.occupied(scene.grid / 2, scene.grid / 2);
  }
  if (!edit.anchor.has_value() || !scene.contains(*edit.anchor)) return false;
  try {
    apply_edit(scene, edit);
  } catch (const EditError&) {
    return false;
  }
  return true;
}

bool SceneGraphEdge::operator<(const SceneGraphEdge& o) const {
  return std::tuple(src.index(), dst.index(), static_cast<int>(relation)) <
         std::tuple(o.src.index(), o.dst.index(), static_cast<int>(o.relation));
}

SceneGraph scene_graph(const Scene& scene) {
  SceneGraph g;
  for (const auto& p : scene.placements) g.vertices.push_back(p.spec);
  for (const auto& a : scene.placements) {
    for (const auto& b : scene.placements) {
      if (a.spec == b.spec) continue;
      if (a.x < b.x) g.edges.push_back({a.spec, b.spec, Relation::LeftOf});
      if (a.x > b.x) g.edges.push_back({a.spec, b.spec, Relation::RightOf});
      if (a.y < b.y) g.edges.push_back({a.spec, b.spec, Relation::Behind});
      if (a.y > b.y) g.edges.push_back({a.spec, b.spec, Relation::InFrontOf});
    }
  }
  std::sort(g.edges.begin(), g.edges.end());
  return g;
}

}  // namespace sscr

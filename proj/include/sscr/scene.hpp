#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace sscr {

enum class Color { Gray, Red, Blue, Green, Brown, Purple, Cyan, Yellow };
enum class Shape3 { Cube, Sphere, Cylinder };

constexpr int kNumColors = 8;
constexpr int kNumShapes = 3;
constexpr int kNumObjectSpecs = kNumColors * kNumShapes;
constexpr int kGridSize = 8;

const std::array<const char*, kNumColors>& color_names();
const std::array<const char*, kNumShapes>& shape_names();
Color color_from_name(const std::string& name);
Shape3 shape_from_name(const std::string& name);

struct ObjectSpec {
  Color color;
  Shape3 shape;

  bool operator==(const ObjectSpec&) const = default;
  bool operator<(const ObjectSpec& o) const {
    return index() < o.index();
  }
  int index() const { return static_cast<int>(color) * kNumShapes + static_cast<int>(shape); }
  static ObjectSpec from_index(int i) {
    return {static_cast<Color>(i / kNumShapes), static_cast<Shape3>(i % kNumShapes)};
  }
  std::string str() const;  // "red cube"
};

struct Placement {
  ObjectSpec spec;
  int x = 0;  // column
  int y = 0;  // row

  bool operator==(const Placement&) const = default;
};

// Symbolic world state on a K x K grid. At most one object per cell and at
// most one object per spec. Placement order is insertion order; equality is
// order-insensitive (a scene is a set of placements).
struct Scene {
  int grid = kGridSize;
  std::vector<Placement> placements;

  bool operator==(const Scene& o) const;
  bool occupied(int x, int y) const;
  std::optional<Placement> find(const ObjectSpec& spec) const;
  bool contains(const ObjectSpec& spec) const { return find(spec).has_value(); }
  void check_valid() const;  // throws on invariant violation
};

enum class Relation { AtCenter, Behind, InFrontOf, LeftOf, RightOf };

const char* relation_name(Relation r);            // "at-the-center", ...
Relation relation_from_name(const std::string&);  // inverse

// Structured meaning of one instruction: place `target` relative to `anchor`
// (anchor absent exactly when relation is AtCenter).
struct ParsedEdit {
  ObjectSpec target;
  Relation relation = Relation::AtCenter;
  std::optional<ObjectSpec> anchor;

  bool operator==(const ParsedEdit&) const = default;
};

// Raised when an edit cannot be executed against a scene.
class EditError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Oracle editor. Adds exactly one object; prior placements are untouched.
// Relative placement: among free cells strictly satisfying the relation
// against the anchor, pick the one closest (Euclidean) to the anchor, ties
// broken by row then column. The rng seed is accepted for interface parity
// but the tie-break chain is already total, so it never fires.
Scene apply_edit(const Scene& scene, const ParsedEdit& edit, std::uint64_t rng_seed = 0);

// True iff apply_edit would succeed (no exception path for the common cases).
bool edit_feasible(const Scene& scene, const ParsedEdit& edit);

struct SceneGraphEdge {
  ObjectSpec src;
  ObjectSpec dst;
  Relation relation;  // never AtCenter

  bool operator==(const SceneGraphEdge&) const = default;
  bool operator<(const SceneGraphEdge& o) const;
};

struct SceneGraph {
  std::vector<ObjectSpec> vertices;
  std::vector<SceneGraphEdge> edges;  // sorted, duplicate-free
};

// Complete directed relation edges: for every ordered pair with differing x
// there is a left-of/right-of edge, and likewise behind/in-front-of for y.
SceneGraph scene_graph(const Scene& scene);

}  // namespace sscr

#pragma once

#include "tabletop/bench.hpp"
#include "tabletop/world.hpp"

namespace fixtures {

using namespace tabletop;

inline ObjectNode object(ObjectId id, Category name, Color color, double x, double y, double mass_g,
                         Size size = Size::Large, Material material = Material::Plastic) {
  ObjectNode o;
  o.id = id;
  o.visual = VisualAttributes{name, color, material, size, Shape::Cylindrical};
  o.pose = Pose{x, y, 0.0, 0.0};
  o.bbox = BBox{0.08, 0.08, 0.10};
  o.mass.true_value = mass_g;
  o.stiffness.true_value = 5.0;
  return o;
}

/// Four well separated objects: two red mugs, a blue can and a green box.
inline SceneSpec four_objects() {
  SceneSpec s;
  s.id = 0;
  s.objects = {
      object(0, Category::Mug, Color::Red, 0.2, 0.15, 120.0),
      object(1, Category::Mug, Color::Red, 0.2, 0.45, 300.0, Size::Small),
      object(2, Category::Can, Color::Blue, 0.8, 0.15, 80.0),
      object(3, Category::Box, Color::Green, 0.8, 0.45, 450.0),
  };
  return s;
}

inline SceneGraph measured_truth(const SceneSpec& spec) {
  SceneGraph g = truth_graph(init_world(spec));
  for (auto& o : g.objects) {
    o.mass.measured_value = o.mass.true_value;
    o.stiffness.measured_value = o.stiffness.true_value;
  }
  return g;
}

}  // namespace fixtures

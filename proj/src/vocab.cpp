#include "tabletop/vocab.hpp"

namespace tabletop {

std::string_view to_string(Category v) {
  switch (v) {
    case Category::Mug: return "mug";
    case Category::Can: return "can";
    case Category::Plate: return "plate";
    case Category::Bowl: return "bowl";
    case Category::Box: return "box";
  }
  return "?";
}

std::string_view to_string(Color v) {
  switch (v) {
    case Color::Red: return "red";
    case Color::Yellow: return "yellow";
    case Color::Blue: return "blue";
    case Color::Green: return "green";
    case Color::White: return "white";
    case Color::Black: return "black";
    case Color::Gray: return "gray";
    case Color::Brown: return "brown";
  }
  return "?";
}

std::string_view to_string(Material v) {
  switch (v) {
    case Material::Metal: return "metal";
    case Material::Ceramic: return "ceramic";
    case Material::Plastic: return "plastic";
    case Material::Glass: return "glass";
    case Material::Rubber: return "rubber";
  }
  return "?";
}

std::string_view to_string(Size v) { return v == Size::Small ? "small" : "large"; }

std::string_view to_string(Shape v) {
  switch (v) {
    case Shape::Cylindrical: return "cylindrical";
    case Shape::Boxy: return "boxy";
    case Shape::Flat: return "flat";
    case Shape::Irregular: return "irregular";
  }
  return "?";
}

std::string_view to_string(Region v) { return v == Region::Left ? "left" : "right"; }

std::string_view to_string(WeightSpec v) { return v == WeightSpec::Lightest ? "lightest" : "heaviest"; }

std::string plural(Category v) {
  if (v == Category::Box) return "boxes";
  return std::string(to_string(v)) + "s";
}

namespace {

template <typename Enum, std::size_t N>
std::optional<Enum> lookup(const std::array<Enum, N>& values, std::string_view word) {
  for (Enum v : values)
    if (to_string(v) == word) return v;
  return std::nullopt;
}

}  // namespace

template <>
std::optional<Category> enum_from_string<Category>(std::string_view word) {
  return lookup(kCategories, word);
}
template <>
std::optional<Color> enum_from_string<Color>(std::string_view word) {
  return lookup(kColors, word);
}
template <>
std::optional<Material> enum_from_string<Material>(std::string_view word) {
  return lookup(kMaterials, word);
}
template <>
std::optional<Size> enum_from_string<Size>(std::string_view word) {
  return lookup(kSizes, word);
}
template <>
std::optional<Shape> enum_from_string<Shape>(std::string_view word) {
  return lookup(kShapes, word);
}
template <>
std::optional<Region> enum_from_string<Region>(std::string_view word) {
  return lookup(std::array{Region::Left, Region::Right}, word);
}
template <>
std::optional<WeightSpec> enum_from_string<WeightSpec>(std::string_view word) {
  return lookup(std::array{WeightSpec::Lightest, WeightSpec::Heaviest}, word);
}

}  // namespace tabletop

#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace tabletop {

// Closed-world attribute vocabulary. Every enum has a fixed string form used
// in instruction text, JSON files and the wire protocol.

enum class Category { Mug, Can, Plate, Bowl, Box };
enum class Color { Red, Yellow, Blue, Green, White, Black, Gray, Brown };
enum class Material { Metal, Ceramic, Plastic, Glass, Rubber };
enum class Size { Small, Large };
enum class Shape { Cylindrical, Boxy, Flat, Irregular };
enum class Region { Left, Right };
enum class WeightSpec { Lightest, Heaviest };

inline constexpr std::array<Category, 5> kCategories{Category::Mug, Category::Can, Category::Plate,
                                                     Category::Bowl, Category::Box};
inline constexpr std::array<Color, 8> kColors{Color::Red,   Color::Yellow, Color::Blue, Color::Green,
                                              Color::White, Color::Black,  Color::Gray, Color::Brown};
inline constexpr std::array<Material, 5> kMaterials{Material::Metal, Material::Ceramic, Material::Plastic,
                                                    Material::Glass, Material::Rubber};
inline constexpr std::array<Size, 2> kSizes{Size::Small, Size::Large};
inline constexpr std::array<Shape, 4> kShapes{Shape::Cylindrical, Shape::Boxy, Shape::Flat, Shape::Irregular};

std::string_view to_string(Category v);
std::string_view to_string(Color v);
std::string_view to_string(Material v);
std::string_view to_string(Size v);
std::string_view to_string(Shape v);
std::string_view to_string(Region v);
std::string_view to_string(WeightSpec v);

std::string plural(Category v);

/// Parses a vocabulary word; returns nullopt when the word is not in the enum.
template <typename Enum>
std::optional<Enum> enum_from_string(std::string_view word);

template <> std::optional<Category> enum_from_string<Category>(std::string_view);
template <> std::optional<Color> enum_from_string<Color>(std::string_view);
template <> std::optional<Material> enum_from_string<Material>(std::string_view);
template <> std::optional<Size> enum_from_string<Size>(std::string_view);
template <> std::optional<Shape> enum_from_string<Shape>(std::string_view);
template <> std::optional<Region> enum_from_string<Region>(std::string_view);
template <> std::optional<WeightSpec> enum_from_string<WeightSpec>(std::string_view);

/// Like enum_from_string but throws std::invalid_argument on unknown words.
template <typename Enum>
Enum enum_parse(std::string_view word) {
  if (auto v = enum_from_string<Enum>(word)) return *v;
  throw std::invalid_argument("unknown vocabulary word: " + std::string(word));
}

}  // namespace tabletop

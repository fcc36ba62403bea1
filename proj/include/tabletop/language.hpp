#pragma once

#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "tabletop/program.hpp"
#include "tabletop/scene.hpp"

namespace tabletop {

inline constexpr int kTemplateCount = 10;
inline constexpr int kMinWords = 5;
inline constexpr int kMaxWords = 16;

/// Object description: any subset of (size, colour, material, name). An empty
/// `name` is rendered as the wildcard noun "object".
struct Descriptor {
  std::optional<Size> size;
  std::optional<Color> color;
  std::optional<Material> material;
  std::optional<Category> name;

  bool empty() const { return !size && !color && !material && !name; }
  bool matches(const VisualAttributes& v) const;
  int word_count() const;
  bool operator==(const Descriptor&) const = default;
};

std::string render(const Descriptor& d, bool plural);

/// Every non-empty descriptor that `v` satisfies (15 of them).
std::vector<Descriptor> descriptors_of(const VisualAttributes& v);

struct Instruction {
  std::string text;
  int template_id = 1;
  std::vector<Descriptor> objects;  // OBJ1..OBJ3
  std::optional<Region> region;     // TP1
  std::optional<WeightSpec> weight; // WS1

  bool operator==(const Instruction&) const = default;
};

/// Ground truth of a task computed from simulator-private values.
struct GroundTruthGoal {
  bool is_query = false;
  std::vector<ObjectId> targets;  // ordered as the template binds them
  std::optional<Region> region;
  std::optional<Answer> answer;

  bool operator==(const GroundTruthGoal&) const = default;
};

struct GeneratedTask {
  Instruction instruction;
  SymbolicProgram program;
  GroundTruthGoal goal;
};

/// Surface text for a fully bound instruction (one canonical phrasing per
/// template).
std::string realize(const Instruction& slots);

/// The program a bound template compiles to.
SymbolicProgram build_program(const Instruction& slots);

/// Word count of an instruction text (whitespace separated tokens).
int word_count(std::string_view text);

/// Samples slot bindings for `template_id` that satisfy its cardinality
/// constraints on `truth` (a graph whose physical properties carry true
/// values). Returns nullopt when the template is infeasible on this scene.
std::optional<GeneratedTask> generate_instruction(const SceneGraph& truth, int template_id, std::mt19937_64& rng);

/// Ground-truth goal of a program on a truth graph, or nullopt when the
/// program has no well-defined, not-yet-satisfied outcome there.
std::optional<GroundTruthGoal> ground_truth_goal(const SymbolicProgram& program, int template_id,
                                                 const SceneGraph& truth);

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses instruction text back into template slots. Throws ParseError on an
/// unknown word, no matching template or more than one match.
Instruction parse_slots(std::string_view text);

/// Compiles instruction text into its symbolic program.
SymbolicProgram parse_instruction(std::string_view text);

/// Row label used in reports for each template (1-based).
std::string_view template_label(int template_id);

}  // namespace tabletop

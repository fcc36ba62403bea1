#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "tabletop/scene.hpp"

namespace tabletop {

enum class Op {
  Scene,
  FilterSize,
  FilterColor,
  FilterMaterial,
  FilterName,
  FilterRegion,
  FilterWeight,
  Unique,
  QueryWeight,
  QueryWeightAll,
  GoalPickUp,
  GoalMoveRegion,
  GoalRemoveRegion,
  GoalStack,
  GoalOrderWeight,
};

std::string_view to_string(Op op);
std::optional<Op> op_from_string(std::string_view name);

bool is_terminal_op(Op op);

/// One node of a CLEVR-IEP style program: `inputs` index earlier functions.
struct ProgramFn {
  Op op = Op::Scene;
  std::optional<std::string> arg;
  std::vector<int> inputs;

  bool operator==(const ProgramFn&) const = default;
};

struct SymbolicProgram {
  std::vector<ProgramFn> functions;

  bool operator==(const SymbolicProgram&) const = default;
};

/// Checks the structural invariants (DAG over earlier indices, argument
/// vocabulary, exactly one terminal function which is last). Returns an
/// error description, or nullopt when the program is well formed.
std::optional<std::string> validate(const SymbolicProgram& program);

/// Human-readable one-liner, e.g. "scene, filter_color[red], unique, query_weight".
std::string describe(const SymbolicProgram& program);

enum class SubgoalKind { MeasureWeight, MeasureStiffness, PickUp, MoveToRegion, RemoveFromRegion, StackOn, PutDown };

std::string_view to_string(SubgoalKind kind);
std::optional<SubgoalKind> subgoal_kind_from_string(std::string_view name);

struct Subgoal {
  SubgoalKind kind = SubgoalKind::MeasureWeight;
  ObjectId target = kNoObject;
  ObjectId secondary_object = kNoObject;  // StackOn base
  std::optional<Region> region;           // MoveToRegion / RemoveFromRegion

  bool operator==(const Subgoal&) const = default;
};

std::string describe(const Subgoal& subgoal);

/// Result of a query program. Single answers hold one id/value; list answers
/// are ordered by object id.
struct Answer {
  std::vector<ObjectId> ids;
  std::vector<double> values;
  bool is_list = false;

  bool operator==(const Answer&) const = default;
};

struct NeedSubgoal {
  Subgoal subgoal;
  bool operator==(const NeedSubgoal&) const = default;
};

struct GoalSatisfied {
  bool operator==(const GoalSatisfied&) const = default;
};

struct ProgramError {
  std::string reason;
  bool operator==(const ProgramError&) const = default;
};

using ExecutionOutcome = std::variant<Answer, NeedSubgoal, GoalSatisfied, ProgramError>;

std::string describe(const ExecutionOutcome& outcome);

Region region_of(double x);

/// Evaluates `program` on `graph` without modifying it. Blocks on the
/// lowest-id unmeasured object whenever a weight comparison or query needs
/// it, otherwise checks goal predicates and names the first unsatisfied step.
ExecutionOutcome execute(const SymbolicProgram& program, const SceneGraph& graph);

bool is_complete(const SymbolicProgram& program, const SceneGraph& graph);

/// For every `scene` branch, the id set left after its chain of attribute
/// filters (size/colour/material/name). Used to compare the referents a
/// perceived graph resolves against the ground truth.
std::vector<std::vector<ObjectId>> resolve_referents(const SymbolicProgram& program, const SceneGraph& graph);

}  // namespace tabletop

#include "tabletop/program.hpp"

#include <algorithm>
#include <array>
#include <sstream>
#include <utility>

namespace tabletop {

namespace {

constexpr std::array<std::pair<Op, std::string_view>, 15> kOpNames{{
    {Op::Scene, "scene"},
    {Op::FilterSize, "filter_size"},
    {Op::FilterColor, "filter_color"},
    {Op::FilterMaterial, "filter_material"},
    {Op::FilterName, "filter_name"},
    {Op::FilterRegion, "filter_region"},
    {Op::FilterWeight, "filter_weight"},
    {Op::Unique, "unique"},
    {Op::QueryWeight, "query_weight"},
    {Op::QueryWeightAll, "query_weight_all"},
    {Op::GoalPickUp, "goal_pick_up"},
    {Op::GoalMoveRegion, "goal_move_region"},
    {Op::GoalRemoveRegion, "goal_remove_region"},
    {Op::GoalStack, "goal_stack"},
    {Op::GoalOrderWeight, "goal_order_weight"},
}};

constexpr std::array<std::pair<SubgoalKind, std::string_view>, 7> kSubgoalNames{{
    {SubgoalKind::MeasureWeight, "MeasureWeight"},
    {SubgoalKind::MeasureStiffness, "MeasureStiffness"},
    {SubgoalKind::PickUp, "PickUp"},
    {SubgoalKind::MoveToRegion, "MoveToRegion"},
    {SubgoalKind::RemoveFromRegion, "RemoveFromRegion"},
    {SubgoalKind::StackOn, "StackOn"},
    {SubgoalKind::PutDown, "PutDown"},
}};

bool is_goal_op(Op op) {
  return op == Op::GoalPickUp || op == Op::GoalMoveRegion || op == Op::GoalRemoveRegion || op == Op::GoalStack ||
         op == Op::GoalOrderWeight;
}

bool arg_valid(Op op, const std::optional<std::string>& arg) {
  switch (op) {
    case Op::FilterSize: return arg && enum_from_string<Size>(*arg).has_value();
    case Op::FilterColor: return arg && enum_from_string<Color>(*arg).has_value();
    case Op::FilterMaterial: return arg && enum_from_string<Material>(*arg).has_value();
    case Op::FilterName: return arg && enum_from_string<Category>(*arg).has_value();
    case Op::FilterRegion:
    case Op::GoalMoveRegion:
    case Op::GoalRemoveRegion: return arg && enum_from_string<Region>(*arg).has_value();
    case Op::FilterWeight: return arg && enum_from_string<WeightSpec>(*arg).has_value();
    default: return !arg.has_value();
  }
}

}  // namespace

std::string_view to_string(Op op) {
  for (const auto& [o, name] : kOpNames)
    if (o == op) return name;
  return "?";
}

std::optional<Op> op_from_string(std::string_view name) {
  for (const auto& [o, n] : kOpNames)
    if (n == name) return o;
  return std::nullopt;
}

bool is_terminal_op(Op op) { return op == Op::QueryWeight || op == Op::QueryWeightAll || is_goal_op(op); }

std::string_view to_string(SubgoalKind kind) {
  for (const auto& [k, name] : kSubgoalNames)
    if (k == kind) return name;
  return "?";
}

std::optional<SubgoalKind> subgoal_kind_from_string(std::string_view name) {
  for (const auto& [k, n] : kSubgoalNames)
    if (n == name) return k;
  return std::nullopt;
}

std::optional<std::string> validate(const SymbolicProgram& program) {
  const auto& fns = program.functions;
  if (fns.empty()) return "empty program";
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const auto& fn = fns[i];
    for (int in : fn.inputs)
      if (in < 0 || static_cast<std::size_t>(in) >= i) return "function " + std::to_string(i) + " has a forward input";
    if (!arg_valid(fn.op, fn.arg)) return "function " + std::to_string(i) + " has an invalid argument";
    const std::size_t arity = fn.inputs.size();
    const bool arity_ok = fn.op == Op::Scene       ? arity == 0
                          : fn.op == Op::GoalStack ? (arity == 2 || arity == 3)
                                                   : arity == 1;
    if (!arity_ok) return "function " + std::to_string(i) + " has wrong arity";
    // Every function except the last must feed some later function.
    if (i + 1 < fns.size()) {
      bool consumed = false;
      for (std::size_t j = i + 1; j < fns.size() && !consumed; ++j)
        consumed = std::find(fns[j].inputs.begin(), fns[j].inputs.end(), static_cast<int>(i)) != fns[j].inputs.end();
      if (!consumed) return "function " + std::to_string(i) + " is a second terminal";
    }
  }
  if (!is_terminal_op(fns.back().op)) return "last function is not a query or goal";
  return std::nullopt;
}

std::string describe(const SymbolicProgram& program) {
  std::ostringstream out;
  for (std::size_t i = 0; i < program.functions.size(); ++i) {
    const auto& fn = program.functions[i];
    if (i) out << ", ";
    out << to_string(fn.op);
    if (fn.arg) out << '[' << *fn.arg << ']';
  }
  return out.str();
}

std::string describe(const Subgoal& subgoal) {
  std::ostringstream out;
  out << to_string(subgoal.kind) << "(o" << subgoal.target;
  if (subgoal.secondary_object != kNoObject) out << ", o" << subgoal.secondary_object;
  if (subgoal.region) out << ", " << to_string(*subgoal.region);
  out << ')';
  return out.str();
}

std::string describe(const ExecutionOutcome& outcome) {
  struct Visitor {
    std::string operator()(const Answer& a) const {
      std::ostringstream out;
      out << "Answer(";
      for (std::size_t i = 0; i < a.values.size(); ++i) out << (i ? ", " : "") << "o" << a.ids[i] << "=" << a.values[i];
      out << ')';
      return out.str();
    }
    std::string operator()(const NeedSubgoal& n) const { return "NeedSubgoal(" + describe(n.subgoal) + ")"; }
    std::string operator()(const GoalSatisfied&) const { return "GoalSatisfied"; }
    std::string operator()(const ProgramError& e) const { return "ProgramError(" + e.reason + ")"; }
  };
  return std::visit(Visitor{}, outcome);
}

Region region_of(double x) { return x < 0.5 ? Region::Left : Region::Right; }

namespace {

using IdSet = std::vector<ObjectId>;  // sorted ascending

/// Goal evaluation state: empty `pending` means the predicate holds.
struct GoalState {
  std::optional<Subgoal> pending;
};

using Value = std::variant<IdSet, Answer, GoalState>;

/// Stops evaluation with a final outcome (blocked on a subgoal or an error).
struct Halt {
  ExecutionOutcome outcome;
};

[[noreturn]] void fail(std::string reason) { throw Halt{ProgramError{std::move(reason)}}; }

class Evaluator {
 public:
  Evaluator(const SymbolicProgram& program, const SceneGraph& graph) : program_(program), graph_(graph) {}

  Value run() {
    values_.clear();
    for (const auto& fn : program_.functions) values_.push_back(apply(fn));
    return values_.back();
  }

  const std::vector<Value>& values() const { return values_; }

 private:
  const ObjectNode& node(ObjectId id) const { return *graph_.find(id); }

  bool held(ObjectId id) const { return graph_.ee.held == id; }

  const IdSet& set_input(const ProgramFn& fn, std::size_t k) const {
    const Value& v = values_.at(static_cast<std::size_t>(fn.inputs.at(k)));
    if (const auto* s = std::get_if<IdSet>(&v)) return *s;
    fail("type mismatch: " + std::string(to_string(fn.op)) + " expects an object set");
  }

  ObjectId single_input(const ProgramFn& fn, std::size_t k) const {
    const IdSet& s = set_input(fn, k);
    if (s.size() != 1) fail(std::string(to_string(fn.op)) + " expects exactly one object");
    return s.front();
  }

  template <typename Pred>
  IdSet filter(const IdSet& in, Pred pred) const {
    IdSet out;
    for (ObjectId id : in)
      if (pred(node(id))) out.push_back(id);
    return out;
  }

  void require_measured(const IdSet& ids) const {
    for (ObjectId id : ids)  // ascending, so the first miss is the lowest id
      if (!node(id).mass.measured()) throw Halt{NeedSubgoal{Subgoal{SubgoalKind::MeasureWeight, id, kNoObject, {}}}};
  }

  double mass(ObjectId id) const { return *node(id).mass.measured_value; }

  Value apply(const ProgramFn& fn) {
    switch (fn.op) {
      case Op::Scene: {
        IdSet all;
        for (const auto& o : graph_.objects) all.push_back(o.id);
        std::sort(all.begin(), all.end());
        return all;
      }
      case Op::FilterSize: {
        const Size v = enum_parse<Size>(*fn.arg);
        return filter(set_input(fn, 0), [&](const ObjectNode& o) { return o.visual.size == v; });
      }
      case Op::FilterColor: {
        const Color v = enum_parse<Color>(*fn.arg);
        return filter(set_input(fn, 0), [&](const ObjectNode& o) { return o.visual.color == v; });
      }
      case Op::FilterMaterial: {
        const Material v = enum_parse<Material>(*fn.arg);
        return filter(set_input(fn, 0), [&](const ObjectNode& o) { return o.visual.material == v; });
      }
      case Op::FilterName: {
        const Category v = enum_parse<Category>(*fn.arg);
        return filter(set_input(fn, 0), [&](const ObjectNode& o) { return o.visual.name == v; });
      }
      case Op::FilterRegion: {
        // An object in the gripper has not been placed anywhere yet.
        const Region r = enum_parse<Region>(*fn.arg);
        return filter(set_input(fn, 0),
                      [&](const ObjectNode& o) { return held(o.id) || region_of(o.pose.x) == r; });
      }
      case Op::FilterWeight: {
        const IdSet& in = set_input(fn, 0);
        if (in.empty()) fail("filter_weight on an empty set");
        require_measured(in);
        const bool lightest = enum_parse<WeightSpec>(*fn.arg) == WeightSpec::Lightest;
        ObjectId best = in.front();
        for (ObjectId id : in) {
          const bool better = lightest ? mass(id) < mass(best) : mass(id) > mass(best);
          if (better) best = id;
        }
        return IdSet{best};
      }
      case Op::Unique: {
        const IdSet& in = set_input(fn, 0);
        if (in.empty()) fail("empty referent");
        if (in.size() != 1) fail("non-unique referent");
        return in;
      }
      case Op::QueryWeight: {
        const ObjectId id = single_input(fn, 0);
        require_measured({id});
        return Answer{{id}, {mass(id)}, false};
      }
      case Op::QueryWeightAll: {
        const IdSet& in = set_input(fn, 0);
        if (in.empty()) fail("empty referent");
        require_measured(in);
        Answer a;
        a.is_list = true;
        for (ObjectId id : in) {
          a.ids.push_back(id);
          a.values.push_back(mass(id));
        }
        return a;
      }
      case Op::GoalPickUp: {
        const ObjectId id = single_input(fn, 0);
        const auto& r = node(id).relations;
        if (r.in_gripper && r.raised) return GoalState{};
        return GoalState{Subgoal{SubgoalKind::PickUp, id, kNoObject, {}}};
      }
      case Op::GoalMoveRegion: {
        const ObjectId id = single_input(fn, 0);
        const Region r = enum_parse<Region>(*fn.arg);
        if (!held(id) && region_of(node(id).pose.x) == r) return GoalState{};
        return GoalState{Subgoal{SubgoalKind::MoveToRegion, id, kNoObject, r}};
      }
      case Op::GoalRemoveRegion: {
        const Region r = enum_parse<Region>(*fn.arg);
        for (ObjectId id : set_input(fn, 0))
          if (held(id) || region_of(node(id).pose.x) == r)
            return GoalState{Subgoal{SubgoalKind::RemoveFromRegion, id, kNoObject, r}};
        return GoalState{};
      }
      case Op::GoalStack: {
        const ObjectId top = single_input(fn, 0);
        const ObjectId base = single_input(fn, 1);
        if (top == base) fail("cannot stack an object on itself");
        if (fn.inputs.size() == 3) {
          const Value& prior = values_.at(static_cast<std::size_t>(fn.inputs[2]));
          const auto* g = std::get_if<GoalState>(&prior);
          if (!g) fail("type mismatch: goal_stack expects a goal as third input");
          if (g->pending) return *g;
        }
        return stack_step(top, base);
      }
      case Op::GoalOrderWeight: {
        const IdSet& in = set_input(fn, 0);
        if (in.empty()) fail("empty referent");
        require_measured(in);
        IdSet order = in;  // heaviest first; ties keep the lower id lower in the stack
        std::stable_sort(order.begin(), order.end(), [&](ObjectId a, ObjectId b) { return mass(a) > mass(b); });
        if (held(order.front())) return GoalState{Subgoal{SubgoalKind::PutDown, order.front(), kNoObject, {}}};
        for (std::size_t i = 1; i < order.size(); ++i) {
          GoalState g = stack_step(order[i], order[i - 1]);
          if (g.pending) return g;
        }
        return GoalState{};
      }
    }
    fail("unknown op");
  }

  GoalState stack_step(ObjectId top, ObjectId base) const {
    if (!held(top) && node(top).supported_by == base) return GoalState{};
    if (held(base)) return GoalState{Subgoal{SubgoalKind::PutDown, base, kNoObject, {}}};
    return GoalState{Subgoal{SubgoalKind::StackOn, top, base, {}}};
  }

  const SymbolicProgram& program_;
  const SceneGraph& graph_;
  std::vector<Value> values_;
};

}  // namespace

ExecutionOutcome execute(const SymbolicProgram& program, const SceneGraph& graph) {
  if (auto err = validate(program)) return ProgramError{*err};
  Evaluator eval(program, graph);
  try {
    Value result = eval.run();
    if (auto* a = std::get_if<Answer>(&result)) return *a;
    if (auto* g = std::get_if<GoalState>(&result)) {
      if (g->pending) return NeedSubgoal{*g->pending};
      return GoalSatisfied{};
    }
    return ProgramError{"program produced no answer or goal"};
  } catch (const Halt& h) {
    return h.outcome;
  }
}

bool is_complete(const SymbolicProgram& program, const SceneGraph& graph) {
  const auto outcome = execute(program, graph);
  return std::holds_alternative<Answer>(outcome) || std::holds_alternative<GoalSatisfied>(outcome);
}

std::vector<std::vector<ObjectId>> resolve_referents(const SymbolicProgram& program, const SceneGraph& graph) {
  std::vector<std::vector<ObjectId>> out;
  const auto& fns = program.functions;
  for (std::size_t i = 0; i < fns.size(); ++i) {
    if (fns[i].op != Op::Scene) continue;
    // Follow the linear chain of attribute filters that consumes this scene.
    IdSet current;
    for (const auto& o : graph.objects) current.push_back(o.id);
    std::sort(current.begin(), current.end());
    std::size_t at = i;
    for (std::size_t j = i + 1; j < fns.size(); ++j) {
      const auto& fn = fns[j];
      const bool attribute_filter = fn.op == Op::FilterSize || fn.op == Op::FilterColor ||
                                    fn.op == Op::FilterMaterial || fn.op == Op::FilterName;
      if (!attribute_filter || fn.inputs.size() != 1 || fn.inputs[0] != static_cast<int>(at)) continue;
      IdSet next;
      for (ObjectId id : current) {
        const auto& v = graph.find(id)->visual;
        bool keep = false;
        if (!fn.arg) break;
        switch (fn.op) {
          case Op::FilterSize: keep = enum_from_string<Size>(*fn.arg) == v.size; break;
          case Op::FilterColor: keep = enum_from_string<Color>(*fn.arg) == v.color; break;
          case Op::FilterMaterial: keep = enum_from_string<Material>(*fn.arg) == v.material; break;
          default: keep = enum_from_string<Category>(*fn.arg) == v.name; break;
        }
        if (keep) next.push_back(id);
      }
      current = std::move(next);
      at = j;
    }
    out.push_back(std::move(current));
  }
  return out;
}

}  // namespace tabletop

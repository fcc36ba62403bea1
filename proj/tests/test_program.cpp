#include <doctest.h>

#include <algorithm>
#include <random>

#include "fixtures.hpp"
#include "tabletop/language.hpp"

using namespace tabletop;

namespace {

std::vector<ObjectId> matching(const SceneGraph& g, const Descriptor& d) {
  std::vector<ObjectId> out;
  for (const auto& o : g.objects)
    if (d.matches(o.visual)) out.push_back(o.id);
  std::sort(out.begin(), out.end());
  return out;
}

std::optional<ObjectId> first_unmeasured(const SceneGraph& g, const std::vector<ObjectId>& ids) {
  for (ObjectId id : ids)
    if (!g.find(id)->mass.measured()) return id;
  return std::nullopt;
}

ExecutionOutcome need(SubgoalKind kind, ObjectId target, ObjectId other = kNoObject,
                      std::optional<Region> region = std::nullopt) {
  return NeedSubgoal{Subgoal{kind, target, other, region}};
}

// Reference semantics written directly from the template definitions, for
// a graph where nothing is held.
ExecutionOutcome oracle(const Instruction& ins, const SceneGraph& g) {
  const auto a = matching(g, ins.objects.at(0));
  auto by_weight = [&](const std::vector<ObjectId>& ids) {
    std::vector<ObjectId> v = ids;
    std::sort(v.begin(), v.end(), [&](ObjectId x, ObjectId y) {
      return *g.find(x)->mass.measured_value > *g.find(y)->mass.measured_value;
    });
    return v;
  };
  auto pick = [&](const std::vector<ObjectId>& ids) {
    const auto sorted = by_weight(ids);
    return *ins.weight == WeightSpec::Heaviest ? sorted.front() : sorted.back();
  };
  auto region = [&](ObjectId id) { return g.find(id)->pose.x < 0.5 ? Region::Left : Region::Right; };
  auto on = [&](ObjectId top, ObjectId base) { return g.find(top)->supported_by == base; };

  switch (ins.template_id) {
    case 1:
      if (auto m = first_unmeasured(g, a)) return need(SubgoalKind::MeasureWeight, *m);
      return Answer{a, {*g.find(a[0])->mass.measured_value}, false};
    case 2: {
      if (auto m = first_unmeasured(g, a)) return need(SubgoalKind::MeasureWeight, *m);
      Answer ans{a, {}, true};
      for (ObjectId id : a) ans.values.push_back(*g.find(id)->mass.measured_value);
      return ans;
    }
    case 3:
      if (auto m = first_unmeasured(g, a)) return need(SubgoalKind::MeasureWeight, *m);
      return need(SubgoalKind::PickUp, pick(a));
    case 4:
      if (region(a[0]) == *ins.region) return GoalSatisfied{};
      return need(SubgoalKind::MoveToRegion, a[0], kNoObject, ins.region);
    case 5:
      for (ObjectId id : a)
        if (region(id) == *ins.region) return need(SubgoalKind::RemoveFromRegion, id, kNoObject, ins.region);
      return GoalSatisfied{};
    case 6: {
      if (auto m = first_unmeasured(g, a)) return need(SubgoalKind::MeasureWeight, *m);
      const ObjectId t = pick(a);
      if (region(t) == *ins.region) return GoalSatisfied{};
      return need(SubgoalKind::MoveToRegion, t, kNoObject, ins.region);
    }
    case 7: {
      const ObjectId top = a[0], base = matching(g, ins.objects.at(1))[0];
      return on(top, base) ? ExecutionOutcome{GoalSatisfied{}} : need(SubgoalKind::StackOn, top, base);
    }
    case 8: {
      if (auto m = first_unmeasured(g, a)) return need(SubgoalKind::MeasureWeight, *m);
      const ObjectId top = pick(a), base = matching(g, ins.objects.at(1))[0];
      return on(top, base) ? ExecutionOutcome{GoalSatisfied{}} : need(SubgoalKind::StackOn, top, base);
    }
    case 9: {
      const ObjectId top = a[0], mid = matching(g, ins.objects.at(1))[0], base = matching(g, ins.objects.at(2))[0];
      if (!on(mid, base)) return need(SubgoalKind::StackOn, mid, base);
      if (!on(top, mid)) return need(SubgoalKind::StackOn, top, mid);
      return GoalSatisfied{};
    }
    case 10: {
      if (auto m = first_unmeasured(g, a)) return need(SubgoalKind::MeasureWeight, *m);
      const auto order = by_weight(a);
      for (std::size_t i = 1; i < order.size(); ++i)
        if (!on(order[i], order[i - 1])) return need(SubgoalKind::StackOn, order[i], order[i - 1]);
      return GoalSatisfied{};
    }
  }
  return ProgramError{"bad template"};
}

}  // namespace

TEST_CASE("executor agrees with a brute-force oracle on generated tasks") {
  std::mt19937_64 rng(11);
  std::bernoulli_distribution coin(0.5);
  int compared = 0;
  for (const SceneSpec& spec : generate_scenes(100, 11)) {
    const SceneGraph truth = truth_graph(init_world(spec));
    for (int t = 1; t <= kTemplateCount; ++t) {
      auto task = generate_instruction(truth, t, rng);
      if (!task) continue;
      for (int trial = 0; trial < 3; ++trial) {
        SceneGraph g = truth;
        for (auto& o : g.objects) {
          if (trial == 2 || coin(rng)) o.mass.measured_value = o.mass.true_value;
          o.mass.true_value = 0.0;
        }
        CAPTURE(task->instruction.text);
        CHECK(execute(task->program, g) == oracle(task->instruction, g));
        ++compared;
      }
    }
  }
  CHECK(compared > 900);
}

TEST_CASE("stack subgoals follow the support relation") {
  SceneSpec spec = fixtures::four_objects();
  SceneGraph g = fixtures::measured_truth(spec);
  const auto program = parse_instruction("Stack the blue can on top of the green box.");
  CHECK(execute(program, g) == ExecutionOutcome{NeedSubgoal{Subgoal{SubgoalKind::StackOn, 2, 3, {}}}});

  g.find(2)->supported_by = 3;
  CHECK(execute(program, g) == ExecutionOutcome{GoalSatisfied{}});

  g.ee.held = 2;
  CHECK(execute(program, g) == ExecutionOutcome{NeedSubgoal{Subgoal{SubgoalKind::StackOn, 2, 3, {}}}});
}

TEST_CASE("a held base is put down first") {
  SceneGraph g = fixtures::measured_truth(fixtures::four_objects());
  g.ee.held = 3;
  const auto program = parse_instruction("Stack the blue can on top of the green box.");
  CHECK(execute(program, g) == ExecutionOutcome{NeedSubgoal{Subgoal{SubgoalKind::PutDown, 3, kNoObject, {}}}});
}

TEST_CASE("a held object is in no region") {
  SceneGraph g = fixtures::measured_truth(fixtures::four_objects());
  g.ee.held = 2;
  const auto move = parse_instruction("Place the blue can on the right part of the table.");
  CHECK(std::holds_alternative<NeedSubgoal>(execute(move, g)));
  g.ee.held = kNoObject;
  CHECK(execute(move, g) == ExecutionOutcome{GoalSatisfied{}});
}

TEST_CASE("ambiguous and empty referents are program errors") {
  const SceneGraph g = fixtures::measured_truth(fixtures::four_objects());
  CHECK(std::holds_alternative<ProgramError>(execute(parse_instruction("Measure the weight of the red mug."), g)));
  CHECK(std::holds_alternative<ProgramError>(execute(parse_instruction("Measure the weight of the plate."), g)));
  CHECK(std::holds_alternative<ProgramError>(execute(parse_instruction("Pick up the heaviest of all plates."), g)));
  CHECK(std::holds_alternative<ProgramError>(
      execute(parse_instruction("Stack the small mug on top of the small object."), g)));
}

TEST_CASE("validate rejects malformed programs") {
  const auto ok = parse_instruction("Measure the weight of the small box.");
  CHECK_FALSE(validate(ok));

  CHECK(validate(SymbolicProgram{}));

  auto forward = ok;
  forward.functions[1].inputs = {3};
  CHECK(validate(forward));

  auto bad_arg = ok;
  bad_arg.functions[1].arg = "medium";
  CHECK(validate(bad_arg));

  auto missing_arg = ok;
  missing_arg.functions[1].arg.reset();
  CHECK(validate(missing_arg));

  auto no_terminal = ok;
  no_terminal.functions.pop_back();
  CHECK(validate(no_terminal));

  auto arity = ok;
  arity.functions.back().inputs = {1, 2};
  CHECK(validate(arity));

  auto dangling = ok;
  dangling.functions.insert(dangling.functions.begin() + 1, ProgramFn{Op::Scene, std::nullopt, {}});
  for (std::size_t i = 2; i < dangling.functions.size(); ++i)
    for (int& in : dangling.functions[i].inputs) in = in == 0 ? 0 : in + 1;
  CHECK(validate(dangling));

  CHECK(std::holds_alternative<ProgramError>(execute(arity, SceneGraph{})));
}

TEST_CASE("referents are resolved per scene chain") {
  const SceneGraph g = fixtures::measured_truth(fixtures::four_objects());
  const auto refs = resolve_referents(parse_instruction("Place the heaviest of all mugs on top of the blue can."), g);
  REQUIRE(refs.size() == 2);
  CHECK(refs[0] == std::vector<ObjectId>{0, 1});
  CHECK(refs[1] == std::vector<ObjectId>{2});
}

TEST_CASE("op names round-trip") {
  for (int i = 0; i <= static_cast<int>(Op::GoalOrderWeight); ++i) {
    const Op op = static_cast<Op>(i);
    CHECK(op_from_string(to_string(op)) == op);
  }
  CHECK_FALSE(op_from_string("filter_shape"));
}

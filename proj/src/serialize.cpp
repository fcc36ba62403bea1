#include "tabletop/serialize.hpp"

#include <fstream>
#include <sstream>

namespace tabletop {

namespace {

template <typename E>
E parse_vocab(const Json& j) {
  const auto s = j.get<std::string>();
  if (auto v = enum_from_string<E>(s)) return *v;
  throw FormatError("unknown value '" + s + "'");
}

template <typename E, typename F>
E parse_with(const Json& j, F from_string) {
  const auto s = j.get<std::string>();
  if (auto v = from_string(s)) return *v;
  throw FormatError("unknown value '" + s + "'");
}

std::optional<StepStatus> step_status_from_string(std::string_view s) {
  for (auto v : {StepStatus::Ok, StepStatus::ExecutionError, StepStatus::PhysicsError})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

std::optional<ObservationKind> observation_kind_from_string(std::string_view s) {
  for (auto v : {ObservationKind::None, ObservationKind::MassGrams, ObservationKind::Stiffness})
    if (to_string(v) == s) return v;
  return std::nullopt;
}

template <typename T>
Json opt(const std::optional<T>& v) {
  return v ? Json(*v) : Json(nullptr);
}

template <typename T>
std::optional<T> opt_from(const Json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<T>();
}

void expect_schema(const Json& j, const char* schema) {
  if (!j.is_object() || !j.contains("schema")) throw FormatError(std::string("missing schema, expected ") + schema);
  if (j.at("schema") != schema)
    throw FormatError("schema mismatch: expected " + std::string(schema) + ", got " + j.at("schema").dump());
}

template <typename F>
auto guarded(F f) {
  try {
    return f();
  } catch (const Json::exception& e) {
    throw FormatError(e.what());
  } catch (const std::invalid_argument& e) {
    throw FormatError(e.what());
  }
}

}  // namespace

void to_json(Json& j, const Pose& p) { j = Json{{"x", p.x}, {"y", p.y}, {"z", p.z}, {"yaw", p.yaw}}; }
void from_json(const Json& j, Pose& p) {
  p.x = j.at("x").get<double>();
  p.y = j.at("y").get<double>();
  p.z = j.value("z", 0.0);
  p.yaw = j.value("yaw", 0.0);
}

void to_json(Json& j, const VisualAttributes& v) {
  j = Json{{"name", to_string(v.name)},
           {"color", to_string(v.color)},
           {"material", to_string(v.material)},
           {"size", to_string(v.size)},
           {"shape", to_string(v.shape)}};
}
void from_json(const Json& j, VisualAttributes& v) {
  v.name = parse_vocab<Category>(j.at("name"));
  v.color = parse_vocab<Color>(j.at("color"));
  v.material = parse_vocab<Material>(j.at("material"));
  v.size = parse_vocab<Size>(j.at("size"));
  v.shape = parse_vocab<Shape>(j.at("shape"));
}

void to_json(Json& j, const BBox& b) { j = Json{{"dx", b.dx}, {"dy", b.dy}, {"dz", b.dz}}; }
void from_json(const Json& j, BBox& b) {
  b.dx = j.at("dx").get<double>();
  b.dy = j.at("dy").get<double>();
  b.dz = j.at("dz").get<double>();
}

void to_json(Json& j, const ObjectNode& o) {
  j = Json{{"id", o.id},
           {"visual", o.visual},
           {"pose", o.pose},
           {"bbox", o.bbox},
           {"mass", {{"true", o.mass.true_value}, {"measured", opt(o.mass.measured_value)}}},
           {"stiffness", {{"true", o.stiffness.true_value}, {"measured", opt(o.stiffness.measured_value)}}},
           {"relations",
            {{"in_gripper", o.relations.in_gripper},
             {"within_feasible_grasp", o.relations.within_feasible_grasp},
             {"raised", o.relations.raised},
             {"gripper_above", o.relations.gripper_above}}},
           {"supported_by", o.supported_by}};
}
void from_json(const Json& j, ObjectNode& o) {
  o.id = j.at("id").get<int>();
  o.visual = j.at("visual").get<VisualAttributes>();
  o.pose = j.at("pose").get<Pose>();
  o.bbox = j.at("bbox").get<BBox>();
  const Json& m = j.at("mass");
  o.mass.true_value = m.value("true", 0.0);
  o.mass.measured_value = opt_from<double>(m, "measured");
  const Json& s = j.at("stiffness");
  o.stiffness.true_value = s.value("true", 0.0);
  o.stiffness.measured_value = opt_from<double>(s, "measured");
  if (j.contains("relations")) {
    const Json& r = j.at("relations");
    o.relations.in_gripper = r.value("in_gripper", false);
    o.relations.within_feasible_grasp = r.value("within_feasible_grasp", false);
    o.relations.raised = r.value("raised", false);
    o.relations.gripper_above = r.value("gripper_above", false);
  }
  o.supported_by = j.value("supported_by", kTable);
}

void to_json(Json& j, const EndEffector& e) {
  j = Json{{"pose", e.pose}, {"gripper_open", e.gripper_open}, {"held", e.held}};
}
void from_json(const Json& j, EndEffector& e) {
  e.pose = j.at("pose").get<Pose>();
  e.gripper_open = j.at("gripper_open").get<bool>();
  e.held = j.value("held", kNoObject);
}

void to_json(Json& j, const SceneGraph& g) {
  j = Json{{"frame_index", g.frame_index}, {"ee", g.ee}, {"objects", g.objects}};
}
void from_json(const Json& j, SceneGraph& g) {
  g.frame_index = j.value("frame_index", 0);
  g.ee = j.at("ee").get<EndEffector>();
  g.objects = j.at("objects").get<std::vector<ObjectNode>>();
}

void to_json(Json& j, const Detection& d) { j = Json{{"visual", d.visual}, {"pose", d.pose}, {"bbox", d.bbox}}; }
void from_json(const Json& j, Detection& d) {
  d.visual = j.at("visual").get<VisualAttributes>();
  d.pose = j.at("pose").get<Pose>();
  d.bbox = j.at("bbox").get<BBox>();
}

void to_json(Json& j, const ObservedScene& s) {
  j = Json{{"detections", s.detections}, {"holding_something", s.holding_something}};
}
void from_json(const Json& j, ObservedScene& s) {
  s.detections = j.at("detections").get<std::vector<Detection>>();
  s.holding_something = j.at("holding_something").get<bool>();
}

void to_json(Json& j, const SceneSpec& s) {
  Json objects = Json::array();
  for (const auto& o : s.objects)
    objects.push_back(Json{{"id", o.id},
                           {"visual", o.visual},
                           {"pose", o.pose},
                           {"bbox", o.bbox},
                           {"mass_g", o.mass.true_value},
                           {"stiffness_n_per_mm", o.stiffness.true_value}});
  j = Json{{"id", s.id}, {"objects", objects}};
}
void from_json(const Json& j, SceneSpec& s) {
  s.id = j.at("id").get<int>();
  s.objects.clear();
  for (const auto& jo : j.at("objects")) {
    ObjectNode o;
    o.id = jo.at("id").get<int>();
    o.visual = jo.at("visual").get<VisualAttributes>();
    o.pose = jo.at("pose").get<Pose>();
    o.bbox = jo.at("bbox").get<BBox>();
    o.mass.true_value = jo.at("mass_g").get<double>();
    o.stiffness.true_value = jo.at("stiffness_n_per_mm").get<double>();
    s.objects.push_back(o);
  }
}

void to_json(Json& j, const NoiseProfile& n) {
  j = Json{{"pose_sigma", n.pose_sigma},       {"attr_flip_prob", n.attr_flip_prob},
           {"id_fault_prob", n.id_fault_prob}, {"slip_prob", n.slip_prob},
           {"weigh_rel_err", n.weigh_rel_err}, {"stiffness_cov", n.stiffness_cov},
           {"seed", n.seed},                   {"pose_bias", {n.pose_bias_x, n.pose_bias_y, n.pose_bias_z}}};
}
void from_json(const Json& j, NoiseProfile& n) {
  const NoiseProfile d;
  n.pose_sigma = j.value("pose_sigma", d.pose_sigma);
  n.attr_flip_prob = j.value("attr_flip_prob", d.attr_flip_prob);
  n.id_fault_prob = j.value("id_fault_prob", d.id_fault_prob);
  n.slip_prob = j.value("slip_prob", d.slip_prob);
  n.weigh_rel_err = j.value("weigh_rel_err", d.weigh_rel_err);
  n.stiffness_cov = j.value("stiffness_cov", d.stiffness_cov);
  n.seed = j.value("seed", d.seed);
  if (j.contains("pose_bias")) {
    const auto b = j.at("pose_bias").get<std::vector<double>>();
    if (b.size() != 3) throw FormatError("pose_bias needs three components");
    n.pose_bias_x = b[0];
    n.pose_bias_y = b[1];
    n.pose_bias_z = b[2];
  }
}

void to_json(Json& j, const PrimitiveAction& a) {
  j = Json{{"op", to_string(a.op)}, {"target", a.target}, {"waypoint", a.waypoint}, {"at", a.at}};
}
void from_json(const Json& j, PrimitiveAction& a) {
  a.op = parse_with<ActionOp>(j.at("op"), action_op_from_string);
  a.target = j.value("target", kNoObject);
  a.waypoint = j.value("waypoint", false);
  a.at = j.contains("at") ? j.at("at").get<Pose>() : Pose{};
}

void to_json(Json& j, const PhysicalObservation& p) {
  j = Json{{"kind", to_string(p.kind)},
           {"value", opt(p.value)},
           {"ee_pose", p.ee_pose},
           {"gripper_closed", p.gripper_closed},
           {"grasp_force_detected", p.grasp_force_detected}};
}
void from_json(const Json& j, PhysicalObservation& p) {
  p.kind = parse_with<ObservationKind>(j.at("kind"), observation_kind_from_string);
  p.value = opt_from<double>(j, "value");
  p.ee_pose = j.at("ee_pose").get<Pose>();
  p.gripper_closed = j.at("gripper_closed").get<bool>();
  p.grasp_force_detected = j.at("grasp_force_detected").get<bool>();
}

void to_json(Json& j, const StepResult& r) {
  j = Json{{"status", to_string(r.status)}, {"observation", r.observation}, {"message", r.message}};
}
void from_json(const Json& j, StepResult& r) {
  r.status = parse_with<StepStatus>(j.at("status"), step_status_from_string);
  r.observation = j.at("observation").get<PhysicalObservation>();
  r.message = j.value("message", "");
}

void to_json(Json& j, const Disturbance& d) {
  j = Json{{"at_keyframe", d.at_keyframe}, {"kind", to_string(d.kind)}, {"first", d.first},
           {"second", d.second},           {"dx", d.dx},                 {"dy", d.dy}};
}
void from_json(const Json& j, Disturbance& d) {
  d.at_keyframe = j.at("at_keyframe").get<int>();
  d.kind = parse_with<DisturbanceKind>(j.at("kind"), disturbance_kind_from_string);
  d.first = j.value("first", kNoObject);
  d.second = j.value("second", kNoObject);
  d.dx = j.value("dx", 0.0);
  d.dy = j.value("dy", 0.0);
}

void to_json(Json& j, const WorldState& w) {
  j = Json{{"objects", w.objects},
           {"ee", w.ee},
           {"grasp_offset", w.grasp_offset},
           {"off_table", w.off_table},
           {"step_index", w.step_index},
           {"control_steps", w.control_steps}};
}
void from_json(const Json& j, WorldState& w) {
  w.objects = j.at("objects").get<std::vector<ObjectNode>>();
  w.ee = j.at("ee").get<EndEffector>();
  w.grasp_offset = j.at("grasp_offset").get<Pose>();
  w.off_table = j.at("off_table").get<std::set<ObjectId>>();
  w.step_index = j.at("step_index").get<long>();
  w.control_steps = j.at("control_steps").get<long>();
}

void to_json(Json& j, const ProgramFn& f) {
  j = Json{{"function", to_string(f.op)}, {"inputs", f.inputs}};
  if (f.arg) j["value_inputs"] = Json::array({*f.arg});
  else j["value_inputs"] = Json::array();
}
void from_json(const Json& j, ProgramFn& f) {
  f.op = parse_with<Op>(j.at("function"), op_from_string);
  f.inputs = j.at("inputs").get<std::vector<int>>();
  const auto args = j.value("value_inputs", std::vector<std::string>{});
  if (args.size() > 1) throw FormatError("at most one value input per function");
  f.arg = args.empty() ? std::nullopt : std::optional<std::string>(args.front());
}

void to_json(Json& j, const SymbolicProgram& p) { j = p.functions; }
void from_json(const Json& j, SymbolicProgram& p) { p.functions = j.get<std::vector<ProgramFn>>(); }

void to_json(Json& j, const Subgoal& s) {
  j = Json{{"kind", to_string(s.kind)},
           {"target", s.target},
           {"secondary", s.secondary_object},
           {"region", s.region ? Json(std::string(to_string(*s.region))) : Json(nullptr)}};
}
void from_json(const Json& j, Subgoal& s) {
  s.kind = parse_with<SubgoalKind>(j.at("kind"), subgoal_kind_from_string);
  s.target = j.at("target").get<int>();
  s.secondary_object = j.value("secondary", kNoObject);
  s.region = j.contains("region") && !j.at("region").is_null() ? std::optional(parse_vocab<Region>(j.at("region")))
                                                                 : std::nullopt;
}

void to_json(Json& j, const Answer& a) { j = Json{{"ids", a.ids}, {"values", a.values}, {"is_list", a.is_list}}; }
void from_json(const Json& j, Answer& a) {
  a.ids = j.at("ids").get<std::vector<ObjectId>>();
  a.values = j.at("values").get<std::vector<double>>();
  a.is_list = j.at("is_list").get<bool>();
}

void to_json(Json& j, const GroundTruthGoal& g) {
  j = Json{{"is_query", g.is_query},
           {"targets", g.targets},
           {"region", g.region ? Json(std::string(to_string(*g.region))) : Json(nullptr)},
           {"answer", opt(g.answer)}};
}
void from_json(const Json& j, GroundTruthGoal& g) {
  g.is_query = j.at("is_query").get<bool>();
  g.targets = j.at("targets").get<std::vector<ObjectId>>();
  g.region = j.contains("region") && !j.at("region").is_null() ? std::optional(parse_vocab<Region>(j.at("region")))
                                                                 : std::nullopt;
  g.answer = opt_from<Answer>(j, "answer");
}

void to_json(Json& j, const Task& t) {
  j = Json{{"id", t.id},
           {"scene_ref", t.scene_id},
           {"template_id", t.template_id},
           {"text", t.instruction},
           {"gt_program", t.program},
           {"gt_goal", t.goal},
           {"seed", t.seed}};
}
void from_json(const Json& j, Task& t) {
  t.id = j.at("id").get<int>();
  t.scene_id = j.at("scene_ref").get<int>();
  t.template_id = j.at("template_id").get<int>();
  t.instruction = j.at("text").get<std::string>();
  t.program = j.at("gt_program").get<SymbolicProgram>();
  t.goal = j.at("gt_goal").get<GroundTruthGoal>();
  t.seed = j.value("seed", std::uint64_t{0});
}

void to_json(Json& j, const KeyframeRecord& k) {
  j = Json{{"frame_index", k.frame_index},
           {"disturbances", k.disturbances},
           {"rejected", k.rejected},
           {"observed", k.observed},
           {"graph", k.graph},
           {"outcome", k.outcome},
           {"subgoal", opt(k.subgoal)},
           {"plan", k.plan},
           {"action", opt(k.action)},
           {"physical", opt(k.physical)},
           {"status", k.status ? Json(std::string(to_string(*k.status))) : Json(nullptr)},
           {"message", k.message},
           {"signature", k.signature},
           {"referents", k.referents}};
}
void from_json(const Json& j, KeyframeRecord& k) {
  k.frame_index = j.at("frame_index").get<int>();
  k.disturbances = j.at("disturbances").get<std::vector<Disturbance>>();
  k.rejected = j.at("rejected").get<std::vector<std::string>>();
  k.observed = j.at("observed").get<ObservedScene>();
  k.graph = j.at("graph").get<SceneGraph>();
  k.outcome = j.at("outcome").get<std::string>();
  k.subgoal = opt_from<Subgoal>(j, "subgoal");
  k.plan = j.at("plan").get<std::vector<PrimitiveAction>>();
  k.action = opt_from<PrimitiveAction>(j, "action");
  k.physical = opt_from<PhysicalObservation>(j, "physical");
  k.status = j.at("status").is_null() ? std::nullopt
                                      : std::optional(parse_with<StepStatus>(j.at("status"), step_status_from_string));
  k.message = j.at("message").get<std::string>();
  k.signature = j.at("signature").get<std::uint64_t>();
  k.referents = j.at("referents").get<std::vector<std::vector<ObjectId>>>();
}

void to_json(Json& j, const EpisodeTrace& t) {
  j = Json{{"task_id", t.task_id},
           {"seed", t.seed},
           {"exit_code", to_string(t.exit_code)},
           {"detail", t.detail},
           {"answer", opt(t.answer)},
           {"keyframe_count", t.keyframe_count},
           {"action_count", t.action_count},
           {"keyframes", t.keyframes}};
}
void from_json(const Json& j, EpisodeTrace& t) {
  t.task_id = j.at("task_id").get<int>();
  t.seed = j.at("seed").get<std::uint64_t>();
  t.exit_code = parse_with<ExitCode>(j.at("exit_code"), exit_code_from_string);
  t.detail = j.at("detail").get<std::string>();
  t.answer = opt_from<Answer>(j, "answer");
  t.keyframe_count = j.at("keyframe_count").get<int>();
  t.action_count = j.at("action_count").get<int>();
  t.keyframes = j.at("keyframes").get<std::vector<KeyframeRecord>>();
}

void to_json(Json& j, const EpisodeRow& r) {
  j = Json{{"task_id", r.task_id},   {"template", r.template_id},  {"run", r.run},
           {"seed", r.seed},         {"exit_code", to_string(r.exit_code)},
           {"engine_code", to_string(r.engine_code)},
           {"keyframes", r.keyframes}, {"actions", r.actions},     {"answer", opt(r.answer)},
           {"detail", r.detail}};
}
void from_json(const Json& j, EpisodeRow& r) {
  r.task_id = j.at("task_id").get<int>();
  r.template_id = j.at("template").get<int>();
  r.run = j.at("run").get<int>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.exit_code = parse_with<ExitCode>(j.at("exit_code"), exit_code_from_string);
  r.engine_code = parse_with<ExitCode>(j.at("engine_code"), exit_code_from_string);
  r.keyframes = j.at("keyframes").get<int>();
  r.actions = j.at("actions").get<int>();
  r.answer = opt_from<Answer>(j, "answer");
  r.detail = j.at("detail").get<std::string>();
}

void to_json(Json& j, const BenchConfig& c) {
  j = Json{{"noise", c.noise},
           {"ablation",
            {{"gt_pose", c.ablation.gt_pose},
             {"gt_attributes", c.ablation.gt_attributes},
             {"gt_reasoning", c.ablation.gt_reasoning}}},
           {"runs", c.runs},
           {"budget", c.budget}};
}
void from_json(const Json& j, BenchConfig& c) {
  c.noise = j.at("noise").get<NoiseProfile>();
  const Json& a = j.at("ablation");
  c.ablation.gt_pose = a.at("gt_pose").get<bool>();
  c.ablation.gt_attributes = a.at("gt_attributes").get<bool>();
  c.ablation.gt_reasoning = a.at("gt_reasoning").get<bool>();
  c.runs = j.at("runs").get<int>();
  c.budget = j.at("budget").get<int>();
}

Json scenes_json(const std::vector<SceneSpec>& scenes) { return Json{{"schema", kScenesSchema}, {"scenes", scenes}}; }

std::vector<SceneSpec> scenes_from(const Json& j) {
  return guarded([&] {
    expect_schema(j, kScenesSchema);
    return j.at("scenes").get<std::vector<SceneSpec>>();
  });
}

Json tasks_json(const TasksFile& t) {
  return Json{{"schema", kTasksSchema}, {"scenes_file", t.scenes_file}, {"tasks", t.tasks}};
}

TasksFile tasks_from(const Json& j) {
  return guarded([&] {
    expect_schema(j, kTasksSchema);
    TasksFile t;
    t.scenes_file = j.value("scenes_file", "");
    t.tasks = j.at("tasks").get<std::vector<Task>>();
    return t;
  });
}

Json noise_json(const NoiseProfile& noise) {
  Json j = noise;
  j["schema"] = kNoiseSchema;
  return j;
}

NoiseProfile noise_from(const Json& j) {
  return guarded([&] {
    if (j.contains("schema")) expect_schema(j, kNoiseSchema);
    NoiseProfile n = j.get<NoiseProfile>();
    validate(n);
    return n;
  });
}

Json trace_json(const EpisodeTrace& trace) {
  Json j = trace;
  j["schema"] = kTraceSchema;
  return j;
}

EpisodeTrace trace_from(const Json& j) {
  return guarded([&] {
    expect_schema(j, kTraceSchema);
    return j.get<EpisodeTrace>();
  });
}

Json report_json(const Report& r) {
  Json rows = Json::array();
  auto row_json = [](const TemplateRow& row) {
    return Json{{"template", row.template_id},
                {"label", row.label},
                {"episodes", row.episodes},
                {"successes", row.successes},
                {"success", row.success}};
  };
  for (const auto& row : r.rows) rows.push_back(row_json(row));
  Json codes = Json::array();
  for (std::size_t i = 0; i < kExitCodes.size(); ++i)
    codes.push_back(Json{{"code", to_string(kExitCodes[i])}, {"count", r.counts[i]}, {"percent", r.percentages[i]}});
  return Json{{"schema", kReportSchema},
              {"config", r.config},
              {"rows", rows},
              {"overall", row_json(r.overall)},
              {"exit_codes", codes},
              {"episodes", r.episodes},
              {"timing", {{"wall_seconds", r.wall_seconds}}}};
}

Report report_from(const Json& j) {
  return guarded([&] {
    expect_schema(j, kReportSchema);
    Report r;
    r.config = j.at("config").get<BenchConfig>();
    auto row_from = [](const Json& jr) {
      TemplateRow row;
      row.template_id = jr.at("template").get<int>();
      row.label = jr.at("label").get<std::string>();
      row.episodes = jr.at("episodes").get<int>();
      row.successes = jr.at("successes").get<int>();
      row.success = jr.at("success").get<double>();
      return row;
    };
    for (const auto& jr : j.at("rows")) r.rows.push_back(row_from(jr));
    r.overall = row_from(j.at("overall"));
    for (const auto& jc : j.at("exit_codes")) {
      const ExitCode code = parse_with<ExitCode>(jc.at("code"), exit_code_from_string);
      r.counts[static_cast<std::size_t>(code)] = jc.at("count").get<int>();
      r.percentages[static_cast<std::size_t>(code)] = jc.at("percent").get<double>();
    }
    r.episodes = j.at("episodes").get<std::vector<EpisodeRow>>();
    if (j.contains("timing")) r.wall_seconds = j.at("timing").value("wall_seconds", 0.0);
    return r;
  });
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

}  // namespace tabletop

#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "tabletop/bench.hpp"

namespace tabletop {

using Json = nlohmann::json;

inline constexpr const char* kScenesSchema = "tabletop.scenes/1";
inline constexpr const char* kTasksSchema = "tabletop.tasks/1";
inline constexpr const char* kTraceSchema = "tabletop.trace/1";
inline constexpr const char* kReportSchema = "tabletop.report/1";
inline constexpr const char* kNoiseSchema = "tabletop.noise/1";

/// Malformed or mismatched file content.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void to_json(Json& j, const Pose& p);
void from_json(const Json& j, Pose& p);
void to_json(Json& j, const VisualAttributes& v);
void from_json(const Json& j, VisualAttributes& v);
void to_json(Json& j, const BBox& b);
void from_json(const Json& j, BBox& b);
void to_json(Json& j, const ObjectNode& o);
void from_json(const Json& j, ObjectNode& o);
void to_json(Json& j, const EndEffector& e);
void from_json(const Json& j, EndEffector& e);
void to_json(Json& j, const SceneGraph& g);
void from_json(const Json& j, SceneGraph& g);
void to_json(Json& j, const Detection& d);
void from_json(const Json& j, Detection& d);
void to_json(Json& j, const ObservedScene& s);
void from_json(const Json& j, ObservedScene& s);
void to_json(Json& j, const SceneSpec& s);
void from_json(const Json& j, SceneSpec& s);
void to_json(Json& j, const NoiseProfile& n);
void from_json(const Json& j, NoiseProfile& n);
void to_json(Json& j, const PrimitiveAction& a);
void from_json(const Json& j, PrimitiveAction& a);
void to_json(Json& j, const PhysicalObservation& p);
void from_json(const Json& j, PhysicalObservation& p);
void to_json(Json& j, const StepResult& r);
void from_json(const Json& j, StepResult& r);
void to_json(Json& j, const Disturbance& d);
void from_json(const Json& j, Disturbance& d);
void to_json(Json& j, const WorldState& w);
void from_json(const Json& j, WorldState& w);
void to_json(Json& j, const ProgramFn& f);
void from_json(const Json& j, ProgramFn& f);
void to_json(Json& j, const SymbolicProgram& p);
void from_json(const Json& j, SymbolicProgram& p);
void to_json(Json& j, const Subgoal& s);
void from_json(const Json& j, Subgoal& s);
void to_json(Json& j, const Answer& a);
void from_json(const Json& j, Answer& a);
void to_json(Json& j, const GroundTruthGoal& g);
void from_json(const Json& j, GroundTruthGoal& g);
void to_json(Json& j, const Task& t);
void from_json(const Json& j, Task& t);
void to_json(Json& j, const KeyframeRecord& k);
void from_json(const Json& j, KeyframeRecord& k);
void to_json(Json& j, const EpisodeTrace& t);
void from_json(const Json& j, EpisodeTrace& t);
void to_json(Json& j, const EpisodeRow& r);
void from_json(const Json& j, EpisodeRow& r);
void to_json(Json& j, const BenchConfig& c);
void from_json(const Json& j, BenchConfig& c);

struct TasksFile {
  std::string scenes_file;
  std::vector<Task> tasks;
};

Json scenes_json(const std::vector<SceneSpec>& scenes);
std::vector<SceneSpec> scenes_from(const Json& j);

Json tasks_json(const TasksFile& tasks);
TasksFile tasks_from(const Json& j);

/// Noise files may omit the schema field and any parameter (defaults apply).
Json noise_json(const NoiseProfile& noise);
NoiseProfile noise_from(const Json& j);

Json trace_json(const EpisodeTrace& trace);
EpisodeTrace trace_from(const Json& j);

/// Report JSON. Timing lives under "timing" so that determinism checks can
/// drop it.
Json report_json(const Report& report);
Report report_from(const Json& j);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

}  // namespace tabletop

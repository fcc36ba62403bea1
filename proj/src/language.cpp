#include "tabletop/language.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <set>
#include <sstream>

namespace tabletop {

namespace {

constexpr std::array<std::string_view, kTemplateCount> kLabels{
    "Weight single", "Weight multi", "Pick up weight", "Move single", "Move multi",
    "Move weight",   "Stack",        "Stack weight",   "Stack three", "Order weight",
};

// Template surface forms. Slot tokens: $O singular descriptor, $OS plural
// descriptor, $TP table part, $WS weight specifier.
constexpr std::array<std::string_view, kTemplateCount> kPatterns{
    "measure the weight of the $O",
    "what is the weight of all $OS",
    "pick up the $WS of all $OS",
    "place the $O on the $TP part of the table",
    "remove all $OS from the $TP part of the table",
    "place the $WS of all $OS on the $TP part of the table",
    "stack the $O on top of the $O",
    "place the $WS of all $OS on top of the $O",
    "stack the $O on top of the $O on top of the $O",
    "stack all $OS from heaviest to lightest",
};

constexpr std::array<char, kTemplateCount> kTerminators{'.', '?', '.', '.', '.', '.', '.', '.', '.', '.'};

// Upper bound on objects ordered by template 10; keeps the full episode of a
// 4-5 object scene within the published 46-action horizon.
constexpr std::size_t kMaxOrderedObjects = 3;

std::vector<std::string> split(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string w;
  while (in >> w) out.push_back(w);
  return out;
}

bool is_plural_slot(std::string_view tok) { return tok == "$OS"; }

}  // namespace

bool Descriptor::matches(const VisualAttributes& v) const {
  return (!size || *size == v.size) && (!color || *color == v.color) && (!material || *material == v.material) &&
         (!name || *name == v.name);
}

int Descriptor::word_count() const { return (size ? 1 : 0) + (color ? 1 : 0) + (material ? 1 : 0) + 1; }

std::string render(const Descriptor& d, bool plural) {
  std::string out;
  auto add = [&](std::string_view w) {
    if (!out.empty()) out += ' ';
    out += w;
  };
  if (d.size) add(to_string(*d.size));
  if (d.color) add(to_string(*d.color));
  if (d.material) add(to_string(*d.material));
  if (d.name)
    add(plural ? tabletop::plural(*d.name) : std::string(to_string(*d.name)));
  else
    add(plural ? "objects" : "object");
  return out;
}

std::vector<Descriptor> descriptors_of(const VisualAttributes& v) {
  std::vector<Descriptor> out;
  for (int mask = 1; mask < 16; ++mask) {
    Descriptor d;
    if (mask & 1) d.size = v.size;
    if (mask & 2) d.color = v.color;
    if (mask & 4) d.material = v.material;
    if (mask & 8) d.name = v.name;
    out.push_back(d);
  }
  return out;
}

std::string_view template_label(int template_id) {
  if (template_id < 1 || template_id > kTemplateCount) return "?";
  return kLabels[static_cast<std::size_t>(template_id - 1)];
}

int word_count(std::string_view text) { return static_cast<int>(split(text).size()); }

std::string realize(const Instruction& slots) {
  if (slots.template_id < 1 || slots.template_id > kTemplateCount) throw std::invalid_argument("bad template id");
  const auto idx = static_cast<std::size_t>(slots.template_id - 1);
  std::string out;
  std::size_t next_obj = 0;
  for (const auto& tok : split(kPatterns[idx])) {
    std::string word;
    if (tok == "$O" || tok == "$OS") {
      word = render(slots.objects.at(next_obj++), is_plural_slot(tok));
    } else if (tok == "$TP") {
      word = std::string(to_string(slots.region.value()));
    } else if (tok == "$WS") {
      word = std::string(to_string(slots.weight.value()));
    } else {
      word = tok;
    }
    if (!out.empty()) out += ' ';
    out += word;
  }
  out[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(out[0])));
  out += kTerminators[idx];
  return out;
}

namespace {

class ProgramBuilder {
 public:
  int add(Op op, std::optional<std::string> arg, std::vector<int> inputs) {
    prog_.functions.push_back(ProgramFn{op, std::move(arg), std::move(inputs)});
    return static_cast<int>(prog_.functions.size()) - 1;
  }

  /// scene followed by the canonical filter chain (size, colour, material, name).
  int select(const Descriptor& d) {
    int at = add(Op::Scene, std::nullopt, {});
    if (d.size) at = add(Op::FilterSize, std::string(to_string(*d.size)), {at});
    if (d.color) at = add(Op::FilterColor, std::string(to_string(*d.color)), {at});
    if (d.material) at = add(Op::FilterMaterial, std::string(to_string(*d.material)), {at});
    if (d.name) at = add(Op::FilterName, std::string(to_string(*d.name)), {at});
    return at;
  }

  int unique(const Descriptor& d) { return add(Op::Unique, std::nullopt, {select(d)}); }

  SymbolicProgram take() { return std::move(prog_); }

 private:
  SymbolicProgram prog_;
};

}  // namespace

SymbolicProgram build_program(const Instruction& s) {
  ProgramBuilder b;
  auto ws = [&] { return std::string(to_string(s.weight.value())); };
  auto tp = [&] { return std::string(to_string(s.region.value())); };
  const auto& obj = s.objects;
  switch (s.template_id) {
    case 1: b.add(Op::QueryWeight, std::nullopt, {b.unique(obj.at(0))}); break;
    case 2: b.add(Op::QueryWeightAll, std::nullopt, {b.select(obj.at(0))}); break;
    case 3: {
      const int w = b.add(Op::FilterWeight, ws(), {b.select(obj.at(0))});
      b.add(Op::GoalPickUp, std::nullopt, {w});
      break;
    }
    case 4: b.add(Op::GoalMoveRegion, tp(), {b.unique(obj.at(0))}); break;
    case 5: {
      const int r = b.add(Op::FilterRegion, tp(), {b.select(obj.at(0))});
      b.add(Op::GoalRemoveRegion, tp(), {r});
      break;
    }
    case 6: {
      const int w = b.add(Op::FilterWeight, ws(), {b.select(obj.at(0))});
      b.add(Op::GoalMoveRegion, tp(), {w});
      break;
    }
    case 7: {
      const int top = b.unique(obj.at(0));
      const int base = b.unique(obj.at(1));
      b.add(Op::GoalStack, std::nullopt, {top, base});
      break;
    }
    case 8: {
      const int top = b.add(Op::FilterWeight, ws(), {b.select(obj.at(0))});
      const int base = b.unique(obj.at(1));
      b.add(Op::GoalStack, std::nullopt, {top, base});
      break;
    }
    case 9: {
      const int top = b.unique(obj.at(0));
      const int mid = b.unique(obj.at(1));
      const int base = b.unique(obj.at(2));
      const int lower = b.add(Op::GoalStack, std::nullopt, {mid, base});
      b.add(Op::GoalStack, std::nullopt, {top, mid, lower});
      break;
    }
    case 10: b.add(Op::GoalOrderWeight, std::nullopt, {b.select(obj.at(0))}); break;
    default: throw std::invalid_argument("bad template id");
  }
  return b.take();
}

namespace {

SceneGraph fully_measured(SceneGraph truth) {
  for (auto& o : truth.objects) {
    o.mass.measured_value = o.mass.true_value;
    o.stiffness.measured_value = o.stiffness.true_value;
  }
  return truth;
}

template <typename Enum>
std::optional<Enum> program_arg(const SymbolicProgram& p, std::initializer_list<Op> ops) {
  for (const auto& fn : p.functions)
    if (fn.arg && std::find(ops.begin(), ops.end(), fn.op) != ops.end()) return enum_from_string<Enum>(*fn.arg);
  return std::nullopt;
}

ObjectId by_weight(const std::vector<ObjectId>& ids, const SceneGraph& g, WeightSpec ws) {
  ObjectId best = ids.front();
  for (ObjectId id : ids) {
    const double m = g.find(id)->mass.true_value;
    const double b = g.find(best)->mass.true_value;
    if (ws == WeightSpec::Lightest ? m < b : m > b) best = id;
  }
  return best;
}

}  // namespace

std::optional<GroundTruthGoal> ground_truth_goal(const SymbolicProgram& program, int template_id,
                                                 const SceneGraph& truth) {
  const SceneGraph m = fully_measured(truth);
  const ExecutionOutcome outcome = execute(program, m);
  if (std::holds_alternative<ProgramError>(outcome) || std::holds_alternative<GoalSatisfied>(outcome))
    return std::nullopt;

  GroundTruthGoal gt;
  const auto refs = resolve_referents(program, m);
  const auto ws = program_arg<WeightSpec>(program, {Op::FilterWeight});
  gt.region = program_arg<Region>(program, {Op::FilterRegion, Op::GoalMoveRegion, Op::GoalRemoveRegion});
  if (const auto* a = std::get_if<Answer>(&outcome)) {
    gt.is_query = true;
    gt.answer = *a;
    gt.targets = a->ids;
    return gt;
  }
  switch (template_id) {
    case 3:
    case 6: gt.targets = {by_weight(refs.at(0), m, *ws)}; break;
    case 4: gt.targets = refs.at(0); break;
    case 5:
      for (ObjectId id : refs.at(0))
        if (region_of(m.find(id)->pose.x) == *gt.region) gt.targets.push_back(id);
      break;
    case 7: gt.targets = {refs.at(0).at(0), refs.at(1).at(0)}; break;
    case 8: gt.targets = {by_weight(refs.at(0), m, *ws), refs.at(1).at(0)}; break;
    case 9: gt.targets = {refs.at(0).at(0), refs.at(1).at(0), refs.at(2).at(0)}; break;
    case 10: {
      gt.targets = refs.at(0);
      std::stable_sort(gt.targets.begin(), gt.targets.end(), [&](ObjectId a, ObjectId b) {
        return m.find(a)->mass.true_value > m.find(b)->mass.true_value;
      });
      break;
    }
    default: return std::nullopt;
  }
  return gt;
}

namespace {

std::vector<ObjectId> matching(const SceneGraph& g, const Descriptor& d) {
  std::vector<ObjectId> out;
  for (const auto& o : g.objects)
    if (d.matches(o.visual)) out.push_back(o.id);
  std::sort(out.begin(), out.end());
  return out;
}

/// Unique descriptors per object, shuffled.
std::vector<Descriptor> unique_descriptors(const SceneGraph& g, const ObjectNode& o, std::mt19937_64& rng) {
  std::vector<Descriptor> out;
  for (const auto& d : descriptors_of(o.visual))
    if (matching(g, d).size() == 1) out.push_back(d);
  std::shuffle(out.begin(), out.end(), rng);
  // Shorter descriptions first within the shuffled order keeps long
  // multi-object templates inside the word budget.
  std::stable_sort(out.begin(), out.end(), [](const Descriptor& a, const Descriptor& b) {
    return a.word_count() < b.word_count();
  });
  if (!out.empty()) {
    std::uniform_int_distribution<std::size_t> pick(0, out.size() - 1);
    std::swap(out[0], out[pick(rng)]);
  }
  return out;
}

/// Distinct descriptors matching between `lo` and `hi` objects, shuffled.
std::vector<Descriptor> group_descriptors(const SceneGraph& g, std::size_t lo, std::size_t hi, std::mt19937_64& rng) {
  std::vector<Descriptor> out;
  for (const auto& o : g.objects) {
    for (const auto& d : descriptors_of(o.visual)) {
      const auto n = matching(g, d).size();
      if (n < lo || n > hi) continue;
      if (std::find(out.begin(), out.end(), d) == out.end()) out.push_back(d);
    }
  }
  std::shuffle(out.begin(), out.end(), rng);
  return out;
}

const Descriptor& shortest(const std::vector<Descriptor>& v) {
  return *std::min_element(v.begin(), v.end(),
                           [](const Descriptor& a, const Descriptor& b) { return a.word_count() < b.word_count(); });
}

template <typename Enum>
Enum coin(Enum a, Enum b, std::mt19937_64& rng) {
  return std::uniform_int_distribution<int>(0, 1)(rng) ? b : a;
}

Region opposite(Region r) { return r == Region::Left ? Region::Right : Region::Left; }

}  // namespace

std::optional<GeneratedTask> generate_instruction(const SceneGraph& truth, int template_id, std::mt19937_64& rng) {
  if (template_id < 1 || template_id > kTemplateCount) throw std::invalid_argument("bad template id");
  const SceneGraph& g = truth;

  std::vector<Instruction> candidates;
  auto with = [&](std::vector<Descriptor> objs, std::optional<Region> r, std::optional<WeightSpec> w) {
    Instruction ins;
    ins.template_id = template_id;
    ins.objects = std::move(objs);
    ins.region = r;
    ins.weight = w;
    candidates.push_back(std::move(ins));
  };

  std::vector<const ObjectNode*> objects;
  for (const auto& o : g.objects) objects.push_back(&o);
  std::shuffle(objects.begin(), objects.end(), rng);

  const WeightSpec ws = coin(WeightSpec::Lightest, WeightSpec::Heaviest, rng);
  switch (template_id) {
    case 1:
    case 4:
      for (const auto* o : objects)
        for (const auto& d : unique_descriptors(g, *o, rng))
          with({d}, template_id == 4 ? std::optional(opposite(region_of(o->pose.x))) : std::nullopt, std::nullopt);
      break;
    case 2:
    case 3:
    case 10: {
      const std::size_t hi = template_id == 10 ? kMaxOrderedObjects : g.objects.size();
      for (const auto& d : group_descriptors(g, 2, hi, rng))
        with({d}, std::nullopt, template_id == 3 ? std::optional(ws) : std::nullopt);
      break;
    }
    case 5:
      for (const auto& d : group_descriptors(g, 2, g.objects.size(), rng)) {
        std::vector<Region> regions;
        for (ObjectId id : matching(g, d)) {
          const Region r = region_of(g.find(id)->pose.x);
          if (std::find(regions.begin(), regions.end(), r) == regions.end()) regions.push_back(r);
        }
        std::shuffle(regions.begin(), regions.end(), rng);
        for (Region r : regions) with({d}, r, std::nullopt);
      }
      break;
    case 6:
      for (const auto& d : group_descriptors(g, 2, g.objects.size(), rng)) {
        const auto ids = matching(g, d);
        const ObjectId w = by_weight(ids, fully_measured(g), ws);
        with({d}, opposite(region_of(g.find(w)->pose.x)), ws);
      }
      break;
    case 7:
      for (const auto* a : objects)
        for (const auto* b : objects) {
          if (a == b) continue;
          const auto da = unique_descriptors(g, *a, rng);
          const auto db = unique_descriptors(g, *b, rng);
          if (da.empty() || db.empty()) continue;
          with({da.front(), db.front()}, std::nullopt, std::nullopt);
          with({shortest(da), shortest(db)}, std::nullopt, std::nullopt);
        }
      break;
    case 8:
      for (const auto& d : group_descriptors(g, 2, g.objects.size(), rng)) {
        const auto group = matching(g, d);
        for (const auto* b : objects) {
          if (std::find(group.begin(), group.end(), b->id) != group.end()) continue;
          const auto db = unique_descriptors(g, *b, rng);
          if (db.empty()) continue;
          with({d, db.front()}, std::nullopt, ws);
          with({d, shortest(db)}, std::nullopt, ws);
        }
      }
      break;
    case 9:
      for (const auto* a : objects)
        for (const auto* b : objects)
          for (const auto* c : objects) {
            if (a == b || b == c || a == c) continue;
            const auto da = unique_descriptors(g, *a, rng);
            const auto db = unique_descriptors(g, *b, rng);
            const auto dc = unique_descriptors(g, *c, rng);
            if (da.empty() || db.empty() || dc.empty()) continue;
            with({da.front(), db.front(), dc.front()}, std::nullopt, std::nullopt);
            with({shortest(da), shortest(db), shortest(dc)}, std::nullopt, std::nullopt);
          }
      break;
  }

  // Candidates arrive in randomized order; keep the first within the word
  // budget whose program has a well-defined ground truth.
  for (auto& ins : candidates) {
    ins.text = realize(ins);
    const int words = word_count(ins.text);
    if (words < kMinWords || words > kMaxWords) continue;
    SymbolicProgram program = build_program(ins);
    auto gt = ground_truth_goal(program, template_id, g);
    if (!gt) continue;
    return GeneratedTask{std::move(ins), std::move(program), std::move(*gt)};
  }
  return std::nullopt;
}

namespace {

std::string normalize_token(std::string_view raw) {
  std::string w;
  for (char c : raw) {
    if (c == '.' || c == '?' || c == ',' || c == '!') continue;
    w += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  }
  return w;
}

const std::set<std::string>& vocabulary() {
  static const std::set<std::string> words = [] {
    std::set<std::string> v;
    for (auto pattern : kPatterns)
      for (const auto& tok : split(pattern))
        if (tok[0] != '$') v.insert(tok);
    for (auto c : kCategories) {
      v.insert(std::string(to_string(c)));
      v.insert(plural(c));
    }
    for (auto c : kColors) v.insert(std::string(to_string(c)));
    for (auto m : kMaterials) v.insert(std::string(to_string(m)));
    for (auto s : kSizes) v.insert(std::string(to_string(s)));
    v.insert({"object", "objects", "left", "right", "lightest", "heaviest"});
    return v;
  }();
  return words;
}

std::optional<Category> noun(const std::string& w, bool plural_form) {
  for (auto c : kCategories) {
    if (!plural_form && w == to_string(c)) return c;
    if (plural_form && w == plural(c)) return c;
  }
  return std::nullopt;
}

/// Parses one descriptor at tokens[pos]; advances pos on success.
std::optional<Descriptor> parse_descriptor(const std::vector<std::string>& t, std::size_t& pos, bool plural_form) {
  std::size_t i = pos;
  Descriptor d;
  if (i < t.size()) d.size = enum_from_string<Size>(t[i]);
  if (d.size) ++i;
  if (i < t.size()) d.color = enum_from_string<Color>(t[i]);
  if (d.color) ++i;
  if (i < t.size()) d.material = enum_from_string<Material>(t[i]);
  if (d.material) ++i;
  if (i >= t.size()) return std::nullopt;
  if (t[i] == (plural_form ? "objects" : "object")) {
    if (d.empty()) return std::nullopt;  // "the object" describes nothing
  } else if (auto c = noun(t[i], plural_form)) {
    d.name = c;
  } else {
    return std::nullopt;
  }
  pos = i + 1;
  return d;
}

std::optional<Instruction> match_template(int template_id, const std::vector<std::string>& tokens) {
  Instruction ins;
  ins.template_id = template_id;
  std::size_t pos = 0;
  for (const auto& tok : split(kPatterns[static_cast<std::size_t>(template_id - 1)])) {
    if (tok == "$O" || tok == "$OS") {
      auto d = parse_descriptor(tokens, pos, tok == "$OS");
      if (!d) return std::nullopt;
      ins.objects.push_back(*d);
    } else if (tok == "$TP") {
      if (pos >= tokens.size()) return std::nullopt;
      ins.region = enum_from_string<Region>(tokens[pos++]);
      if (!ins.region) return std::nullopt;
    } else if (tok == "$WS") {
      if (pos >= tokens.size()) return std::nullopt;
      ins.weight = enum_from_string<WeightSpec>(tokens[pos++]);
      if (!ins.weight) return std::nullopt;
    } else {
      if (pos >= tokens.size() || tokens[pos] != tok) return std::nullopt;
      ++pos;
    }
  }
  if (pos != tokens.size()) return std::nullopt;
  return ins;
}

}  // namespace

Instruction parse_slots(std::string_view text) {
  std::vector<std::string> tokens;
  for (const auto& raw : split(text)) {
    std::string w = normalize_token(raw);
    if (w.empty()) continue;
    if (!vocabulary().count(w)) throw ParseError("unknown word '" + w + "'");
    tokens.push_back(std::move(w));
  }
  if (tokens.empty()) throw ParseError("empty instruction");

  std::vector<Instruction> matches;
  for (int id = 1; id <= kTemplateCount; ++id)
    if (auto m = match_template(id, tokens)) matches.push_back(std::move(*m));
  if (matches.empty()) throw ParseError("no template matches");
  if (matches.size() > 1) throw ParseError("instruction matches several templates");
  matches.front().text = std::string(text);
  return matches.front();
}

SymbolicProgram parse_instruction(std::string_view text) { return build_program(parse_slots(text)); }

}  // namespace tabletop

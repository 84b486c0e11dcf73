#include "dtwin/scene.hpp"

#include <cmath>
#include <sstream>

#include "text_util.hpp"

namespace dtwin::scene {

std::string_view attribute_name(FunctionalAttribute attribute) noexcept {
  switch (attribute) {
    case FunctionalAttribute::Pickable: return "Pickable";
    case FunctionalAttribute::Moveable: return "Moveable";
    case FunctionalAttribute::Heatable: return "Heatable";
    case FunctionalAttribute::Coolable: return "Coolable";
    case FunctionalAttribute::Receptacle: return "Receptacle";
    case FunctionalAttribute::Toggleable: return "Toggleable";
    case FunctionalAttribute::Openable: return "Openable";
    case FunctionalAttribute::Sliceable: return "Sliceable";
    case FunctionalAttribute::Fillable: return "Fillable";
  }
  return "";
}

FunctionalAttribute parse_attribute(std::string_view name) {
  for (auto a : kAllAttributes) {
    if (attribute_name(a) == name) return a;
  }
  throw Error(ErrorCode::UnknownAttribute, std::string(name));
}

std::string_view action_name(Action action) noexcept {
  switch (action) {
    case Action::Pick: return "Pick";
    case Action::Put: return "Put";
    case Action::Move: return "Move";
    case Action::Heat: return "Heat";
    case Action::Cool: return "Cool";
    case Action::ToggleOn: return "ToggleOn";
    case Action::ToggleOff: return "ToggleOff";
    case Action::Open: return "Open";
    case Action::Close: return "Close";
    case Action::Slice: return "Slice";
    case Action::Fill: return "Fill";
  }
  return "";
}

Action parse_action(std::string_view name) {
  for (auto a : kAllActions) {
    if (action_name(a) == name) return a;
  }
  throw Error(ErrorCode::ParseError, "unknown action '" + std::string(name) + "'");
}

std::string_view denial_name(DenialReason reason) noexcept {
  switch (reason) {
    case DenialReason::None: return "None";
    case DenialReason::MissingAttribute: return "MissingAttribute";
    case DenialReason::MissingInstrument: return "MissingInstrument";
    case DenialReason::SameObject: return "SameObject";
    case DenialReason::HandsFull: return "HandsFull";
    case DenialReason::AlreadyHeld: return "AlreadyHeld";
    case DenialReason::ReceptacleClosed: return "ReceptacleClosed";
    case DenialReason::ContainmentCycle: return "ContainmentCycle";
    case DenialReason::InstrumentOff: return "InstrumentOff";
    case DenialReason::NotContained: return "NotContained";
    case DenialReason::AlreadyInState: return "AlreadyInState";
  }
  return "";
}

std::string Verdict::describe() const {
  if (allowed) return "allowed";
  std::string out(denial_name(reason));
  if (attribute) out += "(" + std::string(attribute_name(*attribute)) + ")";
  if (!object.empty()) out += " on '" + object + "'";
  return out;
}

Scene::Scene(std::vector<SceneObject> objects) {
  for (auto& object : objects) {
    const std::string id = object.id;
    if (id.empty()) throw Error(ErrorCode::ParseError, "empty object id");
    if (!objects_.emplace(id, std::move(object)).second) {
      throw Error(ErrorCode::ParseError, "duplicate object id '" + id + "'");
    }
  }
  check_invariants();
}

const SceneObject& Scene::at(const std::string& id) const {
  const auto it = objects_.find(id);
  if (it == objects_.end()) throw Error(ErrorCode::UnknownObject, id);
  return it->second;
}

std::optional<std::string> Scene::held() const {
  for (const auto& [id, object] : objects_) {
    if (object.state.held) return id;
  }
  return std::nullopt;
}

void Scene::check_invariants() const {
  int held_count = 0;
  for (const auto& [id, object] : objects_) {
    if (object.id != id) throw Error(ErrorCode::InvalidState, "id mismatch for '" + id + "'");
    if (object.contained_in) {
      const auto it = objects_.find(*object.contained_in);
      if (it == objects_.end()) {
        throw Error(ErrorCode::DanglingContainment,
                    "'" + id + "' is in unknown '" + *object.contained_in + "'");
      }
      if (!it->second.has(FunctionalAttribute::Receptacle)) {
        throw Error(ErrorCode::DanglingContainment,
                    "'" + id + "' is in '" + *object.contained_in + "', not a Receptacle");
      }
    }
    const auto& s = object.state;
    auto need = [&](bool flag, FunctionalAttribute a, const char* what) {
      if (flag && !object.has(a)) {
        throw Error(ErrorCode::InvalidState,
                    "'" + id + "' is " + what + " without " + std::string(attribute_name(a)));
      }
    };
    need(s.open, FunctionalAttribute::Openable, "open");
    need(s.toggled_on, FunctionalAttribute::Toggleable, "on");
    need(s.filled, FunctionalAttribute::Fillable, "filled");
    need(s.sliced, FunctionalAttribute::Sliceable, "sliced");
    need(s.held, FunctionalAttribute::Pickable, "held");
    if (s.held) {
      ++held_count;
      if (object.contained_in) {
        throw Error(ErrorCode::InvalidState, "'" + id + "' is held and contained");
      }
    }
  }
  if (held_count > 1) throw Error(ErrorCode::InvalidState, "more than one object held");

  for (const auto& [id, object] : objects_) {
    std::size_t steps = 0;
    for (auto cur = object.contained_in; cur; cur = objects_.at(*cur).contained_in) {
      if (*cur == id || ++steps > objects_.size()) {
        throw Error(ErrorCode::ContainmentCycle, "'" + id + "'");
      }
    }
  }
}

namespace {

Verdict deny(DenialReason reason, const std::string& object,
             std::optional<FunctionalAttribute> attribute = std::nullopt) {
  return Verdict{false, reason, attribute, object};
}

// True when `inner` sits (transitively) inside `outer`.
bool is_inside(const Scene& scene, const std::string& inner, const std::string& outer) {
  for (auto cur = scene.at(inner).contained_in; cur; cur = scene.at(*cur).contained_in) {
    if (*cur == outer) return true;
  }
  return false;
}

bool closed_container(const Scene& scene, const SceneObject& object) {
  if (!object.contained_in) return false;
  const auto& container = scene.at(*object.contained_in);
  return container.has(FunctionalAttribute::Openable) && !container.state.open;
}

}  // namespace

Verdict check_action(const Scene& scene, Action action, const std::string& target,
                     const std::optional<std::string>& instrument) {
  using FA = FunctionalAttribute;
  const SceneObject& obj = scene.at(target);
  const SceneObject* tool = instrument ? &scene.at(*instrument) : nullptr;

  switch (action) {
    case Action::Pick: {
      if (!obj.has(FA::Pickable)) return deny(DenialReason::MissingAttribute, target, FA::Pickable);
      if (obj.state.held) return deny(DenialReason::AlreadyHeld, target);
      if (auto h = scene.held()) return deny(DenialReason::HandsFull, *h);
      if (closed_container(scene, obj)) return deny(DenialReason::ReceptacleClosed, *obj.contained_in);
      return {};
    }
    case Action::Put: {
      if (!tool) return deny(DenialReason::MissingInstrument, target);
      if (*instrument == target) return deny(DenialReason::SameObject, target);
      if (!obj.has(FA::Pickable)) return deny(DenialReason::MissingAttribute, target, FA::Pickable);
      if (!tool->has(FA::Receptacle)) {
        return deny(DenialReason::MissingAttribute, *instrument, FA::Receptacle);
      }
      if (tool->has(FA::Openable) && !tool->state.open) {
        return deny(DenialReason::ReceptacleClosed, *instrument);
      }
      if (closed_container(scene, obj)) return deny(DenialReason::ReceptacleClosed, *obj.contained_in);
      if (is_inside(scene, *instrument, target)) return deny(DenialReason::ContainmentCycle, *instrument);
      if (obj.contained_in == instrument) return deny(DenialReason::AlreadyInState, target);
      return {};
    }
    case Action::Move:
      if (!obj.has(FA::Moveable)) return deny(DenialReason::MissingAttribute, target, FA::Moveable);
      return {};
    case Action::Heat:
    case Action::Cool: {
      const bool heat = action == Action::Heat;
      const FA needed = heat ? FA::Heatable : FA::Coolable;
      if (!tool) return deny(DenialReason::MissingInstrument, target);
      if (*instrument == target) return deny(DenialReason::SameObject, target);
      if (!tool->has(needed)) return deny(DenialReason::MissingAttribute, *instrument, needed);
      if (tool->has(FA::Toggleable) && !tool->state.toggled_on) {
        return deny(DenialReason::InstrumentOff, *instrument);
      }
      if (obj.contained_in != instrument) return deny(DenialReason::NotContained, target);
      const Temperature goal = heat ? Temperature::Heated : Temperature::Cooled;
      if (obj.state.temperature == goal) return deny(DenialReason::AlreadyInState, target);
      return {};
    }
    case Action::ToggleOn:
    case Action::ToggleOff:
      if (!obj.has(FA::Toggleable)) return deny(DenialReason::MissingAttribute, target, FA::Toggleable);
      if (obj.state.toggled_on == (action == Action::ToggleOn)) {
        return deny(DenialReason::AlreadyInState, target);
      }
      return {};
    case Action::Open:
    case Action::Close:
      if (!obj.has(FA::Openable)) return deny(DenialReason::MissingAttribute, target, FA::Openable);
      if (obj.state.open == (action == Action::Open)) return deny(DenialReason::AlreadyInState, target);
      return {};
    case Action::Slice:
      if (!obj.has(FA::Sliceable)) return deny(DenialReason::MissingAttribute, target, FA::Sliceable);
      if (obj.state.sliced) return deny(DenialReason::AlreadyInState, target);
      return {};
    case Action::Fill:
      if (!obj.has(FA::Fillable)) return deny(DenialReason::MissingAttribute, target, FA::Fillable);
      if (obj.state.filled) return deny(DenialReason::AlreadyInState, target);
      return {};
  }
  return {};
}

Scene apply_action(const Scene& scene, Action action, const std::string& target,
                   const std::optional<std::string>& instrument) {
  const Verdict verdict = check_action(scene, action, target, instrument);
  if (!verdict.allowed) {
    throw Error(ErrorCode::ActionDenied,
                std::string(action_name(action)) + "(" + target + "): " + verdict.describe());
  }
  Scene next = scene;
  SceneObject& obj = next.objects_.at(target);
  switch (action) {
    case Action::Pick:
      obj.contained_in.reset();
      obj.state.held = true;
      break;
    case Action::Put:
      obj.contained_in = *instrument;
      obj.state.held = false;
      break;
    case Action::Move:
      break;
    case Action::Heat:
      obj.state.temperature = Temperature::Heated;
      break;
    case Action::Cool:
      obj.state.temperature = Temperature::Cooled;
      break;
    case Action::ToggleOn:
    case Action::ToggleOff:
      obj.state.toggled_on = action == Action::ToggleOn;
      break;
    case Action::Open:
    case Action::Close:
      obj.state.open = action == Action::Open;
      break;
    case Action::Slice:
      obj.state.sliced = true;
      break;
    case Action::Fill:
      obj.state.filled = true;
      break;
  }
  return next;
}

double geometric_error_2d(const Eigen::Vector2d& physical_cm, const Eigen::Vector2d& digital_cm) {
  if (!physical_cm.allFinite() || !digital_cm.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "map coordinates");
  }
  return (physical_cm - digital_cm).norm();
}

namespace {

[[noreturn]] void parse_error(std::size_t line_no, const std::string& what) {
  throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": " + what);
}

bool parse_bool(std::string_view s, std::size_t line_no) {
  s = detail::trim(s);
  if (s == "true") return true;
  if (s == "false") return false;
  parse_error(line_no, "expected true|false, got '" + std::string(s) + "'");
}

void parse_state(std::string_view field, ObjectState& state, std::size_t line_no) {
  for (auto token : detail::split(field, ';')) {
    token = detail::trim(token);
    if (token.empty()) continue;
    if (token == "open") state.open = true;
    else if (token == "on") state.toggled_on = true;
    else if (token == "filled") state.filled = true;
    else if (token == "sliced") state.sliced = true;
    else if (token == "held") state.held = true;
    else if (token == "heated") state.temperature = Temperature::Heated;
    else if (token == "cooled") state.temperature = Temperature::Cooled;
    else parse_error(line_no, "unknown state '" + std::string(token) + "'");
  }
}

std::string state_text(const ObjectState& s) {
  std::vector<std::string_view> tokens;
  if (s.open) tokens.push_back("open");
  if (s.toggled_on) tokens.push_back("on");
  if (s.filled) tokens.push_back("filled");
  if (s.sliced) tokens.push_back("sliced");
  if (s.held) tokens.push_back("held");
  if (s.temperature == Temperature::Heated) tokens.push_back("heated");
  if (s.temperature == Temperature::Cooled) tokens.push_back("cooled");
  std::string out;
  for (auto t : tokens) out += (out.empty() ? "" : ";") + std::string(t);
  return out;
}

}  // namespace

Scene load_scene(std::string_view text) {
  std::vector<SceneObject> objects;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) {
      line = line.substr(0, hash);
    }
    if (detail::trim(line).empty()) continue;

    auto fields = detail::split(line, '|');
    for (auto& f : fields) f = detail::trim(f);
    if (fields.size() < 5 || fields.size() > 7) {
      parse_error(line_no, "expected 5 to 7 '|'-separated fields");
    }
    SceneObject obj;
    obj.id = std::string(fields[0]);
    obj.name = std::string(fields[1]);
    if (obj.id.empty()) parse_error(line_no, "empty id");

    const auto coords = detail::split(fields[2], ',');
    if (coords.size() != 2 && coords.size() != 3) parse_error(line_no, "expected x,y[,height]");
    std::array<double, 3> v{};
    for (std::size_t i = 0; i < coords.size(); ++i) {
      auto parsed = detail::parse_double(coords[i]);
      if (!parsed || !std::isfinite(*parsed)) parse_error(line_no, "bad coordinate");
      v[i] = *parsed;
    }
    obj.pose_cm = {v[0], v[1]};
    if (coords.size() == 3) obj.height_cm = v[2];

    for (auto name : detail::split(fields[3], ';')) {
      name = detail::trim(name);
      if (!name.empty()) obj.attributes.insert(parse_attribute(name));
    }

    const auto flags = detail::split(fields[4], ',');
    if (flags.size() != 2) parse_error(line_no, "expected gravity,collision");
    obj.physical = {parse_bool(flags[0], line_no), parse_bool(flags[1], line_no)};

    if (fields.size() >= 6 && !fields[5].empty()) obj.contained_in = std::string(fields[5]);
    if (fields.size() == 7) parse_state(fields[6], obj.state, line_no);
    objects.push_back(std::move(obj));
  }
  return Scene(std::move(objects));
}

std::string serialize_scene(const Scene& scene) {
  std::ostringstream out;
  for (const auto& [id, obj] : scene.objects()) {
    out << id << " | " << obj.name << " | " << detail::format_double(obj.pose_cm.x()) << ','
        << detail::format_double(obj.pose_cm.y());
    if (obj.height_cm) out << ',' << detail::format_double(*obj.height_cm);
    out << " | ";
    bool first = true;
    for (auto a : obj.attributes) {
      out << (first ? "" : ";") << attribute_name(a);
      first = false;
    }
    out << " | " << (obj.physical.has_gravity ? "true" : "false") << ','
        << (obj.physical.has_collision ? "true" : "false");
    const std::string state = state_text(obj.state);
    if (obj.contained_in || !state.empty()) out << " | " << obj.contained_in.value_or("");
    if (!state.empty()) out << " | " << state;
    out << '\n';
  }
  return out.str();
}

std::vector<ConsistencyRow> geometric_consistency(const Scene& physical, const Scene& digital) {
  std::vector<ConsistencyRow> rows;
  for (const auto& [id, obj] : physical.objects()) {
    if (!digital.contains(id)) continue;
    const auto& twin = digital.at(id);
    rows.push_back({id, obj.pose_cm, twin.pose_cm, geometric_error_2d(obj.pose_cm, twin.pose_cm)});
  }
  return rows;
}

}  // namespace dtwin::scene

#pragma once

#include <array>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dtwin/error.hpp"

namespace dtwin::scene {

enum class FunctionalAttribute {
  Pickable,
  Moveable,
  Heatable,
  Coolable,
  Receptacle,
  Toggleable,
  Openable,
  Sliceable,
  Fillable,
};

inline constexpr std::array kAllAttributes = {
    FunctionalAttribute::Pickable,   FunctionalAttribute::Moveable,
    FunctionalAttribute::Heatable,   FunctionalAttribute::Coolable,
    FunctionalAttribute::Receptacle, FunctionalAttribute::Toggleable,
    FunctionalAttribute::Openable,   FunctionalAttribute::Sliceable,
    FunctionalAttribute::Fillable,
};

std::string_view attribute_name(FunctionalAttribute attribute) noexcept;
/// Throws UnknownAttribute.
FunctionalAttribute parse_attribute(std::string_view name);

enum class Action { Pick, Put, Move, Heat, Cool, ToggleOn, ToggleOff, Open, Close, Slice, Fill };

inline constexpr std::array kAllActions = {
    Action::Pick,      Action::Put,  Action::Move,  Action::Heat,  Action::Cool, Action::ToggleOn,
    Action::ToggleOff, Action::Open, Action::Close, Action::Slice, Action::Fill,
};

std::string_view action_name(Action action) noexcept;
/// Throws ParseError.
Action parse_action(std::string_view name);

enum class Temperature { Normal, Heated, Cooled };

struct PhysicalFlags {
  bool has_gravity = true;
  bool has_collision = true;

  friend bool operator==(const PhysicalFlags&, const PhysicalFlags&) = default;
};

struct ObjectState {
  bool toggled_on = false;
  bool open = false;
  bool filled = false;
  bool sliced = false;
  bool held = false;
  Temperature temperature = Temperature::Normal;

  friend bool operator==(const ObjectState&, const ObjectState&) = default;
};

// Household object: map-plane pose (cm, origin at the map's upper-left
// corner), physical flags and functional attributes.
struct SceneObject {
  std::string id;
  std::string name;
  Eigen::Vector2d pose_cm = Eigen::Vector2d::Zero();
  std::optional<double> height_cm;
  std::set<FunctionalAttribute> attributes;
  PhysicalFlags physical;
  ObjectState state;
  std::optional<std::string> contained_in;

  bool has(FunctionalAttribute a) const { return attributes.count(a) != 0; }

  friend bool operator==(const SceneObject&, const SceneObject&) = default;
};

enum class DenialReason {
  None,
  MissingAttribute,
  MissingInstrument,
  SameObject,
  HandsFull,
  AlreadyHeld,
  ReceptacleClosed,
  ContainmentCycle,
  InstrumentOff,
  NotContained,
  AlreadyInState,
};

std::string_view denial_name(DenialReason reason) noexcept;

struct Verdict {
  bool allowed = true;
  DenialReason reason = DenialReason::None;
  std::optional<FunctionalAttribute> attribute;  // set for MissingAttribute
  std::string object;                            // id the reason refers to

  /// "MissingAttribute(Heatable)" style text.
  std::string describe() const;
};

class Scene {
 public:
  Scene() = default;

  /// Throws ParseError on a repeated id, otherwise as check_invariants().
  explicit Scene(std::vector<SceneObject> objects);

  const std::map<std::string, SceneObject>& objects() const noexcept { return objects_; }
  /// Throws UnknownObject.
  const SceneObject& at(const std::string& id) const;
  bool contains(const std::string& id) const { return objects_.count(id) != 0; }
  std::size_t size() const noexcept { return objects_.size(); }

  /// Id of the held object, if any.
  std::optional<std::string> held() const;

  /// Throws the first broken invariant: DanglingContainment,
  /// ContainmentCycle or InvalidState.
  void check_invariants() const;

  friend bool operator==(const Scene&, const Scene&) = default;

 private:
  friend Scene apply_action(const Scene&, Action, const std::string&,
                            const std::optional<std::string>&);
  std::map<std::string, SceneObject> objects_;
};

/// Pure verdict for one action. Throws UnknownObject.
Verdict check_action(const Scene& scene, Action action, const std::string& target,
                     const std::optional<std::string>& instrument = std::nullopt);

/// New scene with the action's effect. Throws ActionDenied with the verdict
/// text; the input scene is never modified.
Scene apply_action(const Scene& scene, Action action, const std::string& target,
                   const std::optional<std::string>& instrument = std::nullopt);

/// Euclidean distance on the map plane, in cm.
double geometric_error_2d(const Eigen::Vector2d& physical_cm, const Eigen::Vector2d& digital_cm);

/// Line format, one object per record:
///   id | name | x,y[,height] | Attr;Attr | gravity,collision [| container [| state]]
/// gravity/collision are true|false; state is ';'-separated from
/// open, on, filled, sliced, held, heated, cooled. '#' starts a comment.
Scene load_scene(std::string_view text);

/// Canonical text: records in id order, shortest round-trip numbers,
/// attributes in declaration order, trailing empty fields dropped.
std::string serialize_scene(const Scene& scene);

struct ConsistencyRow {
  std::string id;
  Eigen::Vector2d physical_cm;
  Eigen::Vector2d digital_cm;
  double error_cm = 0.0;
};

/// Per-object map-plane error for ids present in both scenes, in id order.
std::vector<ConsistencyRow> geometric_consistency(const Scene& physical, const Scene& digital);

}  // namespace dtwin::scene

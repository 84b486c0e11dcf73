#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "dtwin/error.hpp"
#include "dtwin/kinematics.hpp"

namespace dtwin::urdf {

enum class JointKind { Revolute, Continuous, Prismatic, Fixed };

std::string_view kind_name(JointKind kind) noexcept;

struct Joint {
  std::string name;
  JointKind kind = JointKind::Fixed;
  std::string parent_link;
  std::string child_link;
  Eigen::Vector3d origin_xyz = Eigen::Vector3d::Zero();
  Eigen::Vector3d origin_rpy = Eigen::Vector3d::Zero();
  Eigen::Vector3d axis = Eigen::Vector3d::UnitX();
  double limit_lower = 0.0;
  double limit_upper = 0.0;

  bool movable() const noexcept { return kind != JointKind::Fixed; }

  /// Transform from parent link frame to child link frame at `value`.
  HomogeneousTransform transform(double value) const;

  friend bool operator==(const Joint&, const Joint&) = default;
};

struct Link {
  std::string name;
  std::optional<std::string> visual_mesh;
  std::optional<std::string> material;

  friend bool operator==(const Link&, const Link&) = default;
};

struct RobotModel {
  std::string name;
  std::map<std::string, Link> links;
  std::map<std::string, Joint> joints;
  std::string root_link;

  /// Joint whose child is `link`, if any. Assumes a validated model.
  const Joint* parent_joint(const std::string& link) const;
  std::vector<const Joint*> child_joints(const std::string& link) const;
  /// Links with no child joints, in name order.
  std::vector<std::string> leaf_links() const;

  friend bool operator==(const RobotModel&, const RobotModel&) = default;
};

struct Violation {
  ErrorCode code;
  std::string element;

  friend bool operator==(const Violation&, const Violation&) = default;
};

/// Parses a URDF document. Only robot, link, joint, origin, axis, limit,
/// visual (mesh filename) and material are read; everything else is skipped.
/// The result is validated and the first violation is thrown as an Error.
RobotModel parse_urdf(std::string_view xml_text);

/// Every broken model invariant, ordered by check then element name.
std::vector<Violation> validate(const RobotModel& model);

/// Deterministic XML: links then joints in name order, 17 significant digits.
std::string serialize_urdf(const RobotModel& model);

/// Joints from `base` down to `tip`, parent first. Throws UnknownLink, NoPath.
std::vector<Joint> kinematic_chain(const RobotModel& model, const std::string& base,
                                   const std::string& tip);

/// Pose of `tip` in `base`. Every movable joint on the path needs a value in
/// `joint_values`; names outside the model are rejected (UnknownJoint).
HomogeneousTransform forward_kinematics(const RobotModel& model,
                                        const std::map<std::string, double>& joint_values,
                                        const std::string& base, const std::string& tip);

/// Roll-pitch-yaw to rotation, Rz(yaw) Ry(pitch) Rx(roll).
Eigen::Matrix3d rpy_to_rotation(const Eigen::Vector3d& rpy);

}  // namespace dtwin::urdf

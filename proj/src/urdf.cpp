#include "dtwin/urdf.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <set>
#include <sstream>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "text_util.hpp"

namespace dtwin::urdf {

namespace pt = boost::property_tree;

std::string_view kind_name(JointKind kind) noexcept {
  switch (kind) {
    case JointKind::Revolute: return "revolute";
    case JointKind::Continuous: return "continuous";
    case JointKind::Prismatic: return "prismatic";
    case JointKind::Fixed: return "fixed";
  }
  return "fixed";
}

Eigen::Matrix3d rpy_to_rotation(const Eigen::Vector3d& rpy) {
  return (Eigen::AngleAxisd(rpy.z(), Eigen::Vector3d::UnitZ()) *
          Eigen::AngleAxisd(rpy.y(), Eigen::Vector3d::UnitY()) *
          Eigen::AngleAxisd(rpy.x(), Eigen::Vector3d::UnitX()))
      .toRotationMatrix();
}

HomogeneousTransform Joint::transform(double value) const {
  HomogeneousTransform t = HomogeneousTransform::Identity();
  t.linear() = rpy_to_rotation(origin_rpy);
  t.translation() = origin_xyz;
  switch (kind) {
    case JointKind::Revolute:
    case JointKind::Continuous: {
      HomogeneousTransform motion = HomogeneousTransform::Identity();
      motion.linear() = Eigen::AngleAxisd(value, axis).toRotationMatrix();
      return t * motion;
    }
    case JointKind::Prismatic: {
      HomogeneousTransform motion = HomogeneousTransform::Identity();
      motion.translation() = value * axis;
      return t * motion;
    }
    case JointKind::Fixed:
      break;
  }
  return t;
}

const Joint* RobotModel::parent_joint(const std::string& link) const {
  for (const auto& [name, joint] : joints) {
    if (joint.child_link == link) return &joint;
  }
  return nullptr;
}

std::vector<const Joint*> RobotModel::child_joints(const std::string& link) const {
  std::vector<const Joint*> out;
  for (const auto& [name, joint] : joints) {
    if (joint.parent_link == link) out.push_back(&joint);
  }
  return out;
}

std::vector<std::string> RobotModel::leaf_links() const {
  std::set<std::string> parents;
  for (const auto& [name, joint] : joints) parents.insert(joint.parent_link);
  std::vector<std::string> out;
  for (const auto& [name, link] : links) {
    if (!parents.count(name)) out.push_back(name);
  }
  return out;
}

namespace {

[[noreturn]] void malformed(const std::string& what) {
  throw Error(ErrorCode::MalformedXml, what);
}

std::optional<std::string> attribute(const pt::ptree& node, const char* name) {
  if (auto attrs = node.get_child_optional("<xmlattr>")) {
    if (auto v = attrs->get_optional<std::string>(name)) return *v;
  }
  return std::nullopt;
}

std::string required_attribute(const pt::ptree& node, const char* name, const std::string& ctx) {
  auto v = attribute(node, name);
  if (!v || detail::trim(*v).empty()) malformed(ctx + ": missing attribute '" + name + "'");
  return std::string(detail::trim(*v));
}

double parse_number(std::string_view text, const std::string& ctx) {
  auto v = detail::parse_double(text);
  if (!v || std::isnan(*v)) malformed(ctx + ": bad number '" + std::string(text) + "'");
  return *v;
}

Eigen::Vector3d parse_vector3(const std::string& text, const std::string& ctx) {
  std::istringstream in(text);
  std::vector<std::string> tokens;
  for (std::string tok; in >> tok;) tokens.push_back(tok);
  if (tokens.size() != 3) malformed(ctx + ": expected three numbers");
  Eigen::Vector3d v;
  for (int i = 0; i < 3; ++i) v[i] = parse_number(tokens[static_cast<std::size_t>(i)], ctx);
  if (!v.allFinite()) malformed(ctx + ": non-finite value");
  return v;
}

JointKind parse_kind(const std::string& type, const std::string& ctx) {
  if (type == "revolute") return JointKind::Revolute;
  if (type == "continuous") return JointKind::Continuous;
  if (type == "prismatic") return JointKind::Prismatic;
  if (type == "fixed") return JointKind::Fixed;
  malformed(ctx + ": unsupported joint type '" + type + "'");
}

Link parse_link(const pt::ptree& node) {
  Link link;
  link.name = required_attribute(node, "name", "link");
  if (auto visual = node.get_child_optional("visual")) {
    if (auto mesh = visual->get_child_optional("geometry.mesh")) {
      link.visual_mesh = attribute(*mesh, "filename");
    }
    if (auto material = visual->get_child_optional("material")) {
      link.material = attribute(*material, "name");
    }
  }
  return link;
}

Joint parse_joint(const pt::ptree& node) {
  Joint joint;
  joint.name = required_attribute(node, "name", "joint");
  const std::string ctx = "joint '" + joint.name + "'";
  joint.kind = parse_kind(required_attribute(node, "type", ctx), ctx);

  auto parent = node.get_child_optional("parent");
  auto child = node.get_child_optional("child");
  if (!parent || !child) malformed(ctx + ": needs <parent> and <child>");
  joint.parent_link = required_attribute(*parent, "link", ctx + " <parent>");
  joint.child_link = required_attribute(*child, "link", ctx + " <child>");

  if (auto origin = node.get_child_optional("origin")) {
    if (auto xyz = attribute(*origin, "xyz")) joint.origin_xyz = parse_vector3(*xyz, ctx);
    if (auto rpy = attribute(*origin, "rpy")) joint.origin_rpy = parse_vector3(*rpy, ctx);
  }
  if (auto axis = node.get_child_optional("axis")) {
    if (auto xyz = attribute(*axis, "xyz")) {
      Eigen::Vector3d a = parse_vector3(*xyz, ctx + " <axis>");
      const double norm = a.norm();
      if (!(norm > 0.0)) malformed(ctx + ": zero-length axis");
      // Already-unit axes are kept bit-exact so re-parsing is a fixpoint.
      if (std::abs(norm - 1.0) > 1e-12) a /= norm;
      joint.axis = a;
    }
  }

  const auto limit = node.get_child_optional("limit");
  switch (joint.kind) {
    case JointKind::Revolute:
    case JointKind::Prismatic:
      if (!limit) throw Error(ErrorCode::MissingLimit, joint.name);
      joint.limit_lower = parse_number(attribute(*limit, "lower").value_or("0"), ctx);
      joint.limit_upper = parse_number(attribute(*limit, "upper").value_or("0"), ctx);
      break;
    case JointKind::Continuous:
      joint.limit_lower = -std::numeric_limits<double>::infinity();
      joint.limit_upper = std::numeric_limits<double>::infinity();
      break;
    case JointKind::Fixed:
      break;
  }
  return joint;
}

std::string root_of(const RobotModel& model) {
  std::set<std::string> children;
  for (const auto& [name, joint] : model.joints) children.insert(joint.child_link);
  std::string root;
  int count = 0;
  for (const auto& [name, link] : model.links) {
    if (!children.count(name)) {
      root = name;
      ++count;
    }
  }
  return count == 1 ? root : std::string();
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string vec3(const Eigen::Vector3d& v) {
  return detail::format_double17(v.x()) + " " + detail::format_double17(v.y()) + " " +
         detail::format_double17(v.z());
}

}  // namespace

RobotModel parse_urdf(std::string_view xml_text) {
  pt::ptree tree;
  try {
    std::istringstream in{std::string(xml_text)};
    pt::read_xml(in, tree, pt::xml_parser::no_comments);
  } catch (const pt::xml_parser_error& e) {
    malformed(e.message() + " (line " + std::to_string(e.line()) + ")");
  }
  const auto robot = tree.get_child_optional("robot");
  if (!robot) malformed("no <robot> element");

  RobotModel model;
  model.name = attribute(*robot, "name").value_or("");
  for (const auto& [tag, node] : *robot) {
    if (tag == "link") {
      Link link = parse_link(node);
      const std::string name = link.name;
      if (!model.links.emplace(name, std::move(link)).second) {
        throw Error(ErrorCode::DuplicateName, "link '" + name + "'");
      }
    } else if (tag == "joint") {
      Joint joint = parse_joint(node);
      const std::string name = joint.name;
      if (!model.joints.emplace(name, std::move(joint)).second) {
        throw Error(ErrorCode::DuplicateName, "joint '" + name + "'");
      }
    }
  }
  model.root_link = root_of(model);

  const auto violations = validate(model);
  if (!violations.empty()) {
    throw Error(violations.front().code, violations.front().element);
  }
  return model;
}

std::vector<Violation> validate(const RobotModel& model) {
  std::vector<Violation> out;

  for (const auto& [name, joint] : model.joints) {
    if (!model.links.count(joint.parent_link) || !model.links.count(joint.child_link)) {
      out.push_back({ErrorCode::DanglingReference, name});
    }
  }

  std::map<std::string, int> parent_count;
  for (const auto& [name, joint] : model.joints) ++parent_count[joint.child_link];
  for (const auto& [link, count] : parent_count) {
    if (count > 1) out.push_back({ErrorCode::MultipleParents, link});
  }

  // Directed cycle search over parent -> child edges; self-loops included.
  std::map<std::string, std::vector<std::string>> edges;
  for (const auto& [name, joint] : model.joints) {
    edges[joint.parent_link].push_back(joint.child_link);
  }
  std::map<std::string, int> colour;  // 0 unvisited, 1 on stack, 2 done
  std::set<std::string> cyclic;
  std::function<void(const std::string&)> visit = [&](const std::string& node) {
    colour[node] = 1;
    for (const auto& next : edges[node]) {
      if (colour[next] == 1) {
        cyclic.insert(next);
      } else if (colour[next] == 0) {
        visit(next);
      }
    }
    colour[node] = 2;
  };
  for (const auto& [node, targets] : edges) {
    if (colour[node] == 0) visit(node);
  }
  for (const auto& link : cyclic) out.push_back({ErrorCode::CycleDetected, link});

  std::vector<std::string> roots;
  for (const auto& [name, link] : model.links) {
    if (!parent_count.count(name)) roots.push_back(name);
  }
  if (roots.size() != 1) {
    std::string names;
    for (const auto& r : roots) names += (names.empty() ? "" : ",") + r;
    out.push_back({ErrorCode::MissingRoot, names});
  } else if (model.root_link != roots.front()) {
    out.push_back({ErrorCode::MissingRoot, model.root_link});
  }

  for (const auto& [name, joint] : model.joints) {
    if ((joint.kind == JointKind::Revolute || joint.kind == JointKind::Prismatic) &&
        !(joint.limit_lower <= joint.limit_upper)) {
      out.push_back({ErrorCode::InvertedLimits, name});
    }
  }
  for (const auto& [name, joint] : model.joints) {
    if (joint.movable() && std::abs(joint.axis.norm() - 1.0) > 1e-9) {
      out.push_back({ErrorCode::NotUnit, name});
    }
  }
  for (const auto& [key, link] : model.links) {
    if (key.empty() || key != link.name) out.push_back({ErrorCode::MalformedXml, key});
  }
  for (const auto& [key, joint] : model.joints) {
    if (key.empty() || key != joint.name) out.push_back({ErrorCode::MalformedXml, key});
  }
  return out;
}

std::string serialize_urdf(const RobotModel& model) {
  std::ostringstream out;
  out << "<?xml version=\"1.0\"?>\n";
  out << "<robot name=\"" << escape(model.name) << "\">\n";
  for (const auto& [name, link] : model.links) {
    if (!link.visual_mesh && !link.material) {
      out << "  <link name=\"" << escape(name) << "\"/>\n";
      continue;
    }
    out << "  <link name=\"" << escape(name) << "\">\n    <visual>\n";
    if (link.visual_mesh) {
      out << "      <geometry>\n        <mesh filename=\"" << escape(*link.visual_mesh)
          << "\"/>\n      </geometry>\n";
    }
    if (link.material) out << "      <material name=\"" << escape(*link.material) << "\"/>\n";
    out << "    </visual>\n  </link>\n";
  }
  for (const auto& [name, joint] : model.joints) {
    out << "  <joint name=\"" << escape(name) << "\" type=\"" << kind_name(joint.kind)
        << "\">\n";
    out << "    <parent link=\"" << escape(joint.parent_link) << "\"/>\n";
    out << "    <child link=\"" << escape(joint.child_link) << "\"/>\n";
    out << "    <origin xyz=\"" << vec3(joint.origin_xyz) << "\" rpy=\""
        << vec3(joint.origin_rpy) << "\"/>\n";
    out << "    <axis xyz=\"" << vec3(joint.axis) << "\"/>\n";
    if (joint.kind == JointKind::Revolute || joint.kind == JointKind::Prismatic) {
      out << "    <limit lower=\"" << detail::format_double17(joint.limit_lower)
          << "\" upper=\"" << detail::format_double17(joint.limit_upper) << "\"/>\n";
    }
    out << "  </joint>\n";
  }
  out << "</robot>\n";
  return out.str();
}

std::vector<Joint> kinematic_chain(const RobotModel& model, const std::string& base,
                                   const std::string& tip) {
  if (!model.links.count(base)) throw Error(ErrorCode::UnknownLink, base);
  if (!model.links.count(tip)) throw Error(ErrorCode::UnknownLink, tip);
  std::vector<Joint> path;
  std::string link = tip;
  while (link != base) {
    const Joint* joint = model.parent_joint(link);
    if (joint == nullptr || path.size() > model.joints.size()) {
      throw Error(ErrorCode::NoPath, "'" + tip + "' is not below '" + base + "'");
    }
    path.push_back(*joint);
    link = joint->parent_link;
  }
  std::reverse(path.begin(), path.end());
  return path;
}

HomogeneousTransform forward_kinematics(const RobotModel& model,
                                        const std::map<std::string, double>& joint_values,
                                        const std::string& base, const std::string& tip) {
  for (const auto& [name, value] : joint_values) {
    if (!model.joints.count(name)) throw Error(ErrorCode::UnknownJoint, name);
  }
  HomogeneousTransform t = HomogeneousTransform::Identity();
  for (const Joint& joint : kinematic_chain(model, base, tip)) {
    double value = 0.0;
    if (joint.movable()) {
      const auto it = joint_values.find(joint.name);
      if (it == joint_values.end()) throw Error(ErrorCode::MissingJointValue, joint.name);
      value = it->second;
      if (!std::isfinite(value)) throw Error(ErrorCode::NonFiniteInput, joint.name);
      if (value < joint.limit_lower || value > joint.limit_upper) {
        throw Error(ErrorCode::JointValueOutOfRange, joint.name);
      }
    }
    t = t * joint.transform(value);
  }
  return t;
}

}  // namespace dtwin::urdf

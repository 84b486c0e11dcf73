#include <doctest.h>

#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "dtwin/urdf.hpp"
#include "oracle.hpp"

using namespace dtwin;
using namespace dtwin::urdf;

namespace {

std::string slurp(const std::string& rel) {
  std::ifstream in(std::string(FIXTURE_DIR) + "/" + rel);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

ErrorCode parse_error(const std::string& text) {
  try {
    parse_urdf(text);
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("document parsed without error");
  return ErrorCode::IoError;
}

const RobotModel& tiago() {
  static const RobotModel m = parse_urdf(slurp("tiago_arm.urdf"));
  return m;
}

std::map<std::string, double> arm_values(const Eigen::VectorXd& q) {
  std::map<std::string, double> v;
  for (int k = 0; k < 7; ++k) v["arm_" + std::to_string(k + 1) + "_joint"] = q[k];
  return v;
}

// Oracle: parent-to-child transform from the raw URDF fields.
oracle::Mat4 joint_oracle(const Joint& j, double value) {
  const auto& r = j.origin_rpy;
  oracle::Mat4 rx = oracle::rot_x(r.x());
  oracle::Mat4 ry = oracle::identity4();
  ry[0][0] = std::cos(r.y()); ry[0][2] = std::sin(r.y());
  ry[2][0] = -std::sin(r.y()); ry[2][2] = std::cos(r.y());
  const oracle::Mat4 rz = oracle::rot_z(r.z());
  oracle::Mat4 m = oracle::mul(oracle::trans(j.origin_xyz.x(), j.origin_xyz.y(), j.origin_xyz.z()),
                               oracle::mul(rz, oracle::mul(ry, rx)));
  if (j.kind == JointKind::Revolute || j.kind == JointKind::Continuous) {
    REQUIRE(j.axis == Eigen::Vector3d::UnitZ());
    m = oracle::mul(m, oracle::rot_z(value));
  }
  return m;
}

void check_close(const HomogeneousTransform& t, const oracle::Mat4& m, double tol) {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(std::abs(t.matrix()(i, j) - m[i][j]) <= tol);
}

}  // namespace

TEST_CASE("two-link document") {
  const RobotModel m = parse_urdf(slurp("two_link.urdf"));
  CHECK(m.name == "two_link");
  CHECK(m.links.size() == 2);
  CHECK(m.joints.size() == 1);
  CHECK(m.root_link == "base");
  CHECK(validate(m).empty());
  const auto chain = kinematic_chain(m, "base", "arm");
  REQUIRE(chain.size() == 1);
  CHECK(chain[0].name == "base_to_arm");
  CHECK(kinematic_chain(m, "arm", "arm").empty());
  CHECK(forward_kinematics(m, {}, "base", "arm").matrix().isIdentity(0.0));
}

TEST_CASE("TIAGo fixture") {
  const RobotModel& m = tiago();
  CHECK(validate(m).empty());
  CHECK(m.root_link == "base_link");

  const auto chain = kinematic_chain(m, "torso_fixed_link", "arm_7_link");
  std::vector<Joint> revolute;
  for (const auto& j : chain)
    if (j.kind == JointKind::Revolute) revolute.push_back(j);
  REQUIRE(revolute.size() == 7);
  for (int k = 0; k < 7; ++k) {
    CHECK(revolute[static_cast<std::size_t>(k)].name == "arm_" + std::to_string(k + 1) + "_joint");
    CHECK(revolute[static_cast<std::size_t>(k)].limit_lower == oracle::kArm[k].lo);
    CHECK(revolute[static_cast<std::size_t>(k)].limit_upper == oracle::kArm[k].hi);
  }
  CHECK(m.joints.at("arm_1_joint").limit_upper == 2.75);
  CHECK(m.joints.at("arm_3_joint").limit_lower == -3.53);
  CHECK(m.joints.at("arm_3_joint").limit_upper == 1.57);
  CHECK(m.leaf_links() == std::vector<std::string>{"arm_tool_link"});
}

TEST_CASE("malformed fixtures raise their specific error") {
  CHECK(parse_error(slurp("malformed/cycle.urdf")) == ErrorCode::CycleDetected);
  CHECK(parse_error(slurp("malformed/dangling.urdf")) == ErrorCode::DanglingReference);
  CHECK(parse_error(slurp("malformed/inverted_limits.urdf")) == ErrorCode::InvertedLimits);
  CHECK(parse_error(slurp("malformed/duplicate_name.urdf")) == ErrorCode::DuplicateName);
  CHECK(parse_error(slurp("malformed/missing_limit.urdf")) == ErrorCode::MissingLimit);
  CHECK(parse_error(slurp("malformed/not_xml.urdf")) == ErrorCode::MalformedXml);
  CHECK(parse_error(slurp("malformed/two_roots.urdf")) == ErrorCode::MissingRoot);
  CHECK(parse_error("") == ErrorCode::MalformedXml);
  CHECK(parse_error("<robot name='x'><link name='a'/><joint name='j' type='floating'>"
                    "<parent link='a'/><child link='b'/></joint><link name='b'/></robot>") ==
        ErrorCode::MalformedXml);
}

TEST_CASE("validate lists violations of a mutated model") {
  SUBCASE("inverted limits") {
    RobotModel m = tiago();
    auto& j = m.joints.at("arm_4_joint");
    std::swap(j.limit_lower, j.limit_upper);
    const auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0] == Violation{ErrorCode::InvertedLimits, "arm_4_joint"});
  }
  SUBCASE("two joints share a child") {
    RobotModel m = parse_urdf(slurp("two_link.urdf"));
    Joint extra = m.joints.at("base_to_arm");
    extra.name = "second";
    m.joints.emplace(extra.name, extra);
    const auto v = validate(m);
    REQUIRE(v.size() == 1);
    CHECK(v[0].code == ErrorCode::MultipleParents);
    CHECK(v[0].element == "arm");
  }
}

TEST_CASE("quarter turn about z") {
  const std::string doc = R"(<robot name="r">
    <link name="a"/><link name="b"/>
    <joint name="j" type="revolute"><parent link="a"/><child link="b"/>
      <axis xyz="0 0 1"/><limit lower="-3" upper="3"/></joint></robot>)";
  const RobotModel m = parse_urdf(doc);
  const auto t = forward_kinematics(m, {{"j", std::numbers::pi / 2}}, "a", "b");
  Eigen::Matrix3d expected;
  expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
  CHECK((t.linear() - expected).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(t.translation().isZero(0.0));

  CHECK_THROWS_AS(forward_kinematics(m, {}, "a", "b"), Error);
  CHECK_THROWS_AS(forward_kinematics(m, {{"j", 4.0}}, "a", "b"), Error);
  CHECK_THROWS_AS(forward_kinematics(m, {{"j", 0.0}, {"ghost", 0.0}}, "a", "b"), Error);
  CHECK_THROWS_AS(kinematic_chain(m, "b", "a"), Error);
  CHECK_THROWS_AS(kinematic_chain(m, "a", "zzz"), Error);
}

TEST_CASE("prismatic and continuous joints") {
  const std::string doc = R"(<robot name="r">
    <link name="a"/><link name="b"/><link name="c"/>
    <joint name="slide" type="prismatic"><parent link="a"/><child link="b"/>
      <axis xyz="0 2 0"/><limit lower="0" upper="1"/></joint>
    <joint name="spin" type="continuous"><parent link="b"/><child link="c"/>
      <axis xyz="1 0 0"/></joint></robot>)";
  const RobotModel m = parse_urdf(doc);
  CHECK(m.joints.at("slide").axis == Eigen::Vector3d::UnitY());
  const auto t = forward_kinematics(m, {{"slide", 0.25}, {"spin", 10.0}}, "a", "c");
  CHECK((t.translation() - Eigen::Vector3d(0, 0.25, 0)).norm() < 1e-15);
  CHECK(std::abs(t.linear()(1, 1) - std::cos(10.0)) < 1e-12);
}

TEST_CASE("fixed chain with zero origins is identity") {
  const RobotModel m = parse_urdf(R"(<robot name="r"><link name="a"/><link name="b"/><link name="c"/>
    <joint name="ab" type="fixed"><parent link="a"/><child link="b"/></joint>
    <joint name="bc" type="fixed"><parent link="b"/><child link="c"/></joint></robot>)");
  CHECK(forward_kinematics(m, {}, "a", "c").matrix().isIdentity(0.0));
}

TEST_CASE("TIAGo home pose against the per-joint composition oracle") {
  const RobotModel& m = tiago();
  const auto chain = kinematic_chain(m, "base_link", "arm_tool_link");
  oracle::Mat4 expected = oracle::identity4();
  for (const auto& j : chain) expected = oracle::mul(expected, joint_oracle(j, 0.0));
  check_close(forward_kinematics(m, arm_values(Eigen::VectorXd::Zero(7)), "base_link", "arm_tool_link"),
              expected, 1e-9);
}

TEST_CASE("TIAGo arm section reproduces the DH chain") {
  const RobotModel& m = tiago();
  std::mt19937_64 rng(41);
  for (int n = 0; n < 100; ++n) {
    Eigen::VectorXd q(7);
    for (int k = 0; k < 7; ++k)
      q[k] = std::uniform_real_distribution<double>(oracle::kArm[k].lo, oracle::kArm[k].hi)(rng);
    check_close(forward_kinematics(m, arm_values(q), "arm_base_link", "arm_tool_link"),
                oracle::arm_fk(q), 1e-9);
  }
}

TEST_CASE("forward kinematics composes along the path") {
  const RobotModel& m = tiago();
  std::mt19937_64 rng(42);
  const std::vector<std::string> mids = {"torso_fixed_link", "arm_base_link", "arm_2_link",
                                         "arm_5_link", "arm_7_link"};
  for (int n = 0; n < 20; ++n) {
    Eigen::VectorXd q(7);
    for (int k = 0; k < 7; ++k)
      q[k] = std::uniform_real_distribution<double>(oracle::kArm[k].lo, oracle::kArm[k].hi)(rng);
    const auto v = arm_values(q);
    const auto whole = forward_kinematics(m, v, "base_link", "arm_tool_link");
    for (const auto& mid : mids) {
      std::map<std::string, double> first, second;
      for (const auto& j : kinematic_chain(m, "base_link", mid))
        if (j.movable()) first[j.name] = v.at(j.name);
      for (const auto& j : kinematic_chain(m, mid, "arm_tool_link"))
        if (j.movable()) second[j.name] = v.at(j.name);
      const auto composed = forward_kinematics(m, first, "base_link", mid) *
                            forward_kinematics(m, second, mid, "arm_tool_link");
      CHECK((composed.matrix() - whole.matrix()).cwiseAbs().maxCoeff() < 1e-9);
      const Eigen::Matrix3d r = whole.linear();
      CHECK((r.transpose() * r - Eigen::Matrix3d::Identity()).cwiseAbs().maxCoeff() < 1e-9);
    }
  }
}

TEST_CASE("serialize then parse is a fixpoint") {
  for (const char* f : {"tiago_arm.urdf", "two_link.urdf"}) {
    const RobotModel m = parse_urdf(slurp(f));
    const std::string once = serialize_urdf(m);
    const RobotModel back = parse_urdf(once);
    CHECK(back == m);
    CHECK(serialize_urdf(back) == once);
  }
}

TEST_CASE("names with XML metacharacters survive serialization") {
  const RobotModel m = parse_urdf(R"(<robot name="a&amp;b"><link name="x&lt;1"/><link name="y"/>
    <joint name="q&quot;" type="fixed"><parent link="x&lt;1"/><child link="y"/></joint></robot>)");
  CHECK(m.name == "a&b");
  CHECK(parse_urdf(serialize_urdf(m)) == m);
}

TEST_CASE("rpy_to_rotation composes yaw pitch roll") {
  const Eigen::Vector3d rpy(0.3, -0.2, 1.1);
  const Eigen::Matrix3d expected = (Eigen::AngleAxisd(1.1, Eigen::Vector3d::UnitZ()) *
                                    Eigen::AngleAxisd(-0.2, Eigen::Vector3d::UnitY()) *
                                    Eigen::AngleAxisd(0.3, Eigen::Vector3d::UnitX()))
                                       .toRotationMatrix();
  CHECK((rpy_to_rotation(rpy) - expected).cwiseAbs().maxCoeff() < 1e-15);
}

#pragma once

#include <cmath>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Geometry>

#include "dtwin/error.hpp"

namespace dtwin {

template <typename Scalar>
using Transform = Eigen::Transform<Scalar, 3, Eigen::Isometry>;

using HomogeneousTransform = Transform<double>;
using JointVector = Eigen::VectorXd;
using Quaternion = Eigen::Quaterniond;

// Denavit-Hartenberg parameters of one joint plus its angular range.
struct DHRow {
  double alpha = 0.0;
  double a = 0.0;
  double d = 0.0;
  double theta_lower = 0.0;
  double theta_upper = 0.0;
};

// Ordered, non-empty list of DH rows. Immutable once built.
class DHChain {
 public:
  DHChain() = default;
  explicit DHChain(std::vector<DHRow> rows);

  const std::vector<DHRow>& rows() const noexcept { return rows_; }
  Eigen::Index size() const noexcept { return static_cast<Eigen::Index>(rows_.size()); }
  const DHRow& operator[](Eigen::Index k) const { return rows_[static_cast<std::size_t>(k)]; }

  Eigen::VectorXd lower() const;
  Eigen::VectorXd upper() const;

  bool has_finite_limits() const noexcept;
  bool within_limits(const Eigen::Ref<const JointVector>& joints) const;

 private:
  std::vector<DHRow> rows_;
};

struct Pose {
  Eigen::Vector3d position = Eigen::Vector3d::Zero();
  Quaternion orientation = Quaternion::Identity();

  static Pose from_transform(const HomogeneousTransform& transform);
  HomogeneousTransform to_transform() const;
};

enum class PoseErrorMode {
  DoubleCover,  // |q_c . q_o|, so q and -q are the same rotation
  Strict,       // signed dot as written; q vs -q gives 2*pi
};

// Standard DH joint transform, Rz(theta) Tz(d) Tx(a) Rx(alpha), written out
// entry by entry. Unchecked and generic over the scalar type.
template <typename Scalar>
Transform<Scalar> dh_transform(Scalar alpha, Scalar a, Scalar d, Scalar theta) {
  using std::cos;
  using std::sin;
  const Scalar ct = cos(theta), st = sin(theta);
  const Scalar ca = cos(alpha), sa = sin(alpha);
  Transform<Scalar> t;
  t.matrix() << ct, -st * ca, st * sa, a * ct,
                st, ct * ca, -ct * sa, a * st,
                Scalar(0), sa, ca, d,
                Scalar(0), Scalar(0), Scalar(0), Scalar(1);
  return t;
}

/// Checked DH transform for one row. Throws NonFiniteInput.
HomogeneousTransform dh_transform(const DHRow& row, double theta);

/// Product of the per-row transforms from the chain base to the last frame.
/// Limits are not enforced here; throws LengthMismatch / NonFiniteInput.
HomogeneousTransform forward_kinematics(const DHChain& chain,
                                        const Eigen::Ref<const JointVector>& joints);

/// Frames of every joint, base to tip (size == chain length).
std::vector<HomogeneousTransform> forward_kinematics_frames(
    const DHChain& chain, const Eigen::Ref<const JointVector>& joints);

/// Unit quaternion with w >= 0. Throws NotARotation when R is not
/// orthonormal with det +1 (tolerance 1e-6).
Quaternion rotation_to_quaternion(const Eigen::Matrix3d& rotation);

double position_error(const Eigen::Vector3d& current, const Eigen::Vector3d& desired);

/// Geodesic angle between two unit quaternions, in [0, pi] (DoubleCover) or
/// [0, 2*pi] (Strict). Throws NotUnit when either norm is off by > 1e-6.
double pose_error(const Quaternion& current, const Quaternion& desired,
                  PoseErrorMode mode = PoseErrorMode::DoubleCover);

// TIAGo 7-DOF arm, values as tabulated (a and d in meters).
const DHChain& tiago_arm_chain();

inline constexpr std::string_view kTiagoChainName = "tiago_arm_7dof";

/// Looks up a built-in chain. Throws UnknownChain.
const DHChain& chain_by_name(std::string_view name);

/// Parses "alpha,a,d,lower,upper" rows. Blank lines and '#' comments are
/// skipped, as is a header row whose first field is not numeric.
DHChain parse_dh_csv(std::string_view text);

}  // namespace dtwin

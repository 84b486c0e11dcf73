#include "dtwin/kinematics.hpp"

#include <algorithm>
#include <limits>
#include <numbers>
#include <sstream>

#include "text_util.hpp"

namespace dtwin {

namespace {

bool all_finite(const Eigen::Ref<const Eigen::VectorXd>& v) { return v.allFinite(); }

}  // namespace

DHChain::DHChain(std::vector<DHRow> rows) : rows_(std::move(rows)) {
  if (rows_.empty()) throw Error(ErrorCode::InvalidChain, "chain has no rows");
  for (std::size_t k = 0; k < rows_.size(); ++k) {
    const auto& r = rows_[k];
    if (!std::isfinite(r.alpha) || !std::isfinite(r.a) || !std::isfinite(r.d) ||
        std::isnan(r.theta_lower) || std::isnan(r.theta_upper)) {
      throw Error(ErrorCode::NonFiniteInput, "row " + std::to_string(k + 1));
    }
    if (r.theta_lower > r.theta_upper) {
      throw Error(ErrorCode::InvertedLimits, "row " + std::to_string(k + 1));
    }
  }
}

Eigen::VectorXd DHChain::lower() const {
  Eigen::VectorXd v(size());
  for (Eigen::Index k = 0; k < size(); ++k) v[k] = (*this)[k].theta_lower;
  return v;
}

Eigen::VectorXd DHChain::upper() const {
  Eigen::VectorXd v(size());
  for (Eigen::Index k = 0; k < size(); ++k) v[k] = (*this)[k].theta_upper;
  return v;
}

bool DHChain::has_finite_limits() const noexcept {
  for (const auto& r : rows_) {
    if (!std::isfinite(r.theta_lower) || !std::isfinite(r.theta_upper)) return false;
  }
  return true;
}

bool DHChain::within_limits(const Eigen::Ref<const JointVector>& joints) const {
  if (joints.size() != size()) return false;
  for (Eigen::Index k = 0; k < size(); ++k) {
    if (!(joints[k] >= (*this)[k].theta_lower && joints[k] <= (*this)[k].theta_upper)) {
      return false;
    }
  }
  return true;
}

Pose Pose::from_transform(const HomogeneousTransform& transform) {
  return Pose{transform.translation(), rotation_to_quaternion(transform.linear())};
}

HomogeneousTransform Pose::to_transform() const {
  HomogeneousTransform t = HomogeneousTransform::Identity();
  t.linear() = orientation.normalized().toRotationMatrix();
  t.translation() = position;
  return t;
}

HomogeneousTransform dh_transform(const DHRow& row, double theta) {
  if (!std::isfinite(theta) || !std::isfinite(row.alpha) || !std::isfinite(row.a) ||
      !std::isfinite(row.d)) {
    throw Error(ErrorCode::NonFiniteInput, "dh_transform");
  }
  return dh_transform<double>(row.alpha, row.a, row.d, theta);
}

HomogeneousTransform forward_kinematics(const DHChain& chain,
                                        const Eigen::Ref<const JointVector>& joints) {
  if (joints.size() != chain.size()) {
    throw Error(ErrorCode::LengthMismatch, "expected " + std::to_string(chain.size()) +
                                               " joints, got " + std::to_string(joints.size()));
  }
  if (!all_finite(joints)) throw Error(ErrorCode::NonFiniteInput, "joint vector");
  HomogeneousTransform t = dh_transform(chain[0], joints[0]);
  for (Eigen::Index k = 1; k < chain.size(); ++k) t = t * dh_transform(chain[k], joints[k]);
  return t;
}

std::vector<HomogeneousTransform> forward_kinematics_frames(
    const DHChain& chain, const Eigen::Ref<const JointVector>& joints) {
  if (joints.size() != chain.size()) throw Error(ErrorCode::LengthMismatch, "joint vector");
  if (!all_finite(joints)) throw Error(ErrorCode::NonFiniteInput, "joint vector");
  std::vector<HomogeneousTransform> frames;
  frames.reserve(static_cast<std::size_t>(chain.size()));
  HomogeneousTransform t = HomogeneousTransform::Identity();
  for (Eigen::Index k = 0; k < chain.size(); ++k) {
    t = k == 0 ? dh_transform(chain[0], joints[0]) : t * dh_transform(chain[k], joints[k]);
    frames.push_back(t);
  }
  return frames;
}

Quaternion rotation_to_quaternion(const Eigen::Matrix3d& rotation) {
  if (!rotation.allFinite()) throw Error(ErrorCode::NonFiniteInput, "rotation");
  const double ortho = (rotation.transpose() * rotation - Eigen::Matrix3d::Identity())
                           .cwiseAbs()
                           .maxCoeff();
  if (ortho > 1e-6 || std::abs(rotation.determinant() - 1.0) > 1e-6) {
    throw Error(ErrorCode::NotARotation, "matrix is not a proper rotation");
  }
  // Eigen picks the largest of (trace, diagonal) before the square root.
  Quaternion q(rotation);
  q.normalize();
  if (q.w() < 0.0) q.coeffs() = -q.coeffs();
  return q;
}

double position_error(const Eigen::Vector3d& current, const Eigen::Vector3d& desired) {
  if (!current.allFinite() || !desired.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "position");
  }
  return (current - desired).norm();
}

double pose_error(const Quaternion& current, const Quaternion& desired, PoseErrorMode mode) {
  if (!current.coeffs().allFinite() || !desired.coeffs().allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "quaternion");
  }
  if (std::abs(current.norm() - 1.0) > 1e-6 || std::abs(desired.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::NotUnit, "quaternion is not unit length");
  }
  double dot = desired.x() * current.x() + desired.y() * current.y() +
               desired.z() * current.z() + desired.w() * current.w();
  if (mode == PoseErrorMode::DoubleCover) dot = std::abs(dot);
  return 2.0 * std::acos(std::clamp(dot, -1.0, 1.0));
}

const DHChain& tiago_arm_chain() {
  constexpr double half_pi = std::numbers::pi / 2.0;
  static const DHChain chain({
      {0.0, 0.15505, -0.151, 0.0, 2.75},
      {half_pi, 0.125, -0.0165, -1.57, 1.09},
      {-half_pi, 0.0, -0.0895, -3.53, 1.57},
      {half_pi, 0.02, -0.027, -0.39, 2.36},
      {-half_pi, 0.02, 0.162, -2.09, 2.09},
      {half_pi, 0.0, 0.0, -1.41, 1.41},
      {-half_pi, 0.0, 0.0, -2.09, 2.09},
  });
  return chain;
}

const DHChain& chain_by_name(std::string_view name) {
  if (name == kTiagoChainName) return tiago_arm_chain();
  throw Error(ErrorCode::UnknownChain, std::string(name));
}

DHChain parse_dh_csv(std::string_view text) {
  std::vector<DHRow> rows;
  std::size_t line_no = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    auto line = detail::trim(text.substr(start, end - start));
    start = end + 1;
    ++line_no;
    if (line.empty() || line.front() == '#') continue;
    const auto fields = detail::split(line, ',');
    if (rows.empty() && !detail::parse_double(fields.front())) continue;  // header
    if (fields.size() != 5) {
      throw Error(ErrorCode::ParseError,
                  "line " + std::to_string(line_no) + ": expected 5 columns");
    }
    double v[5];
    for (int i = 0; i < 5; ++i) {
      auto parsed = detail::parse_double(fields[static_cast<std::size_t>(i)]);
      if (!parsed) {
        throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": bad number");
      }
      v[i] = *parsed;
    }
    rows.push_back({v[0], v[1], v[2], v[3], v[4]});
  }
  return DHChain(std::move(rows));
}

}  // namespace dtwin

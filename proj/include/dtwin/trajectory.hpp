#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/Dense>

#include "dtwin/kinematics.hpp"

namespace dtwin {

using QuinticCoefficients = Eigen::Matrix<double, 6, 1>;

struct BoundaryState {
  double position = 0.0;
  double velocity = 0.0;
  double acceleration = 0.0;
};

/// Coefficients a0..a5 of s(t) = sum a_i t^i meeting position, velocity and
/// acceleration at t = 0 and t = duration. Throws NonPositiveDuration.
QuinticCoefficients quintic_coefficients(const BoundaryState& start, const BoundaryState& end,
                                         double duration);

struct TrajectorySample {
  double time = 0.0;
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
  Eigen::VectorXd acceleration;
};

// One quintic per joint. Coefficients are held in normalized time
// s = t / duration, so rescaling the duration leaves positions at the same
// s bit-identical. Endpoint positions are returned exactly as planned.
class QuinticSegment {
 public:
  QuinticSegment(const Eigen::Ref<const Eigen::VectorXd>& start_position,
                 const Eigen::Ref<const Eigen::VectorXd>& end_position,
                 Eigen::Matrix<double, Eigen::Dynamic, 6> normalized, double duration,
                 bool rest_to_rest);

  double duration() const noexcept { return duration_; }
  Eigen::Index joint_count() const noexcept { return normalized_.rows(); }
  bool rest_to_rest() const noexcept { return rest_to_rest_; }
  const Eigen::VectorXd& start_position() const noexcept { return start_; }
  const Eigen::VectorXd& end_position() const noexcept { return end_; }

  /// Time-domain coefficients, one row a0..a5 per joint.
  Eigen::Matrix<double, Eigen::Dynamic, 6> coefficients() const;

  /// t is clamped to [0, duration].
  TrajectorySample evaluate(double t) const;

 private:
  Eigen::VectorXd start_;
  Eigen::VectorXd end_;
  Eigen::Matrix<double, Eigen::Dynamic, 6> normalized_;
  double duration_;
  bool rest_to_rest_;
};

/// Rest-to-rest quintic per joint. When a chain is given, start and goal
/// must be within its limits (LimitViolation).
QuinticSegment plan_joint_trajectory(const Eigen::Ref<const JointVector>& start,
                                     const Eigen::Ref<const JointVector>& goal, double duration,
                                     const DHChain* chain = nullptr);

/// General boundary conditions per joint.
QuinticSegment plan_joint_trajectory(const std::vector<BoundaryState>& start,
                                     const std::vector<BoundaryState>& goal, double duration);

/// Uniform grid of sample_count points including both ends. Throws
/// TooFewSamples.
std::vector<TrajectorySample> sample_trajectory(const QuinticSegment& segment, int sample_count);

/// Header t,q1..qn,v1..vn,a1..an then one row per sample.
void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySample>& samples);

}  // namespace dtwin

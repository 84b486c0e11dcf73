#include "dtwin/trajectory.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <string>

#include "text_util.hpp"

namespace dtwin {

namespace {

void check_duration(double duration) {
  if (!(duration > 0.0) || !std::isfinite(duration)) {
    throw Error(ErrorCode::NonPositiveDuration, "duration must be positive and finite");
  }
}

void check_finite(const BoundaryState& b) {
  if (!std::isfinite(b.position) || !std::isfinite(b.velocity) ||
      !std::isfinite(b.acceleration)) {
    throw Error(ErrorCode::NonFiniteInput, "boundary state");
  }
}

// Coefficients of the polynomial in s = t / duration.
Eigen::Matrix<double, 1, 6> normalized_row(const BoundaryState& start, const BoundaryState& end,
                                           double duration) {
  const double h = end.position - start.position;
  const double v0 = start.velocity * duration;
  const double v1 = end.velocity * duration;
  const double a0 = start.acceleration * duration * duration;
  const double a1 = end.acceleration * duration * duration;
  Eigen::Matrix<double, 1, 6> b;
  b << start.position, v0, 0.5 * a0,
       10.0 * h - 6.0 * v0 - 4.0 * v1 - 1.5 * a0 + 0.5 * a1,
       -15.0 * h + 8.0 * v0 + 7.0 * v1 + 1.5 * a0 - a1,
       6.0 * h - 3.0 * v0 - 3.0 * v1 - 0.5 * a0 + 0.5 * a1;
  return b;
}

}  // namespace

QuinticCoefficients quintic_coefficients(const BoundaryState& start, const BoundaryState& end,
                                         double duration) {
  check_duration(duration);
  check_finite(start);
  check_finite(end);
  const Eigen::Matrix<double, 1, 6> b = normalized_row(start, end, duration);
  QuinticCoefficients a;
  double scale = 1.0;
  for (int i = 0; i < 6; ++i) {
    a[i] = b[i] / scale;
    scale *= duration;
  }
  return a;
}

QuinticSegment::QuinticSegment(const Eigen::Ref<const Eigen::VectorXd>& start_position,
                               const Eigen::Ref<const Eigen::VectorXd>& end_position,
                               Eigen::Matrix<double, Eigen::Dynamic, 6> normalized,
                               double duration, bool rest_to_rest)
    : start_(start_position),
      end_(end_position),
      normalized_(std::move(normalized)),
      duration_(duration),
      rest_to_rest_(rest_to_rest) {
  check_duration(duration_);
  if (start_.size() != end_.size() || normalized_.rows() != start_.size()) {
    throw Error(ErrorCode::LengthMismatch, "segment dimensions");
  }
}

Eigen::Matrix<double, Eigen::Dynamic, 6> QuinticSegment::coefficients() const {
  Eigen::Matrix<double, Eigen::Dynamic, 6> a = normalized_;
  double scale = 1.0;
  for (int i = 0; i < 6; ++i) {
    a.col(i) /= scale;
    scale *= duration_;
  }
  return a;
}

TrajectorySample QuinticSegment::evaluate(double t) const {
  t = std::clamp(t, 0.0, duration_);
  const double s = t / duration_;
  const Eigen::Index n = joint_count();
  TrajectorySample out;
  out.time = t;
  out.position.resize(n);
  out.velocity.resize(n);
  out.acceleration.resize(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto b = normalized_.row(j);
    double p = b[5], v = 5.0 * b[5], a = 20.0 * b[5];
    for (int i = 4; i >= 0; --i) p = p * s + b[i];
    for (int i = 4; i >= 1; --i) v = v * s + i * b[i];
    for (int i = 4; i >= 2; --i) a = a * s + i * (i - 1) * b[i];
    if (s == 0.0) {
      p = start_[j];
    } else if (s == 1.0) {
      p = end_[j];
    } else if (rest_to_rest_) {
      p = std::clamp(p, std::min(start_[j], end_[j]), std::max(start_[j], end_[j]));
    }
    out.position[j] = p;
    out.velocity[j] = v / duration_;
    out.acceleration[j] = a / (duration_ * duration_);
  }
  return out;
}

QuinticSegment plan_joint_trajectory(const Eigen::Ref<const JointVector>& start,
                                     const Eigen::Ref<const JointVector>& goal, double duration,
                                     const DHChain* chain) {
  check_duration(duration);
  if (start.size() != goal.size()) throw Error(ErrorCode::LengthMismatch, "start/goal");
  if (!start.allFinite() || !goal.allFinite()) throw Error(ErrorCode::NonFiniteInput, "joints");
  if (chain != nullptr && (!chain->within_limits(start) || !chain->within_limits(goal))) {
    throw Error(ErrorCode::LimitViolation, "start or goal outside joint limits");
  }
  Eigen::Matrix<double, Eigen::Dynamic, 6> normalized(start.size(), 6);
  for (Eigen::Index j = 0; j < start.size(); ++j) {
    normalized.row(j) = normalized_row({start[j]}, {goal[j]}, duration);
  }
  return QuinticSegment(start, goal, std::move(normalized), duration, true);
}

QuinticSegment plan_joint_trajectory(const std::vector<BoundaryState>& start,
                                     const std::vector<BoundaryState>& goal, double duration) {
  check_duration(duration);
  if (start.size() != goal.size()) throw Error(ErrorCode::LengthMismatch, "start/goal");
  const auto n = static_cast<Eigen::Index>(start.size());
  Eigen::VectorXd p0(n), p1(n);
  Eigen::Matrix<double, Eigen::Dynamic, 6> normalized(n, 6);
  bool rest = true;
  for (Eigen::Index j = 0; j < n; ++j) {
    const auto& a = start[static_cast<std::size_t>(j)];
    const auto& b = goal[static_cast<std::size_t>(j)];
    check_finite(a);
    check_finite(b);
    p0[j] = a.position;
    p1[j] = b.position;
    normalized.row(j) = normalized_row(a, b, duration);
    rest = rest && a.velocity == 0.0 && a.acceleration == 0.0 && b.velocity == 0.0 &&
           b.acceleration == 0.0;
  }
  return QuinticSegment(p0, p1, std::move(normalized), duration, rest);
}

std::vector<TrajectorySample> sample_trajectory(const QuinticSegment& segment, int sample_count) {
  if (sample_count < 2) {
    throw Error(ErrorCode::TooFewSamples, "sample_count must be >= 2");
  }
  std::vector<TrajectorySample> samples;
  samples.reserve(static_cast<std::size_t>(sample_count));
  const int intervals = sample_count - 1;
  for (int i = 0; i <= intervals; ++i) {
    const double t = i == intervals
                         ? segment.duration()
                         : segment.duration() * static_cast<double>(i) / intervals;
    samples.push_back(segment.evaluate(t));
  }
  return samples;
}

void write_trajectory_csv(std::ostream& out, const std::vector<TrajectorySample>& samples) {
  const Eigen::Index n = samples.empty() ? 7 : samples.front().position.size();
  out << 't';
  for (char prefix : {'q', 'v', 'a'}) {
    for (Eigen::Index j = 1; j <= n; ++j) out << ',' << prefix << j;
  }
  out << '\n';
  for (const auto& s : samples) {
    out << detail::format_double(s.time);
    for (const Eigen::VectorXd* v : {&s.position, &s.velocity, &s.acceleration}) {
      for (Eigen::Index j = 0; j < n; ++j) out << ',' << detail::format_double((*v)[j]);
    }
    out << '\n';
  }
}

}  // namespace dtwin

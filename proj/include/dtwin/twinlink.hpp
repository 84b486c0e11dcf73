#pragma once

#include <condition_variable>
#include <cstdint>
#include <deque>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "dtwin/kinematics.hpp"

namespace dtwin::twin {

enum class MessageKind { JointState, Odometry, MoveCommand, ArmCommand };

std::string_view kind_name(MessageKind kind) noexcept;

struct BasePose {
  double x = 0.0;  // m
  double y = 0.0;  // m
  double heading = 0.0;  // rad

  friend bool operator==(const BasePose&, const BasePose&) = default;
};

struct JointState {
  JointVector joints;
  friend bool operator==(const JointState& a, const JointState& b) {
    return a.joints.size() == b.joints.size() && a.joints == b.joints;
  }
};
struct Odometry {
  BasePose pose;
  friend bool operator==(const Odometry&, const Odometry&) = default;
};
struct MoveCommand {
  BasePose goal;
  friend bool operator==(const MoveCommand&, const MoveCommand&) = default;
};
struct ArmCommand {
  JointVector target;
  double duration = 0.0;  // s
  friend bool operator==(const ArmCommand& a, const ArmCommand& b) {
    return a.target.size() == b.target.size() && a.target == b.target &&
           a.duration == b.duration;
  }
};

using Payload = std::variant<JointState, Odometry, MoveCommand, ArmCommand>;

struct TwinMessage {
  std::uint64_t seq = 0;
  std::int64_t timestamp_ms = 0;
  Payload payload;

  MessageKind kind() const noexcept { return static_cast<MessageKind>(payload.index()); }

  friend bool operator==(const TwinMessage&, const TwinMessage&) = default;
};

inline constexpr int kArmJoints = 7;

/// One JSON object, no trailing newline, keys in the order
/// seq, timestamp_ms, kind, payload. Doubles use the shortest
/// representation that parses back to the same value.
std::string encode(const TwinMessage& message);

/// Inverse of encode(). Throws DecodeError for malformed JSON, unknown
/// kinds, missing fields and wrong joint counts.
TwinMessage decode(std::string_view line);

struct TwinState {
  BasePose base;
  JointVector arm_joints = JointVector::Zero(kArmJoints);
  std::uint64_t last_seq = 0;

  friend bool operator==(const TwinState& a, const TwinState& b) {
    return a.base == b.base && a.arm_joints.size() == b.arm_joints.size() &&
           a.arm_joints == b.arm_joints && a.last_seq == b.last_seq;
  }
};

/// Mirror update on the digital side. State messages overwrite the mirrored
/// field; commands only advance last_seq. Throws StaleMessage when
/// seq <= last_seq and LimitViolation for out-of-range joints; the input
/// state is untouched either way.
TwinState apply_to_digital(const TwinState& state, const TwinMessage& message,
                           const DHChain& chain = tiago_arm_chain());

inline constexpr double kArmSampleRateHz = 10.0;
inline constexpr int kLineSteps = 10;
inline constexpr int kTurnSteps = 5;
inline constexpr std::int64_t kStepMs = 100;

/// State messages the physical robot emits while executing `command`.
///
/// ArmCommand: JointState samples of a rest-to-rest quintic at 10 Hz,
/// t = 0 through t = duration inclusive. MoveCommand: kLineSteps Odometry
/// samples along the straight line at the start heading, then kTurnSteps
/// turning to the goal heading along the shorter direction. Sequence
/// numbers continue from command.seq; timestamps advance kStepMs per
/// sample from command.timestamp_ms. The last sample equals the target
/// exactly. Throws LimitViolation, InvalidConfig for a non-command.
std::vector<TwinMessage> simulate_physical(const TwinState& state, const TwinMessage& command,
                                           const DHChain& chain = tiago_arm_chain());

struct Session {
  TwinState initial;
  TwinState physical;
  TwinState digital;
  std::vector<TwinMessage> log;
};

/// One line per command: "move x y heading" or "arm q1 .. q7 duration".
/// Blank lines and '#' comments are ignored. Throws ParseError.
std::vector<TwinMessage> parse_script(std::string_view text);

/// Drives the physical simulator with each command and mirrors every
/// message into the digital state. Commands take the next free seq.
Session run_session(const TwinState& initial, const std::vector<TwinMessage>& commands,
                    const DHChain& chain = tiago_arm_chain());

/// Same protocol with the physical robot on its own thread; the two sides
/// only share the ordered channels. Produces the same Session.
Session run_session_threaded(const TwinState& initial, const std::vector<TwinMessage>& commands,
                             const DHChain& chain = tiago_arm_chain());

struct AuditReport {
  double max_joint_divergence = 0.0;  // rad
  double max_base_divergence = 0.0;   // m
  double heading_divergence = 0.0;    // rad
  std::uint64_t replayed = 0;
  bool synchronized = true;
};

/// Replays session.log into a fresh mirror of session.initial and compares
/// the result with session.physical.
AuditReport audit_consistency(const Session& session, const DHChain& chain = tiago_arm_chain());

std::string encode_log(const std::vector<TwinMessage>& log);
std::vector<TwinMessage> decode_log(std::string_view text);

// Blocking FIFO between the two endpoints.
template <typename T>
class OrderedChannel {
 public:
  void send(T value) {
    {
      std::lock_guard lock(mutex_);
      queue_.push_back(std::move(value));
    }
    ready_.notify_one();
  }

  T receive() {
    std::unique_lock lock(mutex_);
    ready_.wait(lock, [this] { return !queue_.empty(); });
    T value = std::move(queue_.front());
    queue_.pop_front();
    return value;
  }

 private:
  std::mutex mutex_;
  std::condition_variable ready_;
  std::deque<T> queue_;
};

}  // namespace dtwin::twin

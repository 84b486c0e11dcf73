#include "dtwin/twinlink.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <numbers>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "dtwin/trajectory.hpp"
#include "text_util.hpp"

namespace dtwin::twin {

using json = nlohmann::ordered_json;

std::string_view kind_name(MessageKind kind) noexcept {
  switch (kind) {
    case MessageKind::JointState: return "JointState";
    case MessageKind::Odometry: return "Odometry";
    case MessageKind::MoveCommand: return "MoveCommand";
    case MessageKind::ArmCommand: return "ArmCommand";
  }
  return "";
}

namespace {

[[noreturn]] void decode_error(const std::string& reason, const std::string& detail) {
  throw Error(ErrorCode::DecodeError, reason + ": " + detail);
}

json joints_json(const JointVector& q) {
  json arr = json::array();
  for (Eigen::Index k = 0; k < q.size(); ++k) arr.push_back(q[k]);
  return arr;
}

json pose_json(const BasePose& p) { return json{{"x", p.x}, {"y", p.y}, {"heading", p.heading}}; }

const json& field(const json& obj, const char* name) {
  const auto it = obj.find(name);
  if (it == obj.end()) decode_error("MissingField", name);
  return *it;
}

double number(const json& obj, const char* name) {
  const json& v = field(obj, name);
  if (!v.is_number()) decode_error("BadField", name);
  return v.get<double>();
}

JointVector joints_from(const json& obj, const char* name) {
  const json& arr = field(obj, name);
  if (!arr.is_array()) decode_error("BadField", name);
  if (arr.size() != kArmJoints) {
    decode_error("ArityMismatch", std::string(name) + " has " + std::to_string(arr.size()) +
                                      " values, expected " + std::to_string(kArmJoints));
  }
  JointVector q(kArmJoints);
  for (int k = 0; k < kArmJoints; ++k) {
    if (!arr[static_cast<std::size_t>(k)].is_number()) decode_error("BadField", name);
    q[k] = arr[static_cast<std::size_t>(k)].get<double>();
  }
  return q;
}

BasePose pose_from(const json& obj) {
  return {number(obj, "x"), number(obj, "y"), number(obj, "heading")};
}

void check_arity(const JointVector& q) {
  if (q.size() != kArmJoints) throw Error(ErrorCode::LengthMismatch, "arm needs 7 joints");
}

double wrap_angle(double a) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  a = std::fmod(a, two_pi);
  if (a > std::numbers::pi) a -= two_pi;
  if (a <= -std::numbers::pi) a += two_pi;
  return a;
}

// State change on the physical side: it is the source of truth, so its own
// samples are taken as is.
void absorb(TwinState& state, const TwinMessage& message) {
  if (const auto* js = std::get_if<JointState>(&message.payload)) state.arm_joints = js->joints;
  if (const auto* od = std::get_if<Odometry>(&message.payload)) state.base = od->pose;
  state.last_seq = message.seq;
}

}  // namespace

std::string encode(const TwinMessage& message) {
  json payload;
  std::visit(
      [&](const auto& p) {
        using T = std::decay_t<decltype(p)>;
        if constexpr (std::is_same_v<T, JointState>) {
          check_arity(p.joints);
          payload = json{{"joints", joints_json(p.joints)}};
        } else if constexpr (std::is_same_v<T, Odometry>) {
          payload = pose_json(p.pose);
        } else if constexpr (std::is_same_v<T, MoveCommand>) {
          payload = pose_json(p.goal);
        } else {
          check_arity(p.target);
          payload = json{{"joints", joints_json(p.target)}, {"duration", p.duration}};
        }
      },
      message.payload);
  json out;
  out["seq"] = message.seq;
  out["timestamp_ms"] = message.timestamp_ms;
  out["kind"] = kind_name(message.kind());
  out["payload"] = std::move(payload);
  return out.dump();
}

TwinMessage decode(std::string_view line) {
  json obj;
  try {
    obj = json::parse(line);
  } catch (const json::parse_error& e) {
    decode_error("MalformedLine", e.what());
  }
  if (!obj.is_object()) decode_error("MalformedLine", "not a JSON object");

  TwinMessage m;
  const json& seq = field(obj, "seq");
  if (!seq.is_number_unsigned()) decode_error("BadField", "seq");
  m.seq = seq.get<std::uint64_t>();
  const json& ts = field(obj, "timestamp_ms");
  if (!ts.is_number_integer()) decode_error("BadField", "timestamp_ms");
  m.timestamp_ms = ts.get<std::int64_t>();
  const json& kind = field(obj, "kind");
  if (!kind.is_string()) decode_error("BadField", "kind");
  const json& payload = field(obj, "payload");
  if (!payload.is_object()) decode_error("BadField", "payload");

  const auto k = kind.get<std::string>();
  if (k == "JointState") {
    m.payload = JointState{joints_from(payload, "joints")};
  } else if (k == "Odometry") {
    m.payload = Odometry{pose_from(payload)};
  } else if (k == "MoveCommand") {
    m.payload = MoveCommand{pose_from(payload)};
  } else if (k == "ArmCommand") {
    m.payload = ArmCommand{joints_from(payload, "joints"), number(payload, "duration")};
  } else {
    decode_error("UnknownKind", k);
  }
  return m;
}

TwinState apply_to_digital(const TwinState& state, const TwinMessage& message,
                           const DHChain& chain) {
  if (message.seq <= state.last_seq) {
    throw Error(ErrorCode::StaleMessage, "seq " + std::to_string(message.seq) +
                                             " <= " + std::to_string(state.last_seq));
  }
  TwinState next = state;
  if (const auto* js = std::get_if<JointState>(&message.payload)) {
    if (!chain.within_limits(js->joints)) {
      throw Error(ErrorCode::LimitViolation, "joint state seq " + std::to_string(message.seq));
    }
    next.arm_joints = js->joints;
  } else if (const auto* od = std::get_if<Odometry>(&message.payload)) {
    next.base = od->pose;
  }
  next.last_seq = message.seq;
  return next;
}

std::vector<TwinMessage> simulate_physical(const TwinState& state, const TwinMessage& command,
                                           const DHChain& chain) {
  std::vector<TwinMessage> out;
  std::uint64_t seq = command.seq;
  auto emit = [&](std::int64_t offset_ms, Payload payload) {
    out.push_back({++seq, command.timestamp_ms + offset_ms, std::move(payload)});
  };

  if (const auto* arm = std::get_if<ArmCommand>(&command.payload)) {
    if (!chain.within_limits(arm->target)) {
      throw Error(ErrorCode::LimitViolation, "arm target outside joint limits");
    }
    const QuinticSegment segment =
        plan_joint_trajectory(state.arm_joints, arm->target, arm->duration, &chain);
    const int steps =
        std::max(1, static_cast<int>(std::ceil(arm->duration * kArmSampleRateHz - 1e-9)));
    for (int i = 0; i <= steps; ++i) {
      const double t = i == steps ? arm->duration : arm->duration * i / steps;
      emit(std::llround(t * 1000.0), JointState{segment.evaluate(t).position});
    }
    return out;
  }

  if (const auto* move = std::get_if<MoveCommand>(&command.payload)) {
    const BasePose from = state.base;
    const BasePose to = move->goal;
    if (!std::isfinite(to.x) || !std::isfinite(to.y) || !std::isfinite(to.heading)) {
      throw Error(ErrorCode::NonFiniteInput, "move goal");
    }
    std::int64_t clock = 0;
    emit(clock, Odometry{from});
    for (int i = 1; i <= kLineSteps; ++i) {
      const double f = static_cast<double>(i) / kLineSteps;
      BasePose p = i == kLineSteps
                       ? BasePose{to.x, to.y, from.heading}
                       : BasePose{from.x + (to.x - from.x) * f, from.y + (to.y - from.y) * f,
                                  from.heading};
      emit(clock += kStepMs, Odometry{p});
    }
    const double turn = wrap_angle(to.heading - from.heading);
    for (int j = 1; j <= kTurnSteps; ++j) {
      const double f = static_cast<double>(j) / kTurnSteps;
      const double heading = j == kTurnSteps ? to.heading : from.heading + turn * f;
      emit(clock += kStepMs, Odometry{{to.x, to.y, heading}});
    }
    return out;
  }

  throw Error(ErrorCode::InvalidConfig, "simulate_physical needs a command message");
}

std::vector<TwinMessage> parse_script(std::string_view text) {
  std::vector<TwinMessage> commands;
  std::istringstream in{std::string(text)};
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream words(line);
    std::vector<std::string> tokens;
    for (std::string w; words >> w;) tokens.push_back(w);
    if (tokens.empty()) continue;

    const std::string where = "line " + std::to_string(line_no);
    std::vector<double> values;
    for (std::size_t i = 1; i < tokens.size(); ++i) {
      auto v = detail::parse_double(tokens[i]);
      if (!v || !std::isfinite(*v)) throw Error(ErrorCode::ParseError, where + ": bad number");
      values.push_back(*v);
    }
    if (tokens[0] == "move") {
      if (values.size() != 3) throw Error(ErrorCode::ParseError, where + ": move x y heading");
      commands.push_back({0, 0, MoveCommand{{values[0], values[1], values[2]}}});
    } else if (tokens[0] == "arm") {
      if (values.size() != kArmJoints + 1) {
        throw Error(ErrorCode::ParseError, where + ": arm q1 .. q7 duration");
      }
      JointVector q = Eigen::Map<const JointVector>(values.data(), kArmJoints);
      commands.push_back({0, 0, ArmCommand{q, values.back()}});
    } else {
      throw Error(ErrorCode::ParseError, where + ": unknown command '" + tokens[0] + "'");
    }
  }
  return commands;
}

namespace {

struct Clock {
  std::uint64_t seq;
  std::int64_t time_ms = 0;
};

TwinMessage stamp(TwinMessage command, Clock& clock) {
  if (command.kind() != MessageKind::MoveCommand && command.kind() != MessageKind::ArmCommand) {
    throw Error(ErrorCode::InvalidConfig, "session input must be commands");
  }
  command.seq = ++clock.seq;
  command.timestamp_ms = clock.time_ms;
  return command;
}

void advance(Clock& clock, const TwinMessage& last) {
  clock.seq = last.seq;
  clock.time_ms = last.timestamp_ms + kStepMs;
}

}  // namespace

Session run_session(const TwinState& initial, const std::vector<TwinMessage>& commands,
                    const DHChain& chain) {
  Session session{initial, initial, initial, {}};
  Clock clock{initial.last_seq};
  for (const auto& raw : commands) {
    const TwinMessage command = stamp(raw, clock);
    session.log.push_back(command);
    absorb(session.physical, command);
    session.digital = apply_to_digital(session.digital, command, chain);
    TwinMessage last = command;
    for (const auto& m : simulate_physical(session.physical, command, chain)) {
      absorb(session.physical, m);
      session.log.push_back(m);
      session.digital = apply_to_digital(session.digital, m, chain);
      last = m;
    }
    advance(clock, last);
  }
  return session;
}

Session run_session_threaded(const TwinState& initial, const std::vector<TwinMessage>& commands,
                             const DHChain& chain) {
  struct Envelope {
    std::optional<TwinMessage> message;
    std::exception_ptr error;
  };
  OrderedChannel<std::optional<TwinMessage>> to_physical;
  OrderedChannel<Envelope> to_digital;

  TwinState physical = initial;
  std::thread robot([&] {
    while (auto command = to_physical.receive()) {
      try {
        absorb(physical, *command);
        for (const auto& m : simulate_physical(physical, *command, chain)) {
          absorb(physical, m);
          to_digital.send({m, nullptr});
        }
        to_digital.send({std::nullopt, nullptr});
      } catch (...) {
        to_digital.send({std::nullopt, std::current_exception()});
      }
    }
  });

  Session session{initial, initial, initial, {}};
  std::exception_ptr failure;
  Clock clock{initial.last_seq};
  for (const auto& raw : commands) {
    TwinMessage command;
    try {
      command = stamp(raw, clock);
      session.digital = apply_to_digital(session.digital, command, chain);
    } catch (...) {
      failure = std::current_exception();
      break;
    }
    session.log.push_back(command);
    to_physical.send(command);
    TwinMessage last = command;
    while (true) {
      Envelope e = to_digital.receive();
      if (e.error) failure = e.error;
      if (!e.message) break;
      session.log.push_back(*e.message);
      if (!failure) {
        try {
          session.digital = apply_to_digital(session.digital, *e.message, chain);
        } catch (...) {
          failure = std::current_exception();
        }
      }
      last = *e.message;
    }
    if (failure) break;
    advance(clock, last);
  }
  to_physical.send(std::nullopt);
  robot.join();
  if (failure) std::rethrow_exception(failure);
  session.physical = physical;
  return session;
}

AuditReport audit_consistency(const Session& session, const DHChain& chain) {
  AuditReport report;
  TwinState mirror = session.initial;
  for (const auto& m : session.log) {
    try {
      mirror = apply_to_digital(mirror, m, chain);
      ++report.replayed;
    } catch (const Error&) {
      // stale or out-of-range deliveries leave the mirror as it was
    }
  }
  const auto& truth = session.physical;
  if (mirror.arm_joints.size() == truth.arm_joints.size()) {
    report.max_joint_divergence = (mirror.arm_joints - truth.arm_joints).cwiseAbs().maxCoeff();
  } else {
    report.max_joint_divergence = std::numeric_limits<double>::infinity();
  }
  report.max_base_divergence = std::hypot(mirror.base.x - truth.base.x, mirror.base.y - truth.base.y);
  report.heading_divergence = std::abs(wrap_angle(mirror.base.heading - truth.base.heading));
  report.synchronized = report.max_joint_divergence == 0.0 && report.max_base_divergence == 0.0 &&
                        report.heading_divergence == 0.0;
  return report;
}

std::string encode_log(const std::vector<TwinMessage>& log) {
  std::string out;
  for (const auto& m : log) {
    out += encode(m);
    out += '\n';
  }
  return out;
}

std::vector<TwinMessage> decode_log(std::string_view text) {
  std::vector<TwinMessage> log;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    const auto line = detail::trim(text.substr(start, end - start));
    start = end + 1;
    if (!line.empty()) log.push_back(decode(line));
  }
  return log;
}

}  // namespace dtwin::twin

#include <doctest.h>

#include <fstream>
#include <numbers>
#include <random>
#include <sstream>

#include "dtwin/twinlink.hpp"

using namespace dtwin;
using namespace dtwin::twin;

namespace {

std::string slurp(const std::string& rel) {
  std::ifstream in(std::string(FIXTURE_DIR) + "/" + rel);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string decode_failure(const std::string& line) {
  try {
    decode(line);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::DecodeError);
    return e.what();
  }
  FAIL("line decoded");
  return {};
}

JointVector arm(std::initializer_list<double> v) {
  JointVector q(7);
  Eigen::Index i = 0;
  for (double x : v) q[i++] = x;
  return q;
}

TwinMessage random_message(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1e3, 1e3);
  std::uniform_int_distribution<int> kind(0, 3);
  TwinMessage m;
  m.seq = rng();
  m.timestamp_ms = static_cast<std::int64_t>(rng() >> 1) * (rng() % 2 ? 1 : -1);
  auto joints = [&] {
    JointVector q(7);
    for (int k = 0; k < 7; ++k) {
      // Mix ordinary values with awkward ones.
      switch (rng() % 5) {
        case 0: q[k] = 0.0; break;
        case 1: q[k] = -0.0; break;
        case 2: q[k] = std::ldexp(u(rng), -1000); break;
        default: q[k] = u(rng);
      }
    }
    return q;
  };
  switch (kind(rng)) {
    case 0: m.payload = JointState{joints()}; break;
    case 1: m.payload = Odometry{{u(rng), u(rng), u(rng)}}; break;
    case 2: m.payload = MoveCommand{{u(rng), u(rng), u(rng)}}; break;
    default: m.payload = ArmCommand{joints(), std::abs(u(rng))}; break;
  }
  return m;
}

TwinMessage arm_command(std::uint64_t seq, std::int64_t ts, const JointVector& target, double duration) {
  return {seq, ts, ArmCommand{target, duration}};
}

}  // namespace

TEST_CASE("codec basics") {
  const TwinMessage m{1, 0, JointState{JointVector::Zero(7)}};
  const std::string line = encode(m);
  CHECK(line.find('\n') == std::string::npos);
  CHECK(line.rfind(R"({"seq":1,"timestamp_ms":0,"kind":"JointState")", 0) == 0);
  CHECK(decode(line) == m);
  CHECK(encode(decode(line)) == line);

  CHECK(decode_failure(R"({"seq":1,"timestamp_ms":0,"kind":"Teleport","payload":{}})")
            .find("UnknownKind") != std::string::npos);
  CHECK(decode_failure("not json").find("MalformedLine") != std::string::npos);
  CHECK(decode_failure(R"({"seq":1,"kind":"Odometry","payload":{"x":0,"y":0,"heading":0}})")
            .find("MissingField") != std::string::npos);
  CHECK(decode_failure(R"({"seq":1,"timestamp_ms":0,"kind":"JointState","payload":{"joints":[0,0]}})")
            .find("ArityMismatch") != std::string::npos);
  CHECK(decode_failure(R"({"seq":-1,"timestamp_ms":0,"kind":"Odometry","payload":{"x":0,"y":0,"heading":0}})")
            .find("BadField") != std::string::npos);
}

TEST_CASE("codec round trip on random messages") {
  std::mt19937_64 rng(77);
  for (int n = 0; n < 1000; ++n) {
    const TwinMessage m = random_message(rng);
    const std::string line = encode(m);
    const TwinMessage back = decode(line);
    REQUIRE(back == m);
    CHECK(encode(back) == line);
    // Signed zeros survive too.
    if (const auto* js = std::get_if<JointState>(&m.payload)) {
      const auto& q = std::get<JointState>(back.payload).joints;
      for (int k = 0; k < 7; ++k) CHECK(std::signbit(q[k]) == std::signbit(js->joints[k]));
    }
  }
}

TEST_CASE("log encoding") {
  std::mt19937_64 rng(78);
  std::vector<TwinMessage> log;
  for (int n = 0; n < 20; ++n) log.push_back(random_message(rng));
  const std::string text = encode_log(log);
  CHECK(std::count(text.begin(), text.end(), '\n') == 20);
  CHECK(decode_log(text) == log);
  CHECK(decode_log("").empty());
  CHECK(decode_log("\n\n").empty());
}

TEST_CASE("digital mirror updates") {
  const TwinState fresh;
  const TwinState s = apply_to_digital(fresh, {1, 0, JointState{JointVector::Zero(7)}});
  CHECK(s.arm_joints == JointVector::Zero(7));
  CHECK(s.last_seq == 1);

  const TwinState t = apply_to_digital(s, {2, 100, Odometry{{1, 2, 0.5}}});
  CHECK(t.base == BasePose{1, 2, 0.5});
  CHECK(t.arm_joints == s.arm_joints);

  try {
    apply_to_digital(t, {2, 200, Odometry{{9, 9, 9}}});
    FAIL("stale message accepted");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::StaleMessage);
  }
  CHECK(t.base == BasePose{1, 2, 0.5});
  CHECK_THROWS_AS(apply_to_digital(t, {3, 0, JointState{JointVector::Constant(7, 3.0)}}), Error);

  const TwinState u = apply_to_digital(t, {5, 300, MoveCommand{{4, 4, 4}}});
  CHECK(u.base == t.base);
  CHECK(u.last_seq == 5);
}

TEST_CASE("arm command sampling") {
  const TwinState start;
  SUBCASE("target equals current joints") {
    const auto msgs = simulate_physical(start, arm_command(1, 0, start.arm_joints, 2.0));
    for (const auto& m : msgs) CHECK(std::get<JointState>(m.payload).joints == start.arm_joints);
  }
  SUBCASE("one second at 10 Hz") {
    const JointVector target = arm({0.5, 0.3, -0.2, 1.0, 0.1, -0.3, 0.7});
    const auto msgs = simulate_physical(start, arm_command(4, 1000, target, 1.0));
    REQUIRE(msgs.size() == 11);
    CHECK(std::get<JointState>(msgs.front().payload).joints == start.arm_joints);
    CHECK(std::get<JointState>(msgs.back().payload).joints == target);
    for (std::size_t i = 0; i < msgs.size(); ++i) {
      CHECK(msgs[i].seq == 5 + i);
      CHECK(msgs[i].timestamp_ms == 1000 + 100 * static_cast<std::int64_t>(i));
    }
  }
  SUBCASE("out-of-range target") {
    CHECK_THROWS_AS(simulate_physical(start, arm_command(1, 0, JointVector::Constant(7, 3.0), 1.0)), Error);
  }
  SUBCASE("state messages are not commands") {
    CHECK_THROWS_AS(simulate_physical(start, {1, 0, Odometry{}}), Error);
  }
}

TEST_CASE("move command path") {
  const TwinState start;
  const auto msgs = simulate_physical(start, {1, 0, MoveCommand{{1, 0, 0}}});
  REQUIRE(!msgs.empty());
  CHECK(std::get<Odometry>(msgs.back().payload).pose == BasePose{1, 0, 0});
  double last_x = -1;
  for (const auto& m : msgs) {
    const auto& p = std::get<Odometry>(m.payload).pose;
    CHECK(p.x >= last_x);
    CHECK(p.y == 0.0);
    last_x = p.x;
  }

  // Turning goes the short way round.
  TwinState facing;
  facing.base = {0, 0, 3.0};
  const auto turn = simulate_physical(facing, {1, 0, MoveCommand{{0, 0, -3.0}}});
  for (const auto& m : turn) {
    const double h = std::get<Odometry>(m.payload).pose.heading;
    CHECK(std::abs(std::remainder(h - 3.0, 2 * std::numbers::pi)) <= 2 * std::numbers::pi - 6.0 + 1e-12);
  }
  CHECK(std::get<Odometry>(turn.back().payload).pose.heading == -3.0);
}

TEST_CASE("script parsing") {
  const auto cmds = parse_script(slurp("demo_session.twin"));
  REQUIRE(cmds.size() == 4);
  CHECK(cmds[0].kind() == MessageKind::MoveCommand);
  CHECK(cmds[1].kind() == MessageKind::ArmCommand);
  CHECK(std::get<ArmCommand>(cmds[3].payload).duration == 2.5);
  CHECK_THROWS_AS(parse_script("jump 1 2 3\n"), Error);
  CHECK_THROWS_AS(parse_script("move 1 2\n"), Error);
  CHECK_THROWS_AS(parse_script("arm 1 2 3 4 5 6 7\n"), Error);
  CHECK_THROWS_AS(parse_script("move 1 2 x\n"), Error);
}

TEST_CASE("session replay and audit") {
  const auto cmds = parse_script(slurp("demo_session.twin"));
  const Session s = run_session({}, cmds);
  CHECK(s.digital == s.physical);

  SUBCASE("complete log") {
    const AuditReport r = audit_consistency(s);
    CHECK(r.synchronized);
    CHECK(r.max_joint_divergence == 0.0);
    CHECK(r.max_base_divergence == 0.0);
    CHECK(r.heading_divergence == 0.0);
    CHECK(r.replayed == s.log.size());
  }

  SUBCASE("last message dropped") {
    Session cut = s;
    const TwinMessage dropped = cut.log.back();
    cut.log.pop_back();
    REQUIRE(dropped.kind() == MessageKind::JointState);
    // The final step's delta: the last two JointState samples.
    JointVector previous;
    for (auto it = cut.log.rbegin(); it != cut.log.rend(); ++it) {
      if (const auto* js = std::get_if<JointState>(&it->payload)) {
        previous = js->joints;
        break;
      }
    }
    const double delta =
        (std::get<JointState>(dropped.payload).joints - previous).cwiseAbs().maxCoeff();
    const AuditReport r = audit_consistency(cut);
    CHECK_FALSE(r.synchronized);
    CHECK(delta > 0.0);
    CHECK(r.max_joint_divergence == delta);
  }

  SUBCASE("empty log with equal states") {
    Session empty;
    CHECK(audit_consistency(empty).synchronized);
  }

  SUBCASE("sequence numbers and timestamps increase") {
    for (std::size_t i = 1; i < s.log.size(); ++i) {
      CHECK(s.log[i].seq > s.log[i - 1].seq);
      CHECK(s.log[i].timestamp_ms >= s.log[i - 1].timestamp_ms);
    }
  }
}

TEST_CASE("threaded session matches the sequential one") {
  const auto cmds = parse_script(slurp("demo_session.twin"));
  const Session a = run_session({}, cmds);
  for (int n = 0; n < 5; ++n) {
    const Session b = run_session_threaded({}, cmds);
    CHECK(b.log == a.log);
    CHECK(b.physical == a.physical);
    CHECK(b.digital == a.digital);
  }
  CHECK_THROWS_AS(run_session_threaded({}, parse_script("arm 9 9 9 9 9 9 9 1\n")), Error);
}

TEST_CASE("ordered channel preserves order across threads") {
  OrderedChannel<int> ch;
  std::thread producer([&] {
    for (int i = 0; i < 1000; ++i) ch.send(i);
  });
  for (int i = 0; i < 1000; ++i) CHECK(ch.receive() == i);
  producer.join();
}

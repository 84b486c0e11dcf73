#include "dtwin/cli.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "dtwin/ik_pso.hpp"
#include "dtwin/kinematics.hpp"
#include "dtwin/scene.hpp"
#include "dtwin/trajectory.hpp"
#include "dtwin/twinlink.hpp"
#include "dtwin/urdf.hpp"
#include "text_util.hpp"

namespace dtwin::cli {

namespace {

using json = nlohmann::ordered_json;

// A flag value that parsed as a string but means nothing to the command.
struct InvalidValue : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Common {
  std::uint64_t seed = kDefaultSeed;
  std::string output;
  std::string format = "json";
};

void add_common(CLI::App* cmd, Common& common) {
  cmd->add_option("--seed", common.seed, "Random seed (default " + std::to_string(kDefaultSeed) + ")");
  cmd->add_option("--output", common.output, "Write results to this file instead of stdout");
  cmd->add_option("--format", common.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}));
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void emit(const Common& common, std::ostream& out, const std::string& text) {
  if (common.output.empty()) {
    out << text;
    return;
  }
  std::ofstream file(common.output, std::ios::binary);
  if (!file) throw Error(ErrorCode::IoError, "cannot write '" + common.output + "'");
  file << text;
}

std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> values;
  for (auto token : detail::split(text, ',')) {
    auto v = detail::parse_double(token);
    if (!v || !std::isfinite(*v)) {
      throw InvalidValue(std::string(flag) + ": '" + std::string(token) + "' is not a number");
    }
    values.push_back(*v);
  }
  return values;
}

JointVector parse_joints(const std::string& text, const char* flag, Eigen::Index expected) {
  const auto values = parse_list(text, flag);
  if (static_cast<Eigen::Index>(values.size()) != expected) {
    throw InvalidValue(std::string(flag) + ": expected " + std::to_string(expected) + " values");
  }
  return Eigen::Map<const JointVector>(values.data(), expected);
}

json vector_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

json transform_json(const HomogeneousTransform& t) {
  const Quaternion q = rotation_to_quaternion(t.linear());
  json matrix = json::array();
  for (int r = 0; r < 4; ++r) matrix.push_back(vector_json(t.matrix().row(r).transpose()));
  return json{{"position", vector_json(t.translation())},
              {"quaternion", json::array({q.x(), q.y(), q.z(), q.w()})},
              {"matrix", std::move(matrix)}};
}

DHChain load_chain(const std::string& name, const std::string& csv_path) {
  if (!csv_path.empty()) return parse_dh_csv(read_file(csv_path));
  return chain_by_name(name);
}

std::string dump(const json& j) { return j.dump(2) + "\n"; }

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Digital-twin kinematics toolkit: URDF, DH kinematics, swarm IK, quintic "
               "trajectories, household scenes and twin synchronization.",
               "dtwin"};
  app.require_subcommand(1, 1);
  app.set_version_flag("--version", "dtwin " + std::string(kVersion));
  Common common;

  // urdf-validate
  std::string urdf_path;
  auto* validate_cmd = app.add_subcommand("urdf-validate", "Parse and validate a URDF file");
  validate_cmd->add_option("file", urdf_path, "URDF file")->required();
  add_common(validate_cmd, common);

  // urdf-chain
  std::string base_link, tip_link;
  auto* chain_cmd = app.add_subcommand("urdf-chain", "List the joints between two links");
  chain_cmd->add_option("file", urdf_path, "URDF file")->required();
  chain_cmd->add_option("--base", base_link, "Base link")->required();
  chain_cmd->add_option("--tip", tip_link, "Tip link")->required();
  add_common(chain_cmd, common);

  // fk
  std::string chain_name(kTiagoChainName), chain_csv, joints_text;
  auto* fk_cmd = app.add_subcommand("fk", "DH forward kinematics");
  fk_cmd->add_option("--chain", chain_name, "Built-in chain name")->capture_default_str();
  fk_cmd->add_option("--chain-csv", chain_csv, "DH chain CSV (alpha,a,d,lower,upper)");
  fk_cmd->add_option("--joints", joints_text, "Comma-separated joint angles (rad)")->required();
  add_common(fk_cmd, common);

  // ik
  std::string target_text, reference_text, trace_path;
  SwarmConfig swarm;
  std::optional<double> omega_p, early_exit;
  auto* ik_cmd = app.add_subcommand("ik", "Swarm inverse kinematics for a target pose");
  ik_cmd->add_option("--chain", chain_name, "Built-in chain name")->capture_default_str();
  ik_cmd->add_option("--chain-csv", chain_csv, "DH chain CSV");
  ik_cmd->add_option("--target", target_text, "Target pose x,y,z,qx,qy,qz,qw")->required();
  ik_cmd->add_option("--reference", reference_text,
                     "Current joint configuration (default: home pose clamped to limits)");
  ik_cmd->add_option("--particles", swarm.particle_count, "Swarm size")->capture_default_str();
  ik_cmd->add_option("--iterations", swarm.max_iterations, "Iteration count")
      ->capture_default_str();
  ik_cmd->add_option("--velocity-clamp", swarm.velocity_clamp_fraction,
                     "Velocity bound as a fraction of each joint range")
      ->capture_default_str();
  ik_cmd->add_option("--omega-p", omega_p, "Fix the position weight instead of drawing it");
  ik_cmd->add_option("--early-exit", early_exit, "Stop once the best fitness drops below this");
  ik_cmd->add_option("--trace", trace_path, "Write the per-iteration trace as CSV");
  add_common(ik_cmd, common);

  // traj
  std::string start_text, goal_text;
  double duration = 0.0;
  int sample_count = 11;
  auto* traj_cmd = app.add_subcommand("traj", "Rest-to-rest quintic joint trajectory");
  traj_cmd->add_option("--chain", chain_name, "Built-in chain for limit checks")
      ->capture_default_str();
  traj_cmd->add_option("--chain-csv", chain_csv, "DH chain CSV");
  traj_cmd->add_option("--start", start_text, "Start joints")->required();
  traj_cmd->add_option("--goal", goal_text, "Goal joints")->required();
  traj_cmd->add_option("--duration", duration, "Duration in seconds")->required();
  traj_cmd->add_option("--samples", sample_count, "Number of samples")->capture_default_str();
  add_common(traj_cmd, common);

  // scene-check
  std::string scene_path, digital_path, action_text, target_id, instrument_id;
  auto* scene_cmd = app.add_subcommand("scene-check", "Validate a scene, check an action");
  scene_cmd->add_option("file", scene_path, "Scene file")->required();
  scene_cmd->add_option("--action", action_text, "Action name, e.g. Pick");
  scene_cmd->add_option("--target", target_id, "Target object id");
  scene_cmd->add_option("--instrument", instrument_id, "Instrument object id");
  scene_cmd->add_option("--digital", digital_path, "Digital-space scene for position errors");
  add_common(scene_cmd, common);

  // twin-simulate / twin-audit / twin-replay
  std::string script_path, log_path;
  bool threaded = false;
  auto* sim_cmd = app.add_subcommand("twin-simulate", "Run a command script, emit the session log");
  sim_cmd->add_option("script", script_path, "Command script")->required();
  sim_cmd->add_flag("--threaded", threaded, "Run the physical side on its own thread");
  add_common(sim_cmd, common);

  auto* audit_cmd = app.add_subcommand("twin-audit", "Check a session log against the script");
  audit_cmd->add_option("script", script_path, "Command script")->required();
  audit_cmd->add_option("--log", log_path, "Session log to audit (default: simulated log)");
  add_common(audit_cmd, common);

  auto* replay_cmd = app.add_subcommand("twin-replay", "Replay a session log into a mirror");
  replay_cmd->add_option("log", log_path, "Session log")->required();
  add_common(replay_cmd, common);

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::CallForVersion&) {
    out << "dtwin " << kVersion << "\n";
    return kOk;
  } catch (const CLI::ExtrasError& e) {
    err << "usage error (unknown argument): " << e.what() << "\n";
    return kUsageError;
  } catch (const CLI::ConversionError& e) {
    err << "usage error (invalid value): " << e.what() << "\n";
    return kUsageError;
  } catch (const CLI::ValidationError& e) {
    err << "usage error (invalid value): " << e.what() << "\n";
    return kUsageError;
  } catch (const CLI::ParseError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsageError;
  }

  try {
    if (*validate_cmd) {
      const std::string text = read_file(urdf_path);
      // validate() reports every violation; parse errors are structural.
      const urdf::RobotModel model = urdf::parse_urdf(text);
      const auto violations = urdf::validate(model);
      json list = json::array();
      for (const auto& v : violations) {
        list.push_back({{"code", code_name(v.code)}, {"element", v.element}});
      }
      json j{{"robot", model.name},
             {"links", model.links.size()},
             {"joints", model.joints.size()},
             {"root_link", model.root_link},
             {"violations", list},
             {"summary", std::to_string(violations.size()) + " violations"}};
      emit(common, out, dump(j));
      return violations.empty() ? kOk : kDomainError;
    }

    if (*chain_cmd) {
      const urdf::RobotModel model = urdf::parse_urdf(read_file(urdf_path));
      json list = json::array();
      for (const auto& joint : urdf::kinematic_chain(model, base_link, tip_link)) {
        json entry{{"name", joint.name},
                   {"type", urdf::kind_name(joint.kind)},
                   {"parent", joint.parent_link},
                   {"child", joint.child_link}};
        if (joint.kind == urdf::JointKind::Revolute || joint.kind == urdf::JointKind::Prismatic) {
          entry["lower"] = joint.limit_lower;
          entry["upper"] = joint.limit_upper;
        }
        list.push_back(std::move(entry));
      }
      emit(common, out, dump(json{{"base", base_link}, {"tip", tip_link}, {"joints", list}}));
      return kOk;
    }

    if (*fk_cmd) {
      const DHChain chain = load_chain(chain_name, chain_csv);
      const JointVector q = parse_joints(joints_text, "--joints", chain.size());
      json j{{"chain", chain_csv.empty() ? chain_name : chain_csv}, {"joints", vector_json(q)}};
      j.update(transform_json(forward_kinematics(chain, q)));
      emit(common, out, dump(j));
      return kOk;
    }

    if (*ik_cmd) {
      const DHChain chain = load_chain(chain_name, chain_csv);
      const auto target = parse_list(target_text, "--target");
      if (target.size() != 7) throw InvalidValue("--target: expected x,y,z,qx,qy,qz,qw");
      IkProblem problem{chain, {}, {}};
      problem.target.position = {target[0], target[1], target[2]};
      problem.target.orientation = Quaternion(target[6], target[3], target[4], target[5]);
      if (reference_text.empty()) {
        problem.reference = JointVector::Zero(chain.size()).cwiseMax(chain.lower()).cwiseMin(chain.upper());
      } else {
        problem.reference = parse_joints(reference_text, "--reference", chain.size());
      }
      swarm.rng_seed = common.seed;
      swarm.fixed_omega_p = omega_p;
      swarm.early_exit_fitness = early_exit;
      const IkSolution s = solve_ik(problem, swarm);
      if (!trace_path.empty()) {
        std::ofstream trace(trace_path, std::ios::binary);
        if (!trace) throw Error(ErrorCode::IoError, "cannot write '" + trace_path + "'");
        trace << "iteration,gbest_fitness,W,C1,C2\n";
        for (const auto& row : s.trace) {
          trace << row.iteration << ',' << detail::format_double(row.gbest_fitness) << ','
                << detail::format_double(row.coefficients.inertia) << ','
                << detail::format_double(row.coefficients.cognitive) << ','
                << detail::format_double(row.coefficients.social) << '\n';
        }
      }
      json j{{"joints", vector_json(s.joints)},
             {"fitness", s.fitness},
             {"position_error", s.position_error},
             {"pose_error", s.pose_error},
             {"iterations_used", s.iterations_used},
             {"converged", s.converged},
             {"seed", s.seed}};
      emit(common, out, dump(j));
      return kOk;
    }

    if (*traj_cmd) {
      const DHChain chain = load_chain(chain_name, chain_csv);
      const JointVector start = parse_joints(start_text, "--start", chain.size());
      const JointVector goal = parse_joints(goal_text, "--goal", chain.size());
      const QuinticSegment segment = plan_joint_trajectory(start, goal, duration, &chain);
      const auto samples = sample_trajectory(segment, sample_count);
      if (common.format == "csv") {
        std::ostringstream csv;
        write_trajectory_csv(csv, samples);
        emit(common, out, csv.str());
        return kOk;
      }
      json coeffs = json::array();
      const auto a = segment.coefficients();
      for (Eigen::Index r = 0; r < a.rows(); ++r) coeffs.push_back(vector_json(a.row(r).transpose()));
      json rows = json::array();
      for (const auto& s : samples) {
        rows.push_back({{"t", s.time},
                        {"position", vector_json(s.position)},
                        {"velocity", vector_json(s.velocity)},
                        {"acceleration", vector_json(s.acceleration)}});
      }
      emit(common, out,
           dump(json{{"duration", duration}, {"coefficients", coeffs}, {"samples", rows}}));
      return kOk;
    }

    if (*scene_cmd) {
      const scene::Scene physical = scene::load_scene(read_file(scene_path));
      json j{{"objects", physical.size()}, {"invariants", "ok"}};
      if (!action_text.empty()) {
        if (target_id.empty()) throw InvalidValue("--action needs --target");
        scene::Action action;
        try {
          action = scene::parse_action(action_text);
        } catch (const Error&) {
          throw InvalidValue("--action: unknown action '" + action_text + "'");
        }
        const std::optional<std::string> instrument =
            instrument_id.empty() ? std::nullopt : std::optional<std::string>(instrument_id);
        const scene::Verdict v = scene::check_action(physical, action, target_id, instrument);
        j["action"] = {{"name", action_text},
                       {"target", target_id},
                       {"instrument", instrument_id},
                       {"allowed", v.allowed},
                       {"reason", scene::denial_name(v.reason)},
                       {"detail", v.describe()}};
      }
      if (!digital_path.empty()) {
        const scene::Scene digital = scene::load_scene(read_file(digital_path));
        json rows = json::array();
        for (const auto& r : scene::geometric_consistency(physical, digital)) {
          rows.push_back({{"id", r.id},
                          {"physical", vector_json(r.physical_cm)},
                          {"digital", vector_json(r.digital_cm)},
                          {"error_cm", r.error_cm}});
        }
        j["consistency"] = rows;
      }
      emit(common, out, dump(j));
      return kOk;
    }

    if (*sim_cmd) {
      const auto commands = twin::parse_script(read_file(script_path));
      const twin::Session session = threaded ? twin::run_session_threaded({}, commands)
                                             : twin::run_session({}, commands);
      emit(common, out, twin::encode_log(session.log));
      return kOk;
    }

    if (*audit_cmd) {
      twin::Session session = twin::run_session({}, twin::parse_script(read_file(script_path)));
      if (!log_path.empty()) session.log = twin::decode_log(read_file(log_path));
      const twin::AuditReport r = twin::audit_consistency(session);
      json j{{"messages", session.log.size()},
             {"replayed", r.replayed},
             {"max_joint_divergence", r.max_joint_divergence},
             {"max_base_divergence", r.max_base_divergence},
             {"heading_divergence", r.heading_divergence},
             {"synchronized", r.synchronized}};
      emit(common, out, dump(j));
      return r.synchronized ? kOk : kDomainError;
    }

    if (*replay_cmd) {
      twin::TwinState state;
      std::uint64_t applied = 0;
      for (const auto& m : twin::decode_log(read_file(log_path))) {
        state = twin::apply_to_digital(state, m);
        ++applied;
      }
      json j{{"applied", applied},
             {"last_seq", state.last_seq},
             {"base", {{"x", state.base.x}, {"y", state.base.y}, {"heading", state.base.heading}}},
             {"arm_joints", vector_json(state.arm_joints)}};
      emit(common, out, dump(j));
      return kOk;
    }
  } catch (const InvalidValue& e) {
    err << "usage error (invalid value): " << e.what() << "\n";
    return kUsageError;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kDomainError;
  }
  return kUsageError;
}

}  // namespace dtwin::cli

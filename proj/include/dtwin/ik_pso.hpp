#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <random>
#include <span>
#include <vector>

#include "dtwin/kinematics.hpp"

namespace dtwin {

inline constexpr std::uint64_t kDefaultSeed = 20230101;

// Swarm hyperparameters. Inertia and both learning factors move along the
// quadratic schedule from their *_start to their *_end value over
// max_iterations.
struct SwarmConfig {
  int particle_count = 50;
  int max_iterations = 200;
  double w_start = 0.9;
  double w_end = 0.4;
  double c1_start = 1.5;
  double c1_end = 2.5;
  double c2_start = 2.5;
  double c2_end = 1.5;
  double velocity_clamp_fraction = 0.2;
  std::optional<double> early_exit_fitness;
  // When set, replaces the per-solve random position weight. The draw still
  // happens so the rest of the random stream is unaffected.
  std::optional<double> fixed_omega_p;
  std::uint64_t rng_seed = kDefaultSeed;

  /// Throws InvalidConfig.
  void validate() const;
};

struct FitnessWeights {
  double omega_p = 0.5;
  Eigen::VectorXd joint_weights = default_joint_weights();

  double omega_o() const noexcept { return 1.0 - omega_p; }

  /// 1, 0.5, 0.5, 0.1, 0.1, 0.1, 0.1: the base joints move more freely than
  /// the wrist.
  static Eigen::VectorXd default_joint_weights();
};

struct IkProblem {
  DHChain chain;
  Pose target;
  JointVector reference;  // current arm configuration
};

struct Particle {
  Eigen::VectorXd position;
  Eigen::VectorXd velocity;
  Eigen::VectorXd best_position;
  double best_fitness = std::numeric_limits<double>::infinity();
};

struct SwarmCoefficients {
  double inertia = 0.0;
  double cognitive = 0.0;
  double social = 0.0;
};

struct FitnessTerms {
  double position_error = 0.0;
  double pose_error = 0.0;
  double flexibility = 0.0;
  double total = 0.0;
};

struct TraceRow {
  int iteration = 0;
  double gbest_fitness = 0.0;
  SwarmCoefficients coefficients;
};

struct IkSolution {
  JointVector joints;
  double fitness = 0.0;
  double position_error = 0.0;
  double pose_error = 0.0;
  int iterations_used = 0;
  bool converged = false;
  double omega_p = 0.0;
  std::uint64_t seed = 0;
  std::vector<TraceRow> trace;
};

// Uniform [0, 1) doubles from mt19937_64, top 53 bits of each output. The
// mapping is spelled out so any replay with the same engine reproduces the
// stream bit for bit.
class UniformStream {
 public:
  explicit UniformStream(std::uint64_t seed) : engine_(seed) {}

  double next() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

 private:
  std::mt19937_64 engine_;
};

/// Sum over k of (w_k * (candidate_k - reference_k))^2.
double flexibility_cost(const Eigen::Ref<const JointVector>& candidate,
                        const Eigen::Ref<const JointVector>& reference,
                        const Eigen::Ref<const Eigen::VectorXd>& joint_weights);

FitnessTerms fitness_terms(const Eigen::Ref<const JointVector>& candidate,
                           const IkProblem& problem, const FitnessWeights& weights);

/// omega_p * position error + omega_o * pose error + flexibility cost.
/// Throws LimitViolation for a candidate outside the chain limits.
double fitness(const Eigen::Ref<const JointVector>& candidate, const IkProblem& problem,
               const FitnessWeights& weights);

/// (W, C1, C2) at iteration t of max_iterations. Throws OutOfRange.
SwarmCoefficients schedule(int t, const SwarmConfig& config);

/// One velocity/position step. Draws r1, r2 per dimension in that order.
/// Velocity is clamped to +-clamp_fraction of each joint range; any
/// dimension whose position hits a limit is clamped with its velocity zeroed.
void update_particle(Particle& particle, const Eigen::Ref<const Eigen::VectorXd>& global_best,
                     const SwarmCoefficients& coefficients,
                     const Eigen::Ref<const Eigen::VectorXd>& lower,
                     const Eigen::Ref<const Eigen::VectorXd>& upper, double clamp_fraction,
                     UniformStream& stream);

// Called after the best positions are updated in every iteration.
using IterationObserver =
    std::function<void(int iteration, std::span<const Particle> swarm, const TraceRow& row)>;

/// Swarm search for the joint vector minimizing fitness().
///
/// Random stream order: particle positions (particle-major, joint-minor),
/// then omega_p, then per iteration, per particle, per joint the pair
/// (r1, r2). Velocities start at zero. Each iteration evaluates every
/// particle, keeps strictly better personal bests, takes the first minimum
/// as the global best, then moves the swarm with schedule(t). The returned
/// joints are the global best after the last evaluation.
///
/// Throws InfiniteLimits, InvalidConfig, NotUnit, LengthMismatch.
IkSolution solve_ik(const IkProblem& problem, const SwarmConfig& config,
                    const IterationObserver& observer = {});

}  // namespace dtwin

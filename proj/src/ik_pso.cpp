#include "dtwin/ik_pso.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace dtwin {

void SwarmConfig::validate() const {
  auto fail = [](const std::string& what) { throw Error(ErrorCode::InvalidConfig, what); };
  if (particle_count < 2) fail("particle_count must be >= 2");
  if (max_iterations < 1) fail("max_iterations must be >= 1");
  if (!(velocity_clamp_fraction > 0.0 && velocity_clamp_fraction <= 1.0)) {
    fail("velocity_clamp_fraction must lie in (0, 1]");
  }
  for (double v : {w_start, w_end, c1_start, c1_end, c2_start, c2_end}) {
    if (!std::isfinite(v)) fail("schedule endpoints must be finite");
  }
  if (fixed_omega_p && !(*fixed_omega_p > 0.0 && *fixed_omega_p < 1.0)) {
    fail("omega_p must lie in (0, 1)");
  }
  if (early_exit_fitness && !std::isfinite(*early_exit_fitness)) {
    fail("early_exit_fitness must be finite");
  }
}

Eigen::VectorXd FitnessWeights::default_joint_weights() {
  Eigen::VectorXd w(7);
  w << 1.0, 0.5, 0.5, 0.1, 0.1, 0.1, 0.1;
  return w;
}

double flexibility_cost(const Eigen::Ref<const JointVector>& candidate,
                        const Eigen::Ref<const JointVector>& reference,
                        const Eigen::Ref<const Eigen::VectorXd>& joint_weights) {
  if (candidate.size() != reference.size() || candidate.size() != joint_weights.size()) {
    throw Error(ErrorCode::LengthMismatch, "flexibility_cost");
  }
  return (joint_weights.array() * (candidate - reference).array()).square().sum();
}

FitnessTerms fitness_terms(const Eigen::Ref<const JointVector>& candidate,
                           const IkProblem& problem, const FitnessWeights& weights) {
  if (!problem.chain.within_limits(candidate)) {
    throw Error(ErrorCode::LimitViolation, "candidate outside joint limits");
  }
  const HomogeneousTransform fk = forward_kinematics(problem.chain, candidate);
  FitnessTerms terms;
  terms.position_error = position_error(fk.translation(), problem.target.position);
  terms.pose_error = pose_error(rotation_to_quaternion(fk.linear()), problem.target.orientation);
  terms.flexibility = flexibility_cost(candidate, problem.reference, weights.joint_weights);
  terms.total = weights.omega_p * terms.position_error + weights.omega_o() * terms.pose_error +
                terms.flexibility;
  return terms;
}

double fitness(const Eigen::Ref<const JointVector>& candidate, const IkProblem& problem,
               const FitnessWeights& weights) {
  return fitness_terms(candidate, problem, weights).total;
}

SwarmCoefficients schedule(int t, const SwarmConfig& config) {
  if (t < 0 || t > config.max_iterations || config.max_iterations < 1) {
    throw Error(ErrorCode::OutOfRange, "iteration " + std::to_string(t));
  }
  const double s = static_cast<double>(t) / static_cast<double>(config.max_iterations);
  auto quadratic = [s](double start, double end) {
    return (start - end) * (s * s) + (end - start) * (2.0 * s) + start;
  };
  return {quadratic(config.w_start, config.w_end), quadratic(config.c1_start, config.c1_end),
          quadratic(config.c2_start, config.c2_end)};
}

void update_particle(Particle& particle, const Eigen::Ref<const Eigen::VectorXd>& global_best,
                     const SwarmCoefficients& coefficients,
                     const Eigen::Ref<const Eigen::VectorXd>& lower,
                     const Eigen::Ref<const Eigen::VectorXd>& upper, double clamp_fraction,
                     UniformStream& stream) {
  const Eigen::Index n = particle.position.size();
  for (Eigen::Index k = 0; k < n; ++k) {
    const double r1 = stream.next();
    const double r2 = stream.next();
    const double x = particle.position[k];
    double v = coefficients.inertia * particle.velocity[k] +
               coefficients.cognitive * r1 * (particle.best_position[k] - x) +
               coefficients.social * r2 * (global_best[k] - x);
    const double vmax = clamp_fraction * (upper[k] - lower[k]);
    v = std::clamp(v, -vmax, vmax);
    double next = x + v;
    if (next < lower[k]) {
      next = lower[k];
      v = 0.0;
    } else if (next > upper[k]) {
      next = upper[k];
      v = 0.0;
    }
    particle.position[k] = next;
    particle.velocity[k] = v;
  }
}

IkSolution solve_ik(const IkProblem& problem, const SwarmConfig& config,
                    const IterationObserver& observer) {
  config.validate();
  const DHChain& chain = problem.chain;
  if (!chain.has_finite_limits()) {
    throw Error(ErrorCode::InfiniteLimits, "every joint needs finite limits");
  }
  if (problem.reference.size() != chain.size()) {
    throw Error(ErrorCode::LengthMismatch, "reference joints");
  }
  if (!chain.within_limits(problem.reference)) {
    throw Error(ErrorCode::LimitViolation, "reference joints outside limits");
  }
  if (std::abs(problem.target.orientation.norm() - 1.0) > 1e-6) {
    throw Error(ErrorCode::NotUnit, "target orientation");
  }
  if (!problem.target.position.allFinite()) {
    throw Error(ErrorCode::NonFiniteInput, "target position");
  }

  const Eigen::VectorXd lower = chain.lower();
  const Eigen::VectorXd upper = chain.upper();
  const Eigen::Index dims = chain.size();

  UniformStream stream(config.rng_seed);
  std::vector<Particle> swarm(static_cast<std::size_t>(config.particle_count));
  for (auto& p : swarm) {
    p.position.resize(dims);
    for (Eigen::Index k = 0; k < dims; ++k) {
      p.position[k] = lower[k] + stream.next() * (upper[k] - lower[k]);
    }
    p.velocity = Eigen::VectorXd::Zero(dims);
    p.best_position = p.position;
  }

  FitnessWeights weights;
  const double drawn_omega_p = stream.next();
  weights.omega_p = config.fixed_omega_p.value_or(drawn_omega_p);
  if (weights.joint_weights.size() != dims) weights.joint_weights = Eigen::VectorXd::Ones(dims);

  IkSolution solution;
  solution.seed = config.rng_seed;
  solution.omega_p = weights.omega_p;
  solution.trace.reserve(static_cast<std::size_t>(config.max_iterations));

  std::size_t best_index = 0;
  for (int t = 0; t < config.max_iterations; ++t) {
    for (auto& p : swarm) {
      const double f = fitness(p.position, problem, weights);
      if (f < p.best_fitness) {
        p.best_fitness = f;
        p.best_position = p.position;
      }
    }
    best_index = 0;
    for (std::size_t i = 1; i < swarm.size(); ++i) {
      if (swarm[i].best_fitness < swarm[best_index].best_fitness) best_index = i;
    }
    const double best_fitness = swarm[best_index].best_fitness;
    const SwarmCoefficients coefficients = schedule(t, config);
    solution.trace.push_back({t, best_fitness, coefficients});
    solution.iterations_used = t + 1;
    if (observer) observer(t, swarm, solution.trace.back());

    if (config.early_exit_fitness && best_fitness < *config.early_exit_fitness) {
      solution.converged = true;
      break;
    }
    const Eigen::VectorXd global_best = swarm[best_index].best_position;
    for (auto& p : swarm) {
      update_particle(p, global_best, coefficients, lower, upper,
                      config.velocity_clamp_fraction, stream);
    }
  }

  const Particle& best = swarm[best_index];
  const FitnessTerms terms = fitness_terms(best.best_position, problem, weights);
  solution.joints = best.best_position;
  solution.fitness = terms.total;
  solution.position_error = terms.position_error;
  solution.pose_error = terms.pose_error;
  return solution;
}

}  // namespace dtwin

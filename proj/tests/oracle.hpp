// Stand-alone reference computations for the tests. Nothing here calls into
// the library's math; arrays and loops only, apart from Eigen's quaternion
// conversion used for the orientation term.
#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Geometry>

namespace oracle {

using Mat4 = std::array<std::array<double, 4>, 4>;

inline Mat4 identity4() {
  Mat4 m{};
  for (int i = 0; i < 4; ++i) m[i][i] = 1.0;
  return m;
}

inline Mat4 mul(const Mat4& a, const Mat4& b) {
  Mat4 c{};
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j)
      for (int k = 0; k < 4; ++k) c[i][j] += a[i][k] * b[k][j];
  return c;
}

inline Mat4 rot_z(double t) {
  Mat4 m = identity4();
  m[0][0] = std::cos(t); m[0][1] = -std::sin(t);
  m[1][0] = std::sin(t); m[1][1] = std::cos(t);
  return m;
}

inline Mat4 rot_x(double t) {
  Mat4 m = identity4();
  m[1][1] = std::cos(t); m[1][2] = -std::sin(t);
  m[2][1] = std::sin(t); m[2][2] = std::cos(t);
  return m;
}

inline Mat4 trans(double x, double y, double z) {
  Mat4 m = identity4();
  m[0][3] = x; m[1][3] = y; m[2][3] = z;
  return m;
}

// DH joint transform assembled from elementary motions.
inline Mat4 dh(double alpha, double a, double d, double theta) {
  return mul(mul(mul(rot_z(theta), trans(0, 0, d)), trans(a, 0, 0)), rot_x(alpha));
}

struct Row { double alpha, a, d, lo, hi; };

// TIAGo arm table, typed in independently of the library.
inline constexpr double kHalfPi = std::numbers::pi / 2;
inline constexpr std::array<Row, 7> kArm = {{
    {0, 0.15505, -0.151, 0, 2.75},
    {kHalfPi, 0.125, -0.0165, -1.57, 1.09},
    {-kHalfPi, 0, -0.0895, -3.53, 1.57},
    {kHalfPi, 0.02, -0.027, -0.39, 2.36},
    {-kHalfPi, 0.02, 0.162, -2.09, 2.09},
    {kHalfPi, 0, 0, -1.41, 1.41},
    {-kHalfPi, 0, 0, -2.09, 2.09},
}};

template <typename Vec>
Mat4 arm_fk(const Vec& q) {
  Mat4 m = identity4();
  for (std::size_t k = 0; k < kArm.size(); ++k) {
    m = mul(m, dh(kArm[k].alpha, kArm[k].a, kArm[k].d, q[static_cast<int>(k)]));
  }
  return m;
}

inline double position_error(const Mat4& m, const std::array<double, 3>& p) {
  const double dx = m[0][3] - p[0], dy = m[1][3] - p[1], dz = m[2][3] - p[2];
  return std::sqrt(dx * dx + dy * dy + dz * dz);
}

inline Eigen::Quaterniond orientation(const Mat4& m) {
  Eigen::Matrix3d r;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) r(i, j) = m[i][j];
  return Eigen::Quaterniond(r).normalized();
}

inline double angle_between(const Eigen::Quaterniond& a, const Eigen::Quaterniond& b) {
  const double dot = std::abs(a.w() * b.w() + a.x() * b.x() + a.y() * b.y() + a.z() * b.z());
  return 2.0 * std::acos(std::min(1.0, dot));
}

inline constexpr std::array<double, 7> kJointWeights = {1, 0.5, 0.5, 0.1, 0.1, 0.1, 0.1};

template <typename Vec>
double flexibility(const Vec& cand, const Vec& ref) {
  double s = 0;
  for (int k = 0; k < 7; ++k) {
    const double term = kJointWeights[k] * (cand[k] - ref[k]);
    s += term * term;
  }
  return s;
}

struct Target {
  std::array<double, 3> position;
  Eigen::Quaterniond orientation;
};

template <typename Vec>
double fitness(const Vec& cand, const Target& target, const Vec& ref, double omega_p) {
  const Mat4 m = arm_fk(cand);
  return omega_p * position_error(m, target.position) +
         (1 - omega_p) * angle_between(orientation(m), target.orientation) +
         flexibility(cand, ref);
}

// The quadratic coefficient schedule, evaluated term by term.
inline double ramp(double start, double end, int t, int total) {
  const double s = static_cast<double>(t) / total;
  const double s2 = s * s;
  return (start - end) * s2 + (end - start) * (2 * s) + start;
}

// Uniform [0,1) from the top 53 bits of each 64-bit output.
struct Draws {
  std::mt19937_64 engine;
  explicit Draws(std::uint64_t seed) : engine(seed) {}
  double operator()() { return std::ldexp(static_cast<double>(engine() >> 11), -53); }
};

using Vec7 = std::array<double, 7>;

struct Bird {
  Vec7 x{}, v{}, best{};
  double best_f = INFINITY;
};

struct SwarmResult {
  Vec7 gbest{};
  double gbest_f = INFINITY;
  double omega_p = 0;
  std::vector<double> trace;
};

// Literal replay of the swarm loop: random start, then per iteration
// evaluate, keep better personal bests, take the first minimum as global
// best, then move with the scheduled coefficients.
inline SwarmResult replay_swarm(int particles, int iterations, std::uint64_t seed,
                                const Target& target, const Vec7& ref, double clamp_fraction = 0.2) {
  Draws draw(seed);
  std::vector<Bird> birds(static_cast<std::size_t>(particles));
  for (auto& b : birds) {
    for (int k = 0; k < 7; ++k) b.x[k] = kArm[k].lo + draw() * (kArm[k].hi - kArm[k].lo);
    b.best = b.x;
  }
  SwarmResult out;
  out.omega_p = draw();
  std::size_t g = 0;
  for (int t = 0; t < iterations; ++t) {
    for (auto& b : birds) {
      const double f = fitness(b.x, target, ref, out.omega_p);
      if (f < b.best_f) {
        b.best_f = f;
        b.best = b.x;
      }
    }
    g = 0;
    for (std::size_t i = 1; i < birds.size(); ++i)
      if (birds[i].best_f < birds[g].best_f) g = i;
    out.trace.push_back(birds[g].best_f);
    const double w = ramp(0.9, 0.4, t, iterations);
    const double c1 = ramp(1.5, 2.5, t, iterations);
    const double c2 = ramp(2.5, 1.5, t, iterations);
    const Vec7 gb = birds[g].best;
    for (auto& b : birds) {
      for (int k = 0; k < 7; ++k) {
        const double r1 = draw();
        const double r2 = draw();
        double v = w * b.v[k] + c1 * r1 * (b.best[k] - b.x[k]) + c2 * r2 * (gb[k] - b.x[k]);
        const double vmax = clamp_fraction * (kArm[k].hi - kArm[k].lo);
        if (v > vmax) v = vmax;
        if (v < -vmax) v = -vmax;
        double x = b.x[k] + v;
        if (x < kArm[k].lo || x > kArm[k].hi) {
          x = x < kArm[k].lo ? kArm[k].lo : kArm[k].hi;
          v = 0;
        }
        b.x[k] = x;
        b.v[k] = v;
      }
    }
  }
  out.gbest = birds[g].best;
  out.gbest_f = birds[g].best_f;
  return out;
}

// Quintic coefficients from the 6x6 boundary system, solved by Gaussian
// elimination with partial pivoting.
inline std::array<double, 6> quintic_by_elimination(double q0, double v0, double a0, double q1,
                                                    double v1, double a1, double T) {
  double m[6][7] = {};
  // rows: q(0), q'(0), q''(0), q(T), q'(T), q''(T)
  m[0][0] = 1;
  m[1][1] = 1;
  m[2][2] = 2;
  for (int i = 0; i < 6; ++i) {
    m[3][i] = std::pow(T, i);
    m[4][i] = i >= 1 ? i * std::pow(T, i - 1) : 0;
    m[5][i] = i >= 2 ? i * (i - 1) * std::pow(T, i - 2) : 0;
  }
  const double rhs[6] = {q0, v0, a0, q1, v1, a1};
  for (int i = 0; i < 6; ++i) m[i][6] = rhs[i];
  for (int c = 0; c < 6; ++c) {
    int p = c;
    for (int r = c + 1; r < 6; ++r)
      if (std::abs(m[r][c]) > std::abs(m[p][c])) p = r;
    for (int j = 0; j < 7; ++j) std::swap(m[c][j], m[p][j]);
    for (int r = 0; r < 6; ++r) {
      if (r == c) continue;
      const double f = m[r][c] / m[c][c];
      for (int j = c; j < 7; ++j) m[r][j] -= f * m[c][j];
    }
  }
  std::array<double, 6> x{};
  for (int i = 0; i < 6; ++i) x[i] = m[i][6] / m[i][i];
  return x;
}

}  // namespace oracle

#pragma once

// Straightforward reference implementations used as test oracles. None of
// these share code with the library.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "lagdyn/net.hpp"
#include "lagdyn/types.hpp"

namespace lagdyn::ref {

using Vec2 = Eigen::Vector2d;
using Mat2 = Eigen::Matrix2d;

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform(double lo = -1.0, double hi = 1.0) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double sd = 1.0) { return std::normal_distribution<double>(0.0, sd)(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }

  Vec vec(Index n, double lo = -1.0, double hi = 1.0);
  Vec3 vec3(double lo = -1.0, double hi = 1.0);
  Vec3 unit3();
  RowMat rows(Index r, Index c, double lo = -1.0, double hi = 1.0);
  /// Random symmetric positive definite matrix with eigenvalues >= floor.
  Mat spd(Index n, double floor = 0.1);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
};

/// R = I + sin θ K + (1 - cos θ) K², K the cross matrix of the unit axis.
Mat3 rodrigues(const Vec3& axis_angle);

/// Two independent passes of backward differences, explicit loops.
void backward_differences(const RowMat& q, bool replicate, RowMat& qdot, RowMat& qddot);

/// Dense forward pass coded with raw loops over the layer parameters.
Vec dense_forward(const std::vector<net::DenseLayer>& layers, const Vec& input);

/// Naive same-length zero-padded correlation.
Vec naive_conv(const Vec& x, const Vec& k, double bias);

/// Double-loop ½ xᵀ M x.
double quadratic_half(const Mat& m, const Vec& x);

/// Full dynamic-programming table over whole strings.
int levenshtein_table(const std::vector<int>& a, const std::vector<int>& b);

/// Exponential-time recursion over all edit scripts.
int levenshtein_recursive(const std::vector<int>& a, const std::vector<int>& b);

/// Textbook double pendulum with point masses at link ends and absolute
/// angles from the downward vertical.
struct DoublePendulum {
  double m1, m2, l1, l2, g;

  Mat2 inertia(const Vec2& q) const;
  Mat2 coriolis(const Vec2& q, const Vec2& qdot) const;
  Vec2 gravity(const Vec2& q) const;
};

/// Kinetic energy from Cartesian velocities of the point masses of a planar
/// chain (absolute angles).
double cartesian_kinetic(const std::vector<double>& masses, const std::vector<double>& lengths, const Vec& q,
                         const Vec& qdot);

/// Potential energy from the heights of the point masses.
double cartesian_potential(const std::vector<double>& masses, const std::vector<double>& lengths, double g,
                           const Vec& q);

/// Segment classes of a frame label string.
std::vector<int> collapse(const std::vector<int>& labels);

/// Random frame labels with random-length runs of neighbouring-distinct classes.
std::vector<int> random_labels(Rng& rng, int frames, int classes, int min_run, int max_run);

std::string temp_path(const std::string& name);

}  // namespace lagdyn::ref

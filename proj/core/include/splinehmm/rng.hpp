#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace splinehmm {

// Splittable generator keyed by (seed, rep, stream).  The state is derived by
// hashing the key, so replicate streams are independent of evaluation order
// and thread schedule; identical keys give bit-identical draws.
class Rng {
 public:
  Rng(std::uint64_t seed, std::uint64_t rep, std::uint64_t stream);

  std::uint64_t next_u64();
  // Uniform on (0, 1), 53-bit resolution, never exactly zero.
  double uniform01();
  double normal();  // Box-Muller on the uniform stream
  double gamma(double shape, double scale);
  double vonmises(double location, double kappa);
  // Index drawn from an unnormalized non-negative weight vector.
  int categorical(const Eigen::VectorXd& weights);

 private:
  std::uint64_t s_[4];
};

}  // namespace splinehmm

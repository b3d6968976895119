#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lss/rng.hpp"

namespace lss {

/// CTMC generator Γ = (r_ij): nonnegative off-diagonal rates, zero row sums.
class GeneratorMatrix {
 public:
  GeneratorMatrix() = default;
  /// Takes the matrix as given; call validate_generator() before use.
  explicit GeneratorMatrix(Eigen::MatrixXd rates);
  static GeneratorMatrix from_rows(const std::vector<std::vector<double>>& rows);

  int states() const { return static_cast<int>(rates_.rows()); }
  double rate(int i, int j) const { return rates_(i, j); }
  /// Total exit rate −r_ii.
  double exit_rate(int i) const { return -rates_(i, i); }
  const Eigen::MatrixXd& matrix() const { return rates_; }

  /// Smallest strictly positive off-diagonal rate, or nullopt if there is none.
  std::optional<double> min_positive_rate() const;
  bool irreducible() const;

  std::vector<std::vector<double>> rows() const;

 private:
  Eigen::MatrixXd rates_;
};

/// Throws GeneratorError naming the first violated invariant.
void validate_generator(const GeneratorMatrix& generator);

/// Right-continuous regime trajectory on [start, end].
struct SwitchPath {
  struct Jump {
    double time;
    int state;
  };

  double start = 0.0;
  double end = 0.0;
  int initial_state = 0;
  std::vector<Jump> jumps;

  /// State at time t; at a jump time this is the post-jump state.
  int regime_at(double t) const;
};

/// Jump-chain construction: hold Exp(−r_ii), then move to j with r_ij/(−r_ii).
SwitchPath sample_path(const GeneratorMatrix& generator, int initial_state,
                       double start, double end, RandomStream& rng);

struct CouplingTime {
  double time = 0.0;
  /// True when the chains had not met by the horizon; time is then the horizon.
  bool censored = false;
};

/// 100 / (smallest positive off-diagonal rate).
double default_coupling_horizon(const GeneratorMatrix& generator);

/// First meeting time of independent chains started in first and second.
CouplingTime coupling_time(const GeneratorMatrix& generator, int first,
                           int second, RandomStream& rng,
                           std::optional<double> horizon = std::nullopt);

/// Solves πΓ = 0, Σπ = 1. Throws GeneratorError for reducible generators.
Eigen::VectorXd stationary_distribution(const GeneratorMatrix& generator);

/**
 * P{τ ≤ T} for the coupling time of two independent copies of the chain,
 * computed from the transient block of the N²-state product chain:
 * P{τ > T} = e_{(first,second)}ᵀ exp(Q_off T) 1.
 */
double coupling_cdf(const GeneratorMatrix& generator, int first, int second,
                    double horizon);

}  // namespace lss

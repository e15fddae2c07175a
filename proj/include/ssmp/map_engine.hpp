#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssmp/levy.hpp"
#include "ssmp/paths.hpp"
#include "ssmp/rng.hpp"

namespace ssmp {

using ComplexMatrix = Eigen::MatrixXcd;

/// Finite-state Markov additive process.
///
/// `Q` holds jump intensities off the diagonal; a row may sum to less than zero,
/// the deficit being an extra killing rate in that state. `levy[i]` drives xi
/// while theta sits in state i, and `delta[i][j]` is the law of the xi-jump that
/// accompanies a theta-transition i -> j (its diagonal is Dirac(0)).
struct MapSpec {
    std::vector<Point> states;
    Eigen::MatrixXd Q;
    std::vector<LevySpec> levy;
    std::vector<std::vector<JumpLaw>> delta;

    std::size_t n() const { return states.size(); }
    std::size_t dim() const { return states.empty() ? 0 : states.front().size(); }
    void validate() const;
    /// Killing rate from the row deficit of Q in state i.
    double row_deficit(std::size_t i) const;
    std::size_t index_of(std::span<const double> y) const;

    bool operator==(const MapSpec& other) const;
};

/// Builds a spec whose delta is Dirac(0) everywhere.
MapSpec make_map_spec(std::vector<Point> states, Eigen::MatrixXd Q, std::vector<LevySpec> levy);

/// Event-driven simulation: theta jump and killing times are exact; xi is laid
/// on the grid between events from the current state's Lévy law.
MapPath simulate_map(const MapSpec& spec, std::size_t y0, double z0, double horizon, double step, RngStream& rng);

/// A(u) = diag(psi_i(u)) + (q_ij G_ij(u)). Imaginary u always; real u only when
/// every state has finite exponential moments and all jump laws are bounded.
ComplexMatrix matrix_exponent(const MapSpec& spec, Complex u);

/// exp(A(u) t); entry (i, j) is E_{i,0}[exp(u xi_t); theta_t = j].
ComplexMatrix map_characteristic(const MapSpec& spec, Complex u, double t);

/// Matrix exponential by scaling and squaring with the [13/13] Padé approximant.
ComplexMatrix expm(const ComplexMatrix& a);
Eigen::MatrixXd expm(const Eigen::MatrixXd& a);

/// Probability vector pi with pi Q = 0 for a conservative irreducible Q.
Eigen::VectorXd stationary_measure(const Eigen::MatrixXd& Q);

struct JumpPairVerdict {
    std::size_t i = 0;
    std::size_t j = 0;
    bool equal_in_law = false;
    std::string method;  // "structural" or "ks"
    double ks_statistic = 0.0;
};

struct ReversibilityReport {
    Eigen::VectorXd pi;
    double detailed_balance_residual = 0.0;
    bool detailed_balance = false;
    std::vector<JumpPairVerdict> jump_pairs;
    bool jump_symmetry = false;
    bool pass = false;
};

ReversibilityReport check_reversibility(const MapSpec& spec, std::optional<Eigen::VectorXd> pi = std::nullopt,
                                        double tolerance = 1e-10);

/// MAP with theta and xi independent, xi the given Lévy process in every state,
/// and an independent exponential killing at rate `lambda`.
MapSpec make_skew_product(const Eigen::MatrixXd& theta_Q, std::vector<Point> states, const LevySpec& levy,
                          double lambda);

/// The MAP (theta, -xi).
MapSpec negate_xi(const MapSpec& spec);

}  // namespace ssmp

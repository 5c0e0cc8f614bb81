#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "flexform/dynamics.hpp"
#include "flexform/errors.hpp"
#include "flexform/rigidity.hpp"

namespace flexform {

/// Real edge errors e and virtual edge errors (|z~_k|^2 - d~_k^2). Together
/// they form a self-contained error system of dimension 2n - 3.
struct AugmentedError {
  Eigen::VectorXd real;
  Eigen::VectorXd virtual_part;

  [[nodiscard]] Eigen::VectorXd stacked() const;
};

AugmentedError augmented_error(const FormationGraph& graph, const VirtualAugmentation& augmentation,
                               const DistanceSpec& distances, const Eigen::VectorXd& positions);

/// Rigidity rows of the real edges followed by the virtual ones.
Eigen::MatrixXd augmented_rigidity_matrix(const FormationGraph& graph, const VirtualAugmentation& augmentation,
                                          const Eigen::VectorXd& positions);

/// Time derivative of the augmented error along `field`: 2 R_aug(p) f(p).
Eigen::VectorXd augmented_error_rate(const FormationGraph& graph, const VirtualAugmentation& augmentation,
                                     const VectorField& field, const Eigen::VectorXd& positions);
Eigen::VectorXd augmented_error_rate(const FormationSystem& system, const VirtualAugmentation& augmentation,
                                     const Eigen::VectorXd& positions);

/// Scale that makes error rates comparable across formation sizes; rates
/// grow like d^4 under the gradient law.
double error_rate_scale(const FormationSystem& system);

struct EquilibriumOptions {
  /// Time budget for the flow phase.
  double horizon = 20.0;
  double dt = 1e-3;
  int check_stride = 50;
  /// Target for |d/dt augmented error| / error_rate_scale.
  double residual_tol = 1e-10;
  int max_refine_iterations = 200;
  double fd_step = 1e-6;
};

struct Equilibrium {
  Eigen::VectorXd positions;
  /// Normalized residual |d/dt augmented error| / error_rate_scale.
  double residual = 0.0;
  double integrated_time = 0.0;
  int refine_iterations = 0;
};

class EquilibriumNotFound : public Error {
 public:
  EquilibriumNotFound(double best_residual, Eigen::VectorXd best_positions);

  [[nodiscard]] double best_residual() const noexcept { return best_residual_; }
  [[nodiscard]] const Eigen::VectorXd& best_positions() const noexcept { return best_positions_; }

 private:
  double best_residual_;
  Eigen::VectorXd best_positions_;
};

/// Locates a rest point of the augmented error dynamics near `initial`: flows
/// the closed loop until the error rate is small, then polishes with damped
/// least squares on the error rate as a function of p. Minimum-norm steps keep
/// the search out of the translation/rotation kernel. Agents may still move
/// at the result (relative equilibrium).
Equilibrium find_error_equilibrium(const FormationSystem& system, const VirtualAugmentation& augmentation,
                                   const Eigen::VectorXd& initial, const EquilibriumOptions& options = {});

/// Jacobian of the augmented error dynamics at `positions`, computed as
/// dG/dp * pinv(2 R_aug) with G(p) = 2 R_aug(p) f(p) and dG/dp from central
/// differences. Throws Error(NonGenericEquilibrium) if R_aug loses rank.
Eigen::MatrixXd augmented_jacobian(const FormationSystem& system, const VirtualAugmentation& augmentation,
                                   const Eigen::VectorXd& positions, double fd_step = 1e-6,
                                   double rank_tol = kDefaultRankTolerance);

enum class Verdict { AsymptoticallyStable, MarginalWithZeroModes, Unstable };

const char* to_string(Verdict verdict);

inline constexpr double kDefaultZeroTolerance = 1e-7;

struct StabilityReport {
  /// Sorted by decreasing real part, then decreasing imaginary part.
  std::vector<std::complex<double>> eigenvalues;
  int zero_count = 0;
  int unstable_count = 0;
  Verdict verdict = Verdict::MarginalWithZeroModes;
  /// Largest real part; exactly 0 when the critical eigenvalue is a zero mode.
  double max_real_part = 0.0;
  double raw_max_real_part = 0.0;
  /// zero_tol * sigma_max(J).
  double threshold = 0.0;
  /// Whether the columns belonging to virtual errors vanish; unset when the
  /// real/virtual split is unknown.
  std::optional<bool> block_structure_ok;
  double max_virtual_column_norm = 0.0;
};

/// Eigenvalues and verdict. Tolerances are relative to the largest singular
/// value of J. Pass real_edge_count >= 0 to also test the virtual columns.
StabilityReport eigen_analysis(const Eigen::MatrixXd& jacobian, double zero_tol = kDefaultZeroTolerance,
                               int real_edge_count = -1);

struct StabilityOptions {
  EquilibriumOptions equilibrium;
  double zero_tol = kDefaultZeroTolerance;
  double fd_step = 1e-6;
  double rank_tol = kDefaultRankTolerance;
};

struct StabilityAnalysis {
  Equilibrium equilibrium;
  Eigen::MatrixXd jacobian;
  StabilityReport report;
};

/// find_error_equilibrium -> augmented_jacobian -> eigen_analysis.
StabilityAnalysis analyze_stability(const FormationSystem& system, const VirtualAugmentation& augmentation,
                                    const Eigen::VectorXd& initial, const StabilityOptions& options = {});

struct CertificateEntry {
  VirtualAugmentation augmentation;
  StabilityReport report;
  /// zero_count >= number of virtual edges and the virtual columns vanish.
  bool pass = false;
  /// zero_count == number of virtual edges.
  bool exact = false;
};

struct ZeroModeCertificate {
  bool pass = false;
  Eigen::VectorXd equilibrium;
  std::vector<CertificateEntry> entries;
};

struct CertificateOptions {
  int min_augmentations = 5;
  int max_shuffles = 64;
  std::uint64_t seed = 1;
  StabilityOptions stability;
};

/// For a flexible formation without disturbances, checks that every tested
/// virtual completion yields a linearization with at least one zero
/// eigenvalue per virtual edge and vanishing virtual columns. Completions come
/// from the lexicographic order plus seeded shuffles of the candidate
/// non-edges. Throws Error(Precondition) if the formation is not flexible.
ZeroModeCertificate certify_zero_modes(const FormationGraph& graph, const DistanceSpec& distances,
                                       const Eigen::VectorXd& positions, const CertificateOptions& options = {});

}  // namespace flexform

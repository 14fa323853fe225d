#pragma once

#include <complex>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace qlab::classical {

using cplx = std::complex<double>;

struct ClassicalTolerances {
    double row_sum = 1e-12;
    double atom_merge = 1e-12;
    double lp_objective = 1e-7;
    double poisson_tail = 1e-12;
    int deficiency_size_limit = 10000;  // |Omega1| * |Omega2| guard
};

ClassicalTolerances& classical_tolerances();

/// Finite statistical experiment (P_theta : theta in Theta) on a common
/// sample space. Construction enforces the mutually-absolutely-continuous
/// class: every outcome is either in the support of all rows or of none.
class Experiment {
public:
    Experiment(std::vector<std::string> params, std::vector<std::vector<double>> probs,
               const ClassicalTolerances& tol = classical_tolerances());

    /// Escape hatch for support-agnostic operations (deficiency, canonical
    /// measure under the joint-support convention): skips the mutual
    /// absolute-continuity check, keeps row validation.
    static Experiment unrestricted(std::vector<std::string> params,
                                   std::vector<std::vector<double>> probs,
                                   const ClassicalTolerances& tol = classical_tolerances());

    int num_params() const { return static_cast<int>(params_.size()); }
    int num_outcomes() const { return static_cast<int>(probs_.front().size()); }
    const std::vector<std::string>& params() const { return params_; }
    std::span<const double> row(int theta) const { return probs_[theta]; }
    const std::vector<std::vector<double>>& probs() const { return probs_; }

    /// Independent product: outcomes are pairs, probabilities multiply.
    static Experiment product(const Experiment& a, const Experiment& b);

private:
    Experiment() = default;
    std::vector<std::string> params_;
    std::vector<std::vector<double>> probs_;
};

/// Point of the likelihood simplex S_Theta.
struct SimplexPoint {
    std::vector<double> z;
    explicit SimplexPoint(std::vector<double> coords);
};

/// Law of the likelihood-ratio vector under mu = sum_theta P_theta.
/// Total mass |Theta|; one atom per distinct likelihood vector.
struct CanonicalMeasure {
    struct Atom {
        std::vector<double> v;  // point in S_Theta
        double mass;
    };
    std::vector<Atom> atoms;
    double total_mass() const;
};

CanonicalMeasure canonical_measure(const Experiment& e,
                                   const ClassicalTolerances& tol = classical_tolerances());

/// eta(z) = sum_omega prod_theta P_theta(omega)^{z_theta}, in [0,1].
double hellinger_transform(const Experiment& e, const SimplexPoint& z);
/// Same transform evaluated through canonical-measure atoms (consistency route).
double hellinger_transform(const CanonicalMeasure& m, const SimplexPoint& z);

/// h(P1,P2) = sum_omega (sqrt p1 - sqrt p2)^2 = 2(1 - affinity). Supports are
/// unrestricted here; disjoint-support rows are allowed.
double hellinger_distance(std::span<const double> p1, std::span<const double> p2);

/// Binomial(n, theta_i/n) rows over outcomes {0..n}.
Experiment binomial_experiment(int n, std::span<const double> thetas);
/// Closed-form eta of the binomial experiment (per-trial affinity ^ n);
/// valid for arbitrarily large n without materializing the table.
double binomial_hellinger(double n, std::span<const double> thetas, const SimplexPoint& z);

/// eta(z) = exp(prod theta_i^{z_i} - sum theta_i z_i) of the Poisson limit.
double poisson_limit_hellinger(std::span<const double> thetas, const SimplexPoint& z);
/// Truncated-pmf realization; truncation K chosen so the tail mass is below
/// the tolerance, reported through k_out.
Experiment poisson_experiment(std::span<const double> thetas, int* k_out = nullptr,
                              const ClassicalTolerances& tol = classical_tolerances());

/// m x m Fisher information matrix (symmetric positive semidefinite).
struct FisherMatrix {
    std::vector<std::vector<double>> m;
    explicit FisherMatrix(std::vector<std::vector<double>> entries);
    int size() const { return static_cast<int>(m.size()); }
};

/// Hellinger transform of the Gaussian shift family (N(u_i, I^{-1}))_i:
/// exp(-1/2 [sum_i z_i u_i' I u_i - ubar' I ubar]), ubar = sum z_i u_i.
double gaussian_shift_hellinger(std::span<const std::vector<double>> shifts,
                                const FisherMatrix& fisher, const SimplexPoint& z);

/// Per-(n,z) Hellinger gaps against a limit, with a fitted log-log slope.
struct ConvergenceTable {
    std::vector<double> ns;
    std::vector<SimplexPoint> zs;
    std::vector<std::vector<double>> eta_n;   // [n][z]
    std::vector<double> eta_limit;            // [z]
    std::vector<std::vector<double>> gaps;    // [n][z]
    double slope = 0.0;                       // fitted on max-over-z gap
    bool monotone = true;                     // gaps non-increasing in n
};

using EtaEvaluator = std::function<double(double n, const SimplexPoint& z)>;
using LimitEvaluator = std::function<double(const SimplexPoint& z)>;

ConvergenceTable weak_convergence_report(const EtaEvaluator& eta_n, const LimitEvaluator& limit,
                                         std::span<const SimplexPoint> z_grid,
                                         std::span<const double> n_schedule);

/// Le Cam deficiency via the exact linear program over Markov kernels.
struct DeficiencyResult {
    double delta;
    std::vector<std::vector<double>> kernel;  // |Omega1| x |Omega2|, row-stochastic
};

DeficiencyResult deficiency_lp(const Experiment& e1, const Experiment& e2,
                               const ClassicalTolerances& tol = classical_tolerances());

double le_cam_distance(const Experiment& e1, const Experiment& e2,
                       const ClassicalTolerances& tol = classical_tolerances());

/// Characteristic-function value of the log-likelihood process:
///   sum_omega P_base(omega) prod_j (P_theta_j(omega)/P_base(omega))^{+-i t_j}.
/// This is the classical value of a canonical-state word; the quantum module
/// must agree with it on diagonal experiments.
struct LoglikLetter {
    int theta;
    double t;
    bool inverse = false;
};
cplx loglik_char(const Experiment& e, int base_theta, std::span<const LoglikLetter> letters);

/// Fisher information of a finite family at theta0 from the score table
/// d[k][omega] = dP(omega)/dtheta_k:  I_kl = sum_omega d_k d_l / P(omega).
FisherMatrix fisher_information(std::span<const double> p0,
                                std::span<const std::vector<double>> scores);

/// CSV serialization: one line per parameter, label first, then the outcome
/// probabilities (17 significant digits).
std::string to_csv(const Experiment& e);
Experiment experiment_from_csv(const std::string& text, bool unrestricted = false);

}  // namespace qlab::classical

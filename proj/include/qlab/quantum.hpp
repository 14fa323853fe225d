#pragma once

#include <span>
#include <string>
#include <vector>

#include "qlab/matrix.hpp"

namespace qlab::quantum {

struct QuantumTolerances {
    double faithful = 1e-10;       // smallest admissible eigenvalue of a state
    double letter_drop = 1e-15;    // |t| below this is the identity letter
    double sufficiency = 1e-8;     // cocycle-in-span residual
    double closure_rank = 1e-10;   // Gram-Schmidt rank cutoff for the closure
};

QuantumTolerances& quantum_tolerances();

/// Quantum statistical experiment on M_d(C): a family of faithful states with
/// a distinguished base point theta0.
class Experiment {
public:
    Experiment(std::vector<std::string> params, std::vector<DensityMatrix> states,
               int base_index, const QuantumTolerances& tol = quantum_tolerances());

    int dim() const { return states_.front().dim(); }
    int num_params() const { return static_cast<int>(params_.size()); }
    int base_index() const { return base_; }
    const std::vector<std::string>& params() const { return params_; }
    const DensityMatrix& state(int theta) const { return states_.at(theta); }
    const DensityMatrix& base_state() const { return states_[base_]; }
    int param_index(const std::string& label) const;

private:
    std::vector<std::string> params_;
    std::vector<DensityMatrix> states_;
    int base_;
};

/// Letter u_t(theta)^{+-1} of the free group G(Theta). theta indexes the
/// experiment's parameter list.
struct WordLetter {
    int theta;
    double t;
    bool inverse = false;
};

/// Finite word in G(Theta). Letters with t ~ 0 or theta = theta0 are dropped
/// at construction (u_0(theta) = u_t(theta0) = e); no further free-group
/// reduction is attempted, since adjacent equal-theta letters do not merge
/// (only the twisted cocycle identity holds).
class GroupWord {
public:
    GroupWord() = default;
    GroupWord(std::span<const WordLetter> letters, int base_index,
              const QuantumTolerances& tol = quantum_tolerances());

    const std::vector<WordLetter>& letters() const { return letters_; }
    bool empty() const { return letters_.empty(); }

    GroupWord inverse() const;
    GroupWord concat(const GroupWord& other) const;
    /// Modular automorphism alpha_s applied letterwise:
    /// u_t(theta) -> u_s(theta)^{-1} u_{t+s}(theta).
    GroupWord modular_shift(double s, int base_index) const;

private:
    std::vector<WordLetter> letters_;
};

/// Modular orbit sigma_t(a) = rho^{it} a rho^{-it}.
CMat modular_orbit(const DensityMatrix& rho, const CMat& a, double t);

/// Connes cocycle [D phi_theta, D phi]_t = rho_theta^{it} rho^{-it} (unitary).
CMat connes_cocycle(const Experiment& e, int theta, double t);

/// Operator of a word: ordered product of cocycles (inverse = adjoint).
CMat word_operator(const Experiment& e, const GroupWord& g);

/// Canonical state omega_E(g) = Tr(rho_theta0 pi(g)); |omega(g)| <= 1.
cplx canonical_state(const Experiment& e, const GroupWord& g);

/// omega_theta(g) = Tr(rho_theta pi(g)).
cplx state_at_theta(const Experiment& e, int theta, const GroupWord& g);

/// F(ip) = Tr(rho^p rho_theta^{1-p}), the quantum Hellinger value; p = 1/2
/// gives the transition probability Tr(sqrt(rho) sqrt(rho_theta)).
double quantum_hellinger(const DensityMatrix& rho_theta, const DensityMatrix& rho, double p);

/// Relative quasi-entropy S_p = (1 - quantum_hellinger) / (p(1-p)).
double quasi_entropy(const DensityMatrix& rho_theta, const DensityMatrix& rho, double p);

/// Convex combination: block-diagonal lambda rho1 (+) (1-lambda) rho2 on
/// dimension d1 + d2. The canonical state mixes linearly.
Experiment mix_experiments(const Experiment& e1, const Experiment& e2, double lambda);

struct SufficiencyResult {
    bool sufficient;
    double max_residual;
};

/// Condition (iii'): every cocycle on Theta x t_grid lies in span(basis).
/// The basis must span a *-closed, unit-containing space; each residual is a
/// relative Hilbert-Schmidt least-squares distance to the span.
SufficiencyResult is_sufficient_subalgebra(const Experiment& e, std::span<const CMat> basis,
                                           std::span<const double> t_grid,
                                           const QuantumTolerances& tol = quantum_tolerances());

/// Multiplicative-and-adjoint closure of {1} u {cocycles on Theta x t_grid},
/// orthonormal in the Hilbert-Schmidt inner product. Dimension <= d^2.
struct MinimalBasis {
    std::vector<CMat> basis;
    int dimension() const { return static_cast<int>(basis.size()); }
};

MinimalBasis minimal_sufficient_basis(const Experiment& e, std::span<const double> t_grid,
                                      const QuantumTolerances& tol = quantum_tolerances());

/// Default incommensurate t grid for sufficiency probing.
std::vector<double> default_t_grid();

/// Contiguous computational-basis block with a tensor split (row-major).
struct FactorBlock {
    int offset;
    int left_dim;
    int right_dim;
};

struct FactorizationResult {
    bool factorizes;
    double residual;  // max Hilbert-Schmidt deviation over theta
};

/// Checks rho_theta = sum_i phi_theta(p_i) rhoL_theta_i (x) rhoR_i with the
/// right factors theta-independent, extracting both factors by partial traces.
FactorizationResult factorization_check(const Experiment& e, std::span<const FactorBlock> blocks,
                                        double tol = 1e-8);

/// max_g |omega_E(g) - omega_F(g)| on the given words. Zero is necessary for
/// equivalence; a finite word set can never certify it.
double equivalence_probe(const Experiment& e, const Experiment& f,
                         std::span<const GroupWord> words);

}  // namespace qlab::quantum

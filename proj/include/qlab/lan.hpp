#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "qlab/ccr.hpp"
#include "qlab/family.hpp"
#include "qlab/matrix.hpp"

namespace qlab::lan {

/// One factor of a cocycle word: the cocycle of rho_{theta0 + u/sqrt(n)}
/// against rho_{theta0} at time t, optionally adjoint.
struct CocycleLetter {
    std::vector<double> u;
    double t;
    bool adjoint = false;
};

using WordSpec = std::vector<CocycleLetter>;

struct LanTolerances {
    double faithful_floor = 1e-8;   // min eigenvalue along the local path
    double gap_floor = 1e-13;       // slope fit uses gaps above this only
    double pass_gap = 1e-3;         // final-gap threshold for the pass flag
    double burn_in = 1e4;           // monotonicity is demanded for n >= burn_in
    // rounding floor of z^n: the exponent n log z carries an O(n eps) error,
    // so gaps below numeric_floor_scale * eps * n are treated as converged
    double numeric_floor_scale = 10.0;
};

LanTolerances& lan_tolerances();

/// Local i.i.d. model theta = theta0 + u/sqrt(n) around a family's base point.
class LocalFamily {
public:
    explicit LocalFamily(std::shared_ptr<const Family> family, double fd_step = 1e-5);
    LocalFamily(std::shared_ptr<const Family> family, FamilyJet jet);

    const Family& family() const { return *family_; }
    std::shared_ptr<const Family> family_ptr() const { return family_; }
    const FamilyJet& jet() const { return jet_; }
    int dim() const { return jet_.dim(); }
    int num_params() const { return jet_.num_params(); }

    DensityMatrix local_state(std::span<const double> u, double n) const;

    /// Smallest power-of-ten n with min eig(rho_{theta0+u/sqrt n}) above the
    /// faithfulness floor for every u in the word (plus base shift).
    double n_min(const WordSpec& word, const std::vector<double>* base_u = nullptr,
                 const LanTolerances& tol = lan_tolerances()) const;

private:
    std::shared_ptr<const Family> family_;
    FamilyJet jet_;
};

/// E^(n) = [Tr(rho_base w_1 ... w_k)]^n with w_j = rho_{theta0+u_j/sqrt n}^{it_j}
/// rho_{theta0}^{-it_j} (adjoint where flagged); the tensor-power collapse
/// identity phi^(x)n(v_1^(x)n ... v_k^(x)n) = [Tr(rho v_1...v_k)]^n. The n-th
/// power is computed as exp(n ln|z|) e^{i n arg z}, branch-free for integer n.
cplx finite_n_expectation(const LocalFamily& fam, const WordSpec& word, double n,
                          const std::vector<double>* base_u = nullptr,
                          const LanTolerances& tol = lan_tolerances());

/// Independent verification of the collapse identity: builds the d^n-dim
/// Kronecker products explicitly and computes the same expectation by
/// spectral calculus on the full tensor space. Guarded at d^n <= 64.
cplx tensor_oracle(const LocalFamily& fam, const WordSpec& word, int n,
                   const std::vector<double>* base_u = nullptr);

/// phi^{base_u}(V_1 ... V_k) with V_j the limit cocycles; base_u = 0 gives the
/// canonical-state limit, otherwise the shifted quasi-free state with shift
/// L(base_u) (the SLD combination).
cplx limit_expectation(const LocalFamily& fam, const WordSpec& word,
                       const std::vector<double>* base_u = nullptr);

struct ConvergenceReport {
    std::vector<double> ns;
    std::vector<cplx> values;
    cplx limit = 0.0;
    std::vector<double> gaps;
    std::vector<double> phase_track;  // unwrapped arg E^(n), presentation only
    double slope = 0.0;
    bool monotone_after_burn_in = true;
    bool pass = false;
    double n_min = 0.0;
};

std::vector<double> default_schedule();  // {1e2, 1e3, ..., 1e10}

ConvergenceReport lan_report(const LocalFamily& fam, const WordSpec& word,
                             std::span<const double> n_schedule,
                             const std::vector<double>* base_u = nullptr,
                             const LanTolerances& tol = lan_tolerances());

/// rho~_a = exp(i sum a_k H_k) tau_{theta0+a} exp(-i ...) as a LocalFamily.
LocalFamily simplified_family(const LocalFamily& fam);

/// |E^(n)_original - E^(n)_simplified| over a schedule.
struct SimplifiedComparison {
    std::vector<double> ns;
    std::vector<double> gaps;
};
SimplifiedComparison compare_simplified(const LocalFamily& fam, const WordSpec& word,
                                        std::span<const double> n_schedule);

/// Closed forms of the qubit application, cross-checked against the generic
/// pipeline (jet -> scores -> K -> shifted states).
struct QubitClosedForms {
    double r;
    double fisher_classical;     // 1/(1-r^2)
    double classical_mean;       // I_c * a: the limit's classical factor is N(I_c a, I_c)
    double classical_variance;   // I_c
    double commutator_scale;     // sigma(sigma_y, sigma_x) = r
    double wigner_center_q;      // r_x / sqrt(2r)
    double wigner_center_p;      // r_y / sqrt(2r)
    int k_dimension;             // 3
    double pipeline_fisher;      // Tr(rho l_a^2) from the generic jet
    double pipeline_fisher_h;    // -phi(h(e_a)) route
    double score_residual;       // |l_a - (P+/(1+r) - P-/(1-r))|
    double center_residual;      // generic-pipeline field means vs closed form
};

QubitClosedForms qubit_closed_forms(double r, double rx, double ry, double a);

}  // namespace qlab::lan

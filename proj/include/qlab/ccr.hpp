#pragma once

#include <functional>
#include <span>
#include <vector>

#include "qlab/family.hpp"
#include "qlab/matrix.hpp"

namespace qlab::ccr {

/// Real symplectic space (M_d(C)^sa, sigma, alpha) anchored at a base state.
/// Conventions (pinned against the finite-n i.i.d. limit):
///   sigma(A,B) = (i/2) Tr(rho [A,B])     -- so sigma(sigma_y, sigma_x) = r
///   alpha(A,B) = (A,B)_rho = Tr(rho A o B)
///   W(X) W(Y) = W(X+Y) exp(+i sigma(X,Y))
/// The collapse phase sign is forced by the central-limit moments
/// lim phi^(x)n(prod exp(i F_n(A_l))): the second-order cross term is
/// -Tr(rho A_j A_k) = -alpha(A_j,A_k) + i sigma(A_j,A_k).
class SymplecticSpace {
public:
    explicit SymplecticSpace(DensityMatrix rho);

    int dim() const { return rho_.dim(); }
    const DensityMatrix& rho() const { return rho_; }

    /// (A,B)_rho, real, Hermitian arguments assumed.
    double alpha(const CMat& a, const CMat& b) const;
    /// (i/2) Tr(rho [A,B]); guaranteed real, the imaginary residual is checked.
    double symplectic(const CMat& a, const CMat& b) const;
    /// Tr(rho A B) = alpha(A,B) - i sigma(A,B).
    cplx second_moment(const CMat& a, const CMat& b) const;

    /// d^2 Hermitian matrices, orthonormal in (.,.)_rho.
    const std::vector<CMat>& hermitian_basis() const { return basis_; }

private:
    DensityMatrix rho_;
    std::vector<CMat> basis_;
};

/// Hermitians commuting with rho (block-diagonal in the eigenbasis) and their
/// (.,.)_rho-orthocomplement. dim H_rho = sum of squared multiplicities.
struct CommutantSplit {
    std::vector<CMat> commutant;  // H_rho
    std::vector<CMat> perp;       // H_rho^perp
};

CommutantSplit split_commutant(const DensityMatrix& rho);

/// Finite product of Weyl generators with a scalar prefactor:
/// prefactor * W(A_1) ... W(A_s).
struct WeylWord {
    std::vector<CMat> vectors;
    cplx prefactor = 1.0;

    static WeylWord identity() { return {}; }
    WeylWord adjoint() const;                 // reverse, negate, conjugate
    WeylWord concat(const WeylWord& o) const;  // this * o
};

struct CollapsedWord {
    CMat sum;    // Hermitian
    cplx phase;  // prefactor times accumulated Weyl phases, |phase/prefactor| = 1
};

/// W(A_1)...W(A_s) = W(sum A_j) exp(+i sum_{j<k} sigma(A_j, A_k)).
CollapsedWord weyl_collapse(const WeylWord& word, const SymplecticSpace& space);

/// Quasi-free evaluation, optionally under the shifted state phi^u:
///   phase * exp(-1/2 alpha(S,S) + i (S, shift)_rho), S the collapsed sum.
cplx quasifree_eval(const SymplecticSpace& space, const WeylWord& word,
                    const CMat* shift = nullptr);

/// Limit cocycle V_{u,t}: vectors [H(u) - sigma_t(H(u)), t l(u)] with the
/// scalar prefactors exp(1/2 phi([H(u), sigma_t(H(u))])) exp(it/2 phi(h(u)))
/// folded in; the first factor is unimodular (asserted).
WeylWord limit_cocycle(const SymplecticSpace& space, const FamilyJet& jet,
                       std::span<const double> u, double t);

/// Orthonormal basis (in (.,.)_rho) of K = Lin{l_k} + Lin{H_k - sigma_t(H_k)}.
std::vector<CMat> k_subspace(const SymplecticSpace& space, const FamilyJet& jet,
                             std::span<const double> t_grid);
/// d(d-1)+2 Chebyshev-spaced points in [-3,3].
std::vector<double> default_k_grid(int dim);

/// Distance of A from span(onb) relative to |A|_rho; onb orthonormal in alpha.
double projection_residual(const SymplecticSpace& space, std::span<const CMat> onb,
                           const CMat& a);

/// Symmetric logarithmic derivatives: Hermitian solutions of L o rho = drho_k,
/// assembled in the eigenbasis as L_ij = 2 (drho)_ij / (lambda_i + lambda_j).
std::vector<CMat> sld(const FamilyJet& jet, double residual_tol = 1e-8);

/// Unitary-part scores ell_k solving ell_k o rho = i[H_k, rho]; the SLD
/// decomposes as sld_k = l_k + ell_k.
std::vector<CMat> unitary_scores(const FamilyJet& jet);

/// CSV rendering of a matrix list, row-major with re/im interleaved.
std::string matrices_to_csv(std::span<const CMat> mats);

/// Quantum Fisher information Tr(rho L^2).
double quantum_fisher(const DensityMatrix& rho, const CMat& l);

/// Fisher information of the field B(A) in the shift direction with score L:
/// (A, L)_rho^2 / (A, A)_rho. Maximal (= Tr(rho L^2)) at A proportional to L.
double field_fisher(const SymplecticSpace& space, const CMat& l, const CMat& a);

/// Operator-monotone form for the logarithmic derivative family.
struct LogDerivativeForm {
    std::function<double(double)> f;  // F with F(1) = 1
    static LogDerivativeForm sld_form();  // F(t) = (1+t)/2
    static LogDerivativeForm bkm_form();  // F(t) = (t-1)/log t
};

/// L^F_k entries (L^F)_ij = (drho_k)_ij / (lambda_j F(lambda_i/lambda_j)) in
/// the eigenbasis; SLD and BKM forms recover the symmetric and the
/// log-derivative cases.
std::vector<CMat> log_derivative_f(const FamilyJet& jet, const LogDerivativeForm& form);

}  // namespace qlab::ccr

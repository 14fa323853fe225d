#include "qlab/ccr.hpp"

#include <cmath>
#include <stdexcept>

namespace qlab::ccr {

namespace {

constexpr double kRealityTol = 1e-12;
constexpr double kRankTol = 1e-10;

// Gram-Schmidt in the rho-weighted inner product; drops rank-deficient input.
std::vector<CMat> alpha_orthonormalize(const SymplecticSpace& s, std::span<const CMat> gens) {
    std::vector<CMat> onb;
    for (const CMat& g : gens) {
        CMat r = g;
        for (const CMat& b : onb) r -= s.alpha(b, r) * b;
        // second pass for numerical orthogonality
        for (const CMat& b : onb) r -= s.alpha(b, r) * b;
        const double n = std::sqrt(std::max(0.0, s.alpha(r, r)));
        if (n > kRankTol) onb.push_back((1.0 / n) * r);
    }
    return onb;
}

}  // namespace

SymplecticSpace::SymplecticSpace(DensityMatrix rho) : rho_(std::move(rho)) {
    // eigenbasis Hermitian units are alpha-orthogonal; normalize them
    const int d = rho_.dim();
    const CMat& u = rho_.spectral().vectors;
    const auto& lam = rho_.spectral().eigenvalues;
    auto from_eigen = [&](const CMat& m) { return u * m * u.adjoint(); };
    for (int i = 0; i < d; ++i) {
        CMat e(d);
        e(i, i) = 1.0 / std::sqrt(lam[i]);
        basis_.push_back(from_eigen(e));
    }
    for (int i = 0; i < d; ++i)
        for (int j = i + 1; j < d; ++j) {
            const double norm = std::sqrt((lam[i] + lam[j]) / 2.0);
            CMat x(d), y(d);
            x(i, j) = x(j, i) = 1.0 / (std::sqrt(2.0) * norm);
            y(i, j) = cplx(0.0, -1.0 / (std::sqrt(2.0) * norm));
            y(j, i) = cplx(0.0, 1.0 / (std::sqrt(2.0) * norm));
            basis_.push_back(from_eigen(x));
            basis_.push_back(from_eigen(y));
        }
}

double SymplecticSpace::alpha(const CMat& a, const CMat& b) const {
    return rho_.expect(jordan_product(a, b)).real();
}

double SymplecticSpace::symplectic(const CMat& a, const CMat& b) const {
    const cplx v = cplx(0.0, 0.5) * rho_.expect(commutator(a, b));
    if (std::abs(v.imag()) > kRealityTol * std::max(1.0, std::abs(v)))
        throw NumericalError("symplectic: form is not real (non-Hermitian arguments?)");
    return v.real();
}

cplx SymplecticSpace::second_moment(const CMat& a, const CMat& b) const {
    return rho_.expect(a * b);
}

CommutantSplit split_commutant(const DensityMatrix& rho) {
    const int d = rho.dim();
    const CMat& u = rho.spectral().vectors;
    const auto& lam = rho.spectral().eigenvalues;
    const auto clusters = rho.spectral().clusters();
    auto from_eigen = [&](const CMat& m) { return u * m * u.adjoint(); };

    CommutantSplit out;
    std::vector<int> block_of(d);
    for (size_t c = 0; c < clusters.size(); ++c)
        for (int i = clusters[c].first; i < clusters[c].second; ++i) block_of[i] = static_cast<int>(c);

    // eigenbasis units are alpha-orthogonal across index pairs; scale each to
    // unit alpha-norm so both halves come out orthonormal in (.,.)_rho
    for (int i = 0; i < d; ++i)
        for (int j = i; j < d; ++j) {
            const bool same_block = block_of[i] == block_of[j];
            if (i == j) {
                CMat e(d);
                e(i, i) = 1.0 / std::sqrt(lam[i]);
                out.commutant.push_back(from_eigen(e));
                continue;
            }
            const double norm = std::sqrt((lam[i] + lam[j]) / 2.0);
            CMat x(d), y(d);
            x(i, j) = x(j, i) = 1.0 / (std::sqrt(2.0) * norm);
            y(i, j) = cplx(0.0, -1.0 / (std::sqrt(2.0) * norm));
            y(j, i) = cplx(0.0, 1.0 / (std::sqrt(2.0) * norm));
            auto& dst = same_block ? out.commutant : out.perp;
            dst.push_back(from_eigen(x));
            dst.push_back(from_eigen(y));
        }
    return out;
}

WeylWord WeylWord::adjoint() const {
    WeylWord w;
    w.prefactor = std::conj(prefactor);
    for (auto it = vectors.rbegin(); it != vectors.rend(); ++it) w.vectors.push_back(-1.0 * *it);
    return w;
}

WeylWord WeylWord::concat(const WeylWord& o) const {
    WeylWord w = *this;
    w.prefactor *= o.prefactor;
    w.vectors.insert(w.vectors.end(), o.vectors.begin(), o.vectors.end());
    return w;
}

CollapsedWord weyl_collapse(const WeylWord& word, const SymplecticSpace& space) {
    CMat sum(space.dim());
    double angle = 0.0;  // sum_{j<k} sigma(A_j, A_k), accumulated left to right
    for (const CMat& a : word.vectors) {
        angle += space.symplectic(sum, a);
        sum += a;
    }
    return CollapsedWord{std::move(sum), word.prefactor * std::exp(cplx(0.0, angle))};
}

cplx quasifree_eval(const SymplecticSpace& space, const WeylWord& word, const CMat* shift) {
    const CollapsedWord c = weyl_collapse(word, space);
    double exponent = -0.5 * space.alpha(c.sum, c.sum);
    double linear = 0.0;
    if (shift) linear = space.alpha(c.sum, *shift);
    return c.phase * std::exp(cplx(exponent, linear));
}

WeylWord limit_cocycle(const SymplecticSpace& space, const FamilyJet& jet,
                       std::span<const double> u, double t) {
    const CMat hu = jet.H_of(u);
    const CMat ut = space.rho().power(cplx(0.0, t));
    const CMat hs = ut * hu * ut.adjoint();  // sigma_t(H(u))

    // exp(1/2 phi([H, sigma_t H])) = exp(-i sigma(H, sigma_t H)); reality of the
    // symplectic form is exactly the unimodularity assertion
    const cplx unitary_pref = std::exp(cplx(0.0, -space.symplectic(hu, hs)));
    const cplx classical_pref = std::exp(cplx(0.0, 0.5 * t) * space.rho().expect(jet.h(u)));

    WeylWord w;
    w.vectors.push_back(hu - hs);
    w.vectors.push_back(t * jet.l_of(u));
    w.prefactor = unitary_pref * classical_pref;
    return w;
}

std::vector<double> default_k_grid(int dim) {
    const int count = dim * (dim - 1) + 2;
    std::vector<double> grid(count);
    for (int i = 0; i < count; ++i)
        grid[i] = 3.0 * std::cos(M_PI * (2.0 * i + 1.0) / (2.0 * count));
    return grid;
}

std::vector<CMat> k_subspace(const SymplecticSpace& space, const FamilyJet& jet,
                             std::span<const double> t_grid) {
    if (t_grid.empty()) throw std::invalid_argument("k_subspace: empty t grid");
    std::vector<CMat> gens;
    for (const CMat& lk : jet.l) gens.push_back(lk);
    for (const CMat& hk : jet.H) {
        for (double t : t_grid) {
            const CMat ut = jet.rho.power(cplx(0.0, t));
            gens.push_back(hk - ut * hk * ut.adjoint());
        }
    }
    return alpha_orthonormalize(space, gens);
}

double projection_residual(const SymplecticSpace& space, std::span<const CMat> onb,
                           const CMat& a) {
    const double na = std::sqrt(std::max(space.alpha(a, a), 0.0));
    if (na == 0.0) return 0.0;
    CMat r = a;
    for (const CMat& b : onb) r -= space.alpha(b, r) * b;
    return std::sqrt(std::max(space.alpha(r, r), 0.0)) / na;
}

std::vector<CMat> sld(const FamilyJet& jet, double residual_tol) {
    const CMat& u = jet.rho.spectral().vectors;
    const auto& lam = jet.rho.spectral().eigenvalues;
    const int d = jet.dim();
    std::vector<CMat> out;
    for (const CMat& dr : jet.drho) {
        const CMat de = u.adjoint() * dr * u;
        CMat le(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) le(i, j) = 2.0 * de(i, j) / (lam[i] + lam[j]);
        CMat l = u * le * u.adjoint();
        if (hs_norm(jordan_product(l, jet.rho.matrix()) - dr) > residual_tol)
            throw NumericalError("sld: defining equation residual too large");
        out.push_back(std::move(l));
    }
    return out;
}

std::vector<CMat> unitary_scores(const FamilyJet& jet) {
    const CMat& u = jet.rho.spectral().vectors;
    const auto& lam = jet.rho.spectral().eigenvalues;
    const int d = jet.dim();
    std::vector<CMat> out;
    for (const CMat& hk : jet.H) {
        const CMat dr = cplx(0.0, 1.0) * commutator(hk, jet.rho.matrix());
        const CMat de = u.adjoint() * dr * u;
        CMat le(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) le(i, j) = 2.0 * de(i, j) / (lam[i] + lam[j]);
        out.push_back(u * le * u.adjoint());
    }
    return out;
}

std::string matrices_to_csv(std::span<const CMat> mats) {
    std::string out;
    char buf[48];
    for (const CMat& m : mats) {
        bool first = true;
        for (int i = 0; i < m.dim(); ++i)
            for (int j = 0; j < m.dim(); ++j) {
                std::snprintf(buf, sizeof(buf), first ? "%.17g,%.17g" : ",%.17g,%.17g",
                              m(i, j).real(), m(i, j).imag());
                out += buf;
                first = false;
            }
        out += '\n';
    }
    return out;
}

double quantum_fisher(const DensityMatrix& rho, const CMat& l) {
    return rho.expect(l * l).real();
}

double field_fisher(const SymplecticSpace& space, const CMat& l, const CMat& a) {
    const double var = space.alpha(a, a);
    if (var <= 0.0) throw std::invalid_argument("field_fisher: degenerate field");
    const double mean = space.alpha(a, l);
    return mean * mean / var;
}

LogDerivativeForm LogDerivativeForm::sld_form() {
    return {[](double t) { return 0.5 * (1.0 + t); }};
}

LogDerivativeForm LogDerivativeForm::bkm_form() {
    return {[](double t) {
        if (std::abs(t - 1.0) < 1e-8) {
            const double x = t - 1.0;  // (t-1)/log t = 1 + x/2 - x^2/12 + ...
            return 1.0 + x / 2.0 - x * x / 12.0;
        }
        return (t - 1.0) / std::log(t);
    }};
}

std::vector<CMat> log_derivative_f(const FamilyJet& jet, const LogDerivativeForm& form) {
    if (!form.f) throw std::invalid_argument("log_derivative_f: missing form");
    if (std::abs(form.f(1.0) - 1.0) > 1e-10)
        throw std::invalid_argument("log_derivative_f: F(1) must equal 1");
    const CMat& u = jet.rho.spectral().vectors;
    const auto& lam = jet.rho.spectral().eigenvalues;
    const int d = jet.dim();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j)
            if (!(form.f(lam[i] / lam[j]) > 0.0))
                throw std::invalid_argument("log_derivative_f: F nonpositive on spectrum ratio");
    std::vector<CMat> out;
    for (const CMat& dr : jet.drho) {
        const CMat de = u.adjoint() * dr * u;
        CMat le(d);
        for (int i = 0; i < d; ++i)
            for (int j = 0; j < d; ++j) le(i, j) = de(i, j) / (lam[j] * form.f(lam[i] / lam[j]));
        out.push_back(u * le * u.adjoint());
    }
    return out;
}

}  // namespace qlab::ccr

#include "qlab/family.hpp"

#include <cmath>
#include <stdexcept>

namespace qlab {

namespace {

const CMat kSigmaX(2, {0, 1, 1, 0});
const CMat kSigmaY(2, {0, cplx(0, -1), cplx(0, 1), 0});
const CMat kSigmaZ(2, {1, 0, 0, -1});

std::vector<double> add(std::span<const double> a, std::span<const double> b, double scale = 1.0) {
    std::vector<double> r(a.begin(), a.end());
    for (size_t i = 0; i < r.size(); ++i) r[i] += scale * b[i];
    return r;
}

CMat linear_combination(std::span<const CMat> mats, std::span<const double> coeffs) {
    if (mats.size() != coeffs.size()) throw std::invalid_argument("coefficient count mismatch");
    CMat s(mats.empty() ? 0 : mats[0].dim());
    for (size_t k = 0; k < mats.size(); ++k) s += coeffs[k] * mats[k];
    return s;
}

}  // namespace

std::vector<CMat> Family::generators_at_base() const {
    throw std::logic_error("Family: no analytic generators; use make_jet");
}
std::vector<CMat> Family::scores_at_base() const {
    throw std::logic_error("Family: no analytic scores; use make_jet");
}
CMat Family::eigen_hessian(std::span<const double>) const {
    throw std::logic_error("Family: no analytic hessian; use make_jet");
}
std::vector<CMat> Family::state_derivs_at_base() const {
    throw std::logic_error("Family: no analytic state derivatives; use make_jet");
}

CMat FamilyJet::H_of(std::span<const double> u) const { return linear_combination(H, u); }
CMat FamilyJet::l_of(std::span<const double> u) const { return linear_combination(l, u); }
CMat FamilyJet::drho_of(std::span<const double> u) const { return linear_combination(drho, u); }

namespace {

// Eigenvalues of rho(theta) paired descending against the base ordering.
std::vector<double> eigenvalues_at(const Family& f, std::span<const double> theta) {
    return f.state(theta).spectral().eigenvalues;  // already descending
}

// Numeric jet: central differences on eigenvalues, projectors and the state.
// Requires a simple spectrum at theta0 so that branches are unambiguous.
struct NumericJetBuilder {
    const Family& f;
    double step;
    DensityMatrix rho;

    NumericJetBuilder(const Family& fam, double h) : f(fam), step(h), rho(fam.state(fam.theta0())) {
        const auto& ev = rho.spectral().eigenvalues;
        for (size_t i = 1; i < ev.size(); ++i)
            if (ev[i - 1] - ev[i] < 1e-6)
                throw std::invalid_argument(
                    "make_jet: finite-difference jet requires a simple spectrum at theta0");
    }

    std::vector<CMat> projectors(std::span<const double> theta) const {
        const auto spec = f.state(theta).spectral();
        std::vector<CMat> p;
        for (int j = 0; j < rho.dim(); ++j) {
            CMat pj(rho.dim());
            for (int a = 0; a < rho.dim(); ++a)
                for (int b = 0; b < rho.dim(); ++b)
                    pj(a, b) = spec.vectors(a, j) * std::conj(spec.vectors(b, j));
            p.push_back(std::move(pj));
        }
        return p;
    }

    std::vector<CMat> state_derivs() const {
        std::vector<CMat> out;
        const auto& t0 = f.theta0();
        for (int k = 0; k < f.num_params(); ++k) {
            std::vector<double> dir(f.num_params(), 0.0);
            dir[k] = 1.0;
            const CMat plus = f.state(add(t0, dir, step)).matrix();
            const CMat minus = f.state(add(t0, dir, -step)).matrix();
            out.push_back((0.5 / step) * (plus - minus));
        }
        return out;
    }

    std::vector<CMat> scores() const {
        std::vector<CMat> out;
        const auto& t0 = f.theta0();
        const auto& u0 = rho.spectral().vectors;
        for (int k = 0; k < f.num_params(); ++k) {
            std::vector<double> dir(f.num_params(), 0.0);
            dir[k] = 1.0;
            const auto lp = eigenvalues_at(f, add(t0, dir, step));
            const auto lm = eigenvalues_at(f, add(t0, dir, -step));
            std::vector<double> d(rho.dim());
            for (int j = 0; j < rho.dim(); ++j)
                d[j] = (std::log(lp[j]) - std::log(lm[j])) / (2.0 * step);
            // diagonal in the theta0 eigenbasis
            CMat lk(rho.dim());
            for (int a = 0; a < rho.dim(); ++a)
                for (int b = 0; b < rho.dim(); ++b) {
                    cplx s = 0.0;
                    for (int j = 0; j < rho.dim(); ++j)
                        s += u0(a, j) * d[j] * std::conj(u0(b, j));
                    lk(a, b) = s;
                }
            out.push_back(std::move(lk));
        }
        return out;
    }

    // Generators from dP_j = i[H_k, P_j]: in the eigenbasis H_ab = -i (dP_b)_ab
    // for a != b, zero on the diagonal (gauge phi(H)=0 follows).
    std::vector<CMat> generators() const {
        std::vector<CMat> out;
        const auto& t0 = f.theta0();
        const auto& u0 = rho.spectral().vectors;
        const int d = rho.dim();
        for (int k = 0; k < f.num_params(); ++k) {
            std::vector<double> dir(f.num_params(), 0.0);
            dir[k] = 1.0;
            const auto pp = projectors(add(t0, dir, step));
            const auto pm = projectors(add(t0, dir, -step));
            // dP_j in the theta0 eigenbasis
            std::vector<CMat> dp;
            for (int j = 0; j < d; ++j) {
                const CMat diff = (0.5 / step) * (pp[j] - pm[j]);
                dp.push_back(u0.adjoint() * diff * u0);
            }
            CMat hk(d);
            for (int a = 0; a < d; ++a)
                for (int b = 0; b < d; ++b)
                    if (a != b) hk(a, b) = cplx(0.0, -1.0) * dp[b](a, b);
            // hermitize against finite-difference noise
            hk = 0.5 * (hk + hk.adjoint());
            out.push_back(u0 * hk * u0.adjoint());
        }
        return out;
    }

    CMat hessian(std::span<const double> u) const {
        const auto& t0 = f.theta0();
        const auto& u0 = rho.spectral().vectors;
        const auto lp = eigenvalues_at(f, add(t0, u, step));
        const auto l0 = rho.spectral().eigenvalues;
        const auto lm = eigenvalues_at(f, add(t0, u, -step));
        CMat h(rho.dim());
        for (int a = 0; a < rho.dim(); ++a)
            for (int b = 0; b < rho.dim(); ++b) {
                cplx s = 0.0;
                for (int j = 0; j < rho.dim(); ++j) {
                    const double dd =
                        (std::log(lp[j]) - 2.0 * std::log(l0[j]) + std::log(lm[j])) / (step * step);
                    s += u0(a, j) * dd * std::conj(u0(b, j));
                }
                h(a, b) = s;
            }
        return h;
    }
};

void validate_jet(const FamilyJet& jet) {
    for (const auto& hk : jet.H)
        if (std::abs(jet.rho.expect(hk)) > 1e-8)
            throw std::invalid_argument("FamilyJet: generator with phi(H_k) != 0");
    for (const auto& lk : jet.l)
        if (std::abs(jet.rho.expect(lk)) > 1e-8)
            throw std::invalid_argument("FamilyJet: score with phi(l_k) != 0");
}

}  // namespace

FamilyJet make_jet(std::shared_ptr<const Family> family, double fd_step) {
    if (!family) throw std::invalid_argument("make_jet: null family");
    std::vector<double> theta0 = family->theta0();
    DensityMatrix rho = family->state(theta0);
    std::vector<CMat> H, l, drho;
    std::function<CMat(std::span<const double>)> h;
    if (family->analytic_jet()) {
        H = family->generators_at_base();
        l = family->scores_at_base();
        drho = family->state_derivs_at_base();
        h = [family](std::span<const double> u) { return family->eigen_hessian(u); };
    } else {
        auto builder = std::make_shared<NumericJetBuilder>(*family, fd_step);
        H = builder->generators();
        l = builder->scores();
        drho = builder->state_derivs();
        h = [family, builder](std::span<const double> u) { return builder->hessian(u); };
    }
    FamilyJet jet{family,       std::move(theta0), std::move(rho), std::move(H),
                  std::move(l), std::move(drho),   std::move(h)};
    validate_jet(jet);
    return jet;
}

// ---------------------------------------------------------------------------
// QubitFamily

QubitFamily::QubitFamily(double r) : r_(r), theta0_{0.0, 0.0, r} {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("QubitFamily: r must be in (0,1)");
}

DensityMatrix QubitFamily::state(std::span<const double> v) const {
    if (v.size() != 3) throw std::invalid_argument("QubitFamily: expected a Bloch vector");
    const double len = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    if (len >= 1.0) throw std::invalid_argument("QubitFamily: Bloch vector outside the open ball");
    CMat m = 0.5 * (CMat::identity(2) + v[0] * kSigmaX + v[1] * kSigmaY + v[2] * kSigmaZ);
    return DensityMatrix(std::move(m));
}

std::string QubitFamily::describe() const { return "qubit(r=" + std::to_string(r_) + ")"; }

std::vector<CMat> QubitFamily::generators_at_base() const {
    return {(-0.5 / r_) * kSigmaY, (0.5 / r_) * kSigmaX, CMat::zero(2)};
}

std::vector<CMat> QubitFamily::scores_at_base() const {
    CMat la(2);
    la(0, 0) = 1.0 / (1.0 + r_);
    la(1, 1) = -1.0 / (1.0 - r_);
    return {CMat::zero(2), CMat::zero(2), la};
}

CMat QubitFamily::eigen_hessian(std::span<const double> u) const {
    if (u.size() != 3) throw std::invalid_argument("QubitFamily: bad direction");
    const double transverse = u[0] * u[0] + u[1] * u[1];
    CMat h(2);
    h(0, 0) = transverse / (r_ * (1.0 + r_)) - u[2] * u[2] / ((1.0 + r_) * (1.0 + r_));
    h(1, 1) = -transverse / (r_ * (1.0 - r_)) - u[2] * u[2] / ((1.0 - r_) * (1.0 - r_));
    return h;
}

std::vector<CMat> QubitFamily::state_derivs_at_base() const {
    return {0.5 * kSigmaX, 0.5 * kSigmaY, 0.5 * kSigmaZ};
}

// ---------------------------------------------------------------------------
// DiagonalFamily

DiagonalFamily::DiagonalFamily(std::vector<double> base, std::vector<std::vector<double>> derivs)
    : base_(std::move(base)), derivs_(std::move(derivs)), theta0_(derivs_.size(), 0.0) {
    double s = 0.0;
    for (double p : base_) {
        if (!(p > 0.0)) throw std::invalid_argument("DiagonalFamily: probabilities must be > 0");
        s += p;
    }
    if (std::abs(s - 1.0) > 1e-12)
        throw std::invalid_argument("DiagonalFamily: probabilities must sum to 1");
    for (const auto& row : derivs_) {
        if (row.size() != base_.size())
            throw std::invalid_argument("DiagonalFamily: derivative row size mismatch");
        double ds = 0.0;
        for (double v : row) ds += v;
        if (std::abs(ds) > 1e-12)
            throw std::invalid_argument("DiagonalFamily: derivative rows must sum to 0");
    }
}

DensityMatrix DiagonalFamily::state(std::span<const double> theta) const {
    if (theta.size() != derivs_.size()) throw std::invalid_argument("DiagonalFamily: bad theta");
    std::vector<double> p = base_;
    for (size_t k = 0; k < derivs_.size(); ++k)
        for (size_t j = 0; j < p.size(); ++j) p[j] += theta[k] * derivs_[k][j];
    for (double v : p)
        if (!(v > 0.0)) throw std::invalid_argument("DiagonalFamily: theta leaves the simplex");
    return DensityMatrix(CMat::diagonal(p));
}

std::string DiagonalFamily::describe() const {
    return "diagonal(d=" + std::to_string(base_.size()) + ")";
}

std::vector<CMat> DiagonalFamily::generators_at_base() const {
    return std::vector<CMat>(derivs_.size(), CMat::zero(dim()));
}

std::vector<CMat> DiagonalFamily::scores_at_base() const {
    std::vector<CMat> out;
    for (const auto& row : derivs_) {
        CMat lk(dim());
        for (int j = 0; j < dim(); ++j) lk(j, j) = row[j] / base_[j];
        out.push_back(std::move(lk));
    }
    return out;
}

CMat DiagonalFamily::eigen_hessian(std::span<const double> u) const {
    // p_j linear in theta: d^2/ds^2 log p_j = -(u.D_j)^2 / p_j^2
    CMat h(dim());
    for (int j = 0; j < dim(); ++j) {
        double dj = 0.0;
        for (size_t k = 0; k < derivs_.size(); ++k) dj += u[k] * derivs_[k][j];
        h(j, j) = -dj * dj / (base_[j] * base_[j]);
    }
    return h;
}

std::vector<CMat> DiagonalFamily::state_derivs_at_base() const {
    std::vector<CMat> out;
    for (const auto& row : derivs_) out.push_back(CMat::diagonal(row));
    return out;
}

// ---------------------------------------------------------------------------
// RotationFamily

RotationFamily::RotationFamily(DensityMatrix rho0, std::vector<CMat> generators)
    : rho0_(std::move(rho0)), H_(std::move(generators)), theta0_(H_.size(), 0.0) {
    for (auto& h : H_) {
        if (h.dim() != rho0_.dim() || !h.is_hermitian())
            throw std::invalid_argument("RotationFamily: generators must be Hermitian, same dim");
        const double mean = rho0_.expect(h).real();
        if (std::abs(mean) > 0.0) h -= mean * CMat::identity(h.dim());  // phi(H_k) = 0 gauge
    }
}

DensityMatrix RotationFamily::state(std::span<const double> theta) const {
    if (theta.size() != H_.size()) throw std::invalid_argument("RotationFamily: bad theta");
    CMat h(dim());
    for (size_t k = 0; k < H_.size(); ++k) h += theta[k] * H_[k];
    const CMat u = unitary_exp(h);
    return DensityMatrix(u * rho0_.matrix() * u.adjoint());
}

std::string RotationFamily::describe() const {
    return "rotation(d=" + std::to_string(dim()) + ", m=" + std::to_string(H_.size()) + ")";
}

std::vector<CMat> RotationFamily::scores_at_base() const {
    return std::vector<CMat>(H_.size(), CMat::zero(dim()));
}

CMat RotationFamily::eigen_hessian(std::span<const double>) const { return CMat::zero(dim()); }

std::vector<CMat> RotationFamily::state_derivs_at_base() const {
    std::vector<CMat> out;
    for (const auto& h : H_) out.push_back(cplx(0.0, 1.0) * commutator(h, rho0_.matrix()));
    return out;
}

// ---------------------------------------------------------------------------
// LinearMatrixFamily

LinearMatrixFamily::LinearMatrixFamily(DensityMatrix rho0, std::vector<CMat> deltas)
    : rho0_(std::move(rho0)), deltas_(std::move(deltas)), theta0_(deltas_.size(), 0.0) {
    for (const auto& d : deltas_) {
        if (d.dim() != rho0_.dim() || !d.is_hermitian())
            throw std::invalid_argument("LinearMatrixFamily: deltas must be Hermitian, same dim");
        if (std::abs(d.trace()) > 1e-10)
            throw std::invalid_argument("LinearMatrixFamily: deltas must be traceless");
    }
}

DensityMatrix LinearMatrixFamily::state(std::span<const double> theta) const {
    if (theta.size() != deltas_.size())
        throw std::invalid_argument("LinearMatrixFamily: bad theta");
    CMat m = rho0_.matrix();
    for (size_t k = 0; k < deltas_.size(); ++k) m += theta[k] * deltas_[k];
    return DensityMatrix(std::move(m));
}

std::string LinearMatrixFamily::describe() const {
    return "linear(d=" + std::to_string(dim()) + ", m=" + std::to_string(deltas_.size()) + ")";
}

// ---------------------------------------------------------------------------
// SimplifiedFamily

SimplifiedFamily::SimplifiedFamily(FamilyJet base_jet)
    : jet_(std::move(base_jet)), origin_(jet_.num_params(), 0.0) {
    if (!jet_.family) throw std::invalid_argument("SimplifiedFamily: jet without family");
}

std::vector<double> SimplifiedFamily::paired_eigenvalues(std::span<const double> a) const {
    std::vector<double> theta = jet_.theta0;
    for (size_t k = 0; k < theta.size(); ++k) theta[k] += a[k];
    return jet_.family->state(theta).spectral().eigenvalues;
}

DensityMatrix SimplifiedFamily::state(std::span<const double> a) const {
    const auto lam = paired_eigenvalues(a);
    const CMat& u0 = jet_.rho.spectral().vectors;
    const CMat tau = u0 * CMat::diagonal(lam) * u0.adjoint();
    CMat ha(dim());
    for (int k = 0; k < num_params(); ++k) ha += a[k] * jet_.H[k];
    const CMat u = unitary_exp(ha);
    return DensityMatrix(u * tau * u.adjoint());
}

std::string SimplifiedFamily::describe() const {
    return "simplified(" + jet_.family->describe() + ")";
}

}  // namespace qlab

#include "qlab/lan.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace qlab::lan {

LanTolerances& lan_tolerances() {
    static LanTolerances tol;
    return tol;
}

LocalFamily::LocalFamily(std::shared_ptr<const Family> family, double fd_step)
    : family_(family), jet_(make_jet(family, fd_step)) {}

LocalFamily::LocalFamily(std::shared_ptr<const Family> family, FamilyJet jet)
    : family_(std::move(family)), jet_(std::move(jet)) {}

DensityMatrix LocalFamily::local_state(std::span<const double> u, double n) const {
    if (static_cast<int>(u.size()) != num_params())
        throw std::invalid_argument("LocalFamily: u dimension mismatch");
    std::vector<double> theta = jet_.theta0;
    const double scale = 1.0 / std::sqrt(n);
    for (size_t k = 0; k < theta.size(); ++k) theta[k] += scale * u[k];
    return family_->state(theta);
}

double LocalFamily::n_min(const WordSpec& word, const std::vector<double>* base_u,
                          const LanTolerances& tol) const {
    std::vector<const std::vector<double>*> us;
    for (const auto& l : word) us.push_back(&l.u);
    if (base_u) us.push_back(base_u);
    double n = 1.0;
    for (;;) {
        bool ok = true;
        for (const auto* u : us) {
            try {
                if (local_state(*u, n).min_eigenvalue() <= tol.faithful_floor) ok = false;
            } catch (const std::exception&) {
                ok = false;
            }
            if (!ok) break;
        }
        if (ok) return n;
        n *= 10.0;
        if (n > 1e12) throw NumericalError("LocalFamily: no faithful n found up to 1e12");
    }
}

namespace {

cplx integer_power(cplx z, double n) {
    const double mag = std::abs(z);
    if (mag == 0.0) return 0.0;
    // |z| <= 1 for a state value against unitaries; tolerate rounding
    if (mag > 1.0 + 1e-9) throw NumericalError("finite_n: |word value| exceeds 1");
    const double lnmag = std::log(std::min(mag, 1.0));
    return std::exp(n * lnmag) * std::exp(cplx(0.0, n * std::arg(z)));
}

CMat word_product(const LocalFamily& fam, const WordSpec& word, double n) {
    const int d = fam.dim();
    const DensityMatrix& rho0 = fam.jet().rho;
    CMat w = CMat::identity(d);
    for (const auto& l : word) {
        const DensityMatrix rho_u = fam.local_state(l.u, n);
        CMat c = rho_u.power(cplx(0.0, l.t)) * rho0.power(cplx(0.0, -l.t));
        if (l.adjoint) c = c.adjoint();
        w = w * c;
    }
    return w;
}

}  // namespace

cplx finite_n_expectation(const LocalFamily& fam, const WordSpec& word, double n,
                          const std::vector<double>* base_u, const LanTolerances& tol) {
    for (const auto& l : word)
        if (static_cast<int>(l.u.size()) != fam.num_params())
            throw std::invalid_argument("finite_n_expectation: letter dimension mismatch");
    for (const auto& l : word) {
        bool ok = true;
        try {
            ok = fam.local_state(l.u, n).min_eigenvalue() > tol.faithful_floor;
        } catch (const std::exception&) {
            ok = false;  // theta0 + u/sqrt(n) left the family's domain
        }
        if (!ok)
            throw std::invalid_argument("finite_n_expectation: n below faithfulness threshold");
    }
    const CMat w = word_product(fam, word, n);
    const DensityMatrix base = base_u ? fam.local_state(*base_u, n) : fam.jet().rho;
    return integer_power(base.expect(w), n);
}

cplx tensor_oracle(const LocalFamily& fam, const WordSpec& word, int n,
                   const std::vector<double>* base_u) {
    const int d = fam.dim();
    double size = 1.0;
    for (int i = 0; i < n; ++i) size *= d;
    if (n < 1 || size > 64.0) throw std::invalid_argument("tensor_oracle: d^n exceeds 64");

    const DensityMatrix rho0_n(kron_power(fam.jet().rho.matrix(), n));
    CMat w = CMat::identity(static_cast<int>(size));
    for (const auto& l : word) {
        const DensityMatrix rho_u_n(kron_power(fam.local_state(l.u, n).matrix(), n));
        CMat c = rho_u_n.power(cplx(0.0, l.t)) * rho0_n.power(cplx(0.0, -l.t));
        if (l.adjoint) c = c.adjoint();
        w = w * c;
    }
    const DensityMatrix base(
        kron_power((base_u ? fam.local_state(*base_u, n) : fam.jet().rho).matrix(), n));
    return base.expect(w);
}

cplx limit_expectation(const LocalFamily& fam, const WordSpec& word,
                       const std::vector<double>* base_u) {
    const ccr::SymplecticSpace space(fam.jet().rho);
    ccr::WeylWord full;
    for (const auto& l : word) {
        ccr::WeylWord v = ccr::limit_cocycle(space, fam.jet(), l.u, l.t);
        if (l.adjoint) v = v.adjoint();
        full = full.concat(v);
    }
    if (!base_u) return ccr::quasifree_eval(space, full);
    // shifted state phi^{base_u}: shift by the SLD combination L(base_u)
    const auto slds = ccr::sld(fam.jet());
    CMat shift(fam.dim());
    for (int k = 0; k < fam.num_params(); ++k) shift += (*base_u)[k] * slds[k];
    return ccr::quasifree_eval(space, full, &shift);
}

std::vector<double> default_schedule() {
    std::vector<double> s;
    for (int k = 2; k <= 10; ++k) s.push_back(std::pow(10.0, k));
    return s;
}

ConvergenceReport lan_report(const LocalFamily& fam, const WordSpec& word,
                             std::span<const double> n_schedule,
                             const std::vector<double>* base_u, const LanTolerances& tol) {
    for (size_t i = 1; i < n_schedule.size(); ++i)
        if (n_schedule[i] <= n_schedule[i - 1])
            throw std::invalid_argument("lan_report: schedule must be strictly increasing");
    ConvergenceReport rep;
    rep.limit = limit_expectation(fam, word, base_u);
    rep.n_min = fam.n_min(word, base_u, tol);
    for (double n : n_schedule) {
        if (n < rep.n_min) continue;  // below the faithfulness threshold
        rep.ns.push_back(n);
        const cplx v = finite_n_expectation(fam, word, n, base_u, tol);
        rep.values.push_back(v);
        rep.gaps.push_back(std::abs(v - rep.limit));
    }
    if (rep.ns.empty()) throw std::invalid_argument("lan_report: schedule entirely below n_min");

    // unwrapped phase track (the per-point values are already branch-free)
    double prev = std::arg(rep.values.front());
    for (const cplx& v : rep.values) {
        double a = std::arg(v);
        while (a - prev > M_PI) a -= 2.0 * M_PI;
        while (prev - a > M_PI) a += 2.0 * M_PI;
        rep.phase_track.push_back(a);
        prev = a;
    }

    const double eps = std::numeric_limits<double>::epsilon();
    for (size_t i = 1; i < rep.ns.size(); ++i) {
        if (rep.ns[i] <= tol.burn_in || rep.ns[i - 1] < tol.burn_in) continue;
        if (rep.gaps[i] < rep.gaps[i - 1]) continue;
        if (rep.gaps[i] <= tol.numeric_floor_scale * eps * rep.ns[i]) continue;  // rounding floor
        rep.monotone_after_burn_in = false;
    }

    // slope over the largest contiguous run of gaps above the floating floor
    size_t best_b = 0, best_e = 0;
    size_t b = 0;
    for (size_t i = 0; i <= rep.gaps.size(); ++i) {
        if (i == rep.gaps.size() || rep.gaps[i] <= tol.gap_floor) {
            if (i - b > best_e - best_b) {
                best_b = b;
                best_e = i;
            }
            b = i + 1;
        }
    }
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    const int cnt = static_cast<int>(best_e - best_b);
    for (size_t i = best_b; i < best_e; ++i) {
        const double x = std::log(rep.ns[i]), y = std::log(rep.gaps[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    rep.slope = cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0.0;
    rep.pass = rep.monotone_after_burn_in && rep.gaps.back() < tol.pass_gap;
    return rep;
}

LocalFamily simplified_family(const LocalFamily& fam) {
    auto simplified = std::make_shared<SimplifiedFamily>(fam.jet());
    return LocalFamily(simplified, make_jet(simplified));
}

SimplifiedComparison compare_simplified(const LocalFamily& fam, const WordSpec& word,
                                        std::span<const double> n_schedule) {
    const LocalFamily tilde = simplified_family(fam);
    SimplifiedComparison cmp;
    for (double n : n_schedule) {
        cmp.ns.push_back(n);
        cmp.gaps.push_back(std::abs(finite_n_expectation(fam, word, n) -
                                    finite_n_expectation(tilde, word, n)));
    }
    return cmp;
}

QubitClosedForms qubit_closed_forms(double r, double rx, double ry, double a) {
    if (!(r > 0.0 && r < 1.0)) throw std::invalid_argument("qubit_closed_forms: r outside (0,1)");
    auto fam = std::make_shared<QubitFamily>(r);
    const FamilyJet jet = make_jet(fam);
    const ccr::SymplecticSpace space(jet.rho);

    const CMat sigma_x(2, {0, 1, 1, 0});
    const CMat sigma_y(2, {0, cplx(0, -1), cplx(0, 1), 0});

    QubitClosedForms out;
    out.r = r;
    out.fisher_classical = 1.0 / (1.0 - r * r);
    out.classical_mean = out.fisher_classical * a;  // B(l_a) ~ N(I_c a, I_c) under phi^u
    out.classical_variance = out.fisher_classical;
    out.commutator_scale = space.symplectic(sigma_y, sigma_x);
    out.wigner_center_q = rx / std::sqrt(2.0 * r);
    out.wigner_center_p = ry / std::sqrt(2.0 * r);

    const CMat& la = jet.l[2];
    out.pipeline_fisher = ccr::quantum_fisher(jet.rho, la);
    std::vector<double> ea{0.0, 0.0, 1.0};
    out.pipeline_fisher_h = -jet.rho.expect(jet.h(ea)).real();

    CMat la_closed(2);
    la_closed(0, 0) = 1.0 / (1.0 + r);
    la_closed(1, 1) = -1.0 / (1.0 - r);
    out.score_residual = hs_norm(la - la_closed);

    out.k_dimension = static_cast<int>(ccr::k_subspace(space, jet, ccr::default_k_grid(2)).size());

    // generic-pipeline field means under phi^u, u = (rx, ry, a)
    const auto slds = ccr::sld(jet);
    CMat shift = rx * slds[0] + ry * slds[1] + a * slds[2];
    const double mean_q = space.alpha(sigma_x, shift) / std::sqrt(2.0 * r);
    const double mean_p = space.alpha(sigma_y, shift) / std::sqrt(2.0 * r);
    const double mean_c = space.alpha(la, shift);  // B(l_a) mean and variance
    const double var_c = space.alpha(la, la);
    out.center_residual = std::max({std::abs(mean_q - out.wigner_center_q),
                                    std::abs(mean_p - out.wigner_center_p),
                                    std::abs(mean_c - out.classical_mean),
                                    std::abs(var_c - out.classical_variance)});
    return out;
}

}  // namespace qlab::lan

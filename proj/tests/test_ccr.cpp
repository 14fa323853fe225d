#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <memory>
#include <random>

#include "qlab/ccr.hpp"
#include "qlab/family.hpp"

using namespace qlab;
using namespace qlab::ccr;

namespace {

CMat pauli_x() { return CMat(2, {0, 1, 1, 0}); }
CMat pauli_y() { return CMat(2, {0, cplx(0, -1), cplx(0, 1), 0}); }

CMat random_hermitian(int d, std::mt19937& rng, double scale = 1.0) {
    std::normal_distribution<double> g(0.0, scale);
    CMat m(d);
    for (int i = 0; i < d; ++i) {
        m(i, i) = g(rng);
        for (int j = i + 1; j < d; ++j) {
            m(i, j) = cplx(g(rng), g(rng));
            m(j, i) = std::conj(m(i, j));
        }
    }
    return m;
}

DensityMatrix qubit_rho(double r) {
    return DensityMatrix(CMat::diagonal(std::vector<double>{(1 + r) / 2, (1 - r) / 2}));
}

CMat span_combination(std::span<const CMat> basis, std::mt19937& rng) {
    std::normal_distribution<double> g(0.0, 1.0);
    CMat a(basis[0].dim());
    for (const CMat& b : basis) a += g(rng) * b;
    return a;
}

}  // namespace

TEST_CASE("symplectic form") {
    const SymplecticSpace s(qubit_rho(0.5));
    SUBCASE("antisymmetric, zero on the commutant") {
        std::mt19937 rng(3);
        const CMat a = random_hermitian(2, rng);
        const CMat b = random_hermitian(2, rng);
        CHECK(s.symplectic(a, a) == doctest::Approx(0.0));
        CHECK(s.symplectic(a, b) == doctest::Approx(-s.symplectic(b, a)).epsilon(1e-12));
        const CMat c = CMat::diagonal(std::vector<double>{1.2, -0.4});  // commutes with rho
        CHECK(std::abs(s.symplectic(c, b)) < 1e-12);
    }
    SUBCASE("qubit commutation scale sigma(sy, sx) = r") {
        for (double r : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const SymplecticSpace sp(qubit_rho(r));
            CHECK(sp.symplectic(pauli_y(), pauli_x()) == doctest::Approx(r).epsilon(1e-12));
        }
    }
    SUBCASE("second moment decomposes as alpha - i sigma") {
        std::mt19937 rng(5);
        const CMat a = random_hermitian(2, rng);
        const CMat b = random_hermitian(2, rng);
        const cplx m = s.second_moment(a, b);
        CHECK(m.real() == doctest::Approx(s.alpha(a, b)).epsilon(1e-12));
        CHECK(m.imag() == doctest::Approx(-s.symplectic(a, b)).epsilon(1e-12));
    }
    SUBCASE("hermitian basis is alpha-orthonormal") {
        std::mt19937 rng(7);
        CMat h = random_hermitian(3, rng);
        CMat m = h * h.adjoint() + 0.2 * CMat::identity(3);
        m *= 1.0 / m.trace();
        m = 0.5 * (m + m.adjoint());
        m = m + (1.0 - m.trace()) * CMat::identity(3) * (1.0 / 3.0);
        const SymplecticSpace sp{DensityMatrix(m)};
        const auto& basis = sp.hermitian_basis();
        REQUIRE(basis.size() == 9);
        for (size_t i = 0; i < basis.size(); ++i)
            for (size_t j = 0; j < basis.size(); ++j)
                CHECK(std::abs(sp.alpha(basis[i], basis[j]) - (i == j ? 1.0 : 0.0)) < 1e-10);
    }
}

TEST_CASE("commutant split") {
    SUBCASE("qubit: H_rho = span{1, sz}, perp = span{sx, sy}") {
        const auto split = split_commutant(qubit_rho(0.5));
        CHECK(split.commutant.size() == 2);
        CHECK(split.perp.size() == 2);
        for (const auto& c : split.commutant)
            CHECK(hs_norm(commutator(c, qubit_rho(0.5).matrix())) < 1e-12);
    }
    SUBCASE("tracial state: everything commutes") {
        const DensityMatrix rho(CMat::diagonal(std::vector<double>{0.25, 0.25, 0.25, 0.25}));
        const auto split = split_commutant(rho);
        CHECK(split.commutant.size() == 16);
        CHECK(split.perp.size() == 0);
    }
    SUBCASE("distinct d=3 spectrum: dims (3, 6)") {
        const DensityMatrix rho(CMat::diagonal(std::vector<double>{0.5, 0.3, 0.2}));
        const auto split = split_commutant(rho);
        CHECK(split.commutant.size() == 3);
        CHECK(split.perp.size() == 6);
    }
    SUBCASE("cross inner products vanish") {
        const DensityMatrix rho = qubit_rho(0.4);
        const SymplecticSpace s(rho);
        const auto split = split_commutant(rho);
        for (const auto& a : split.commutant)
            for (const auto& b : split.perp) CHECK(std::abs(s.alpha(a, b)) < 1e-12);
    }
}

TEST_CASE("weyl collapse") {
    const SymplecticSpace s(qubit_rho(0.5));
    std::mt19937 rng(11);
    const CMat a = random_hermitian(2, rng);
    const CMat b = random_hermitian(2, rng);

    SUBCASE("single letter") {
        WeylWord w;
        w.vectors.push_back(a);
        const auto c = weyl_collapse(w, s);
        CHECK(hs_norm(c.sum - a) < 1e-14);
        CHECK(std::abs(c.phase - cplx(1.0)) < 1e-14);
    }
    SUBCASE("W(A) W(-A) = 1") {
        WeylWord w;
        w.vectors = {a, -1.0 * a};
        const auto c = weyl_collapse(w, s);
        CHECK(hs_norm(c.sum) < 1e-14);
        CHECK(std::abs(c.phase - cplx(1.0)) < 1e-14);
    }
    SUBCASE("[A, B, -A-B] accumulates exp(+i sigma(A,B))") {
        WeylWord w;
        w.vectors = {a, b, -1.0 * (a + b)};
        const auto c = weyl_collapse(w, s);
        CHECK(hs_norm(c.sum) < 1e-13);
        // sigma(A,B) + sigma(A+B, -(A+B)) = sigma(A,B)
        const cplx expected = std::exp(cplx(0.0, s.symplectic(a, b)));
        CHECK(std::abs(c.phase - expected) < 1e-13);
    }
    SUBCASE("association order does not matter") {
        std::vector<CMat> vecs;
        for (int i = 0; i < 5; ++i) vecs.push_back(random_hermitian(2, rng));
        WeylWord flat;
        flat.vectors = vecs;
        const auto direct = weyl_collapse(flat, s);
        // pre-collapse a prefix pair, fold its phase, re-collapse
        WeylWord folded;
        WeylWord prefix;
        prefix.vectors = {vecs[0], vecs[1]};
        const auto pc = weyl_collapse(prefix, s);
        folded.prefactor = pc.phase;
        folded.vectors = {pc.sum, vecs[2], vecs[3], vecs[4]};
        const auto indirect = weyl_collapse(folded, s);
        CHECK(hs_norm(direct.sum - indirect.sum) < 1e-12);
        CHECK(std::abs(direct.phase - indirect.phase) < 1e-12);
    }
}

TEST_CASE("quasifree evaluation") {
    const SymplecticSpace s(qubit_rho(0.5));
    SUBCASE("empty word gives 1") {
        CHECK(std::abs(quasifree_eval(s, WeylWord::identity()) - cplx(1.0)) < 1e-15);
    }
    SUBCASE("single W(sx) at r=0.5 gives e^{-1/2}") {
        WeylWord w;
        w.vectors.push_back(pauli_x());
        CHECK(std::abs(quasifree_eval(s, w) - std::exp(-0.5)) < 1e-12);
    }
    SUBCASE("factorization over the commutant split") {
        std::mt19937 rng(13);
        const auto split = split_commutant(qubit_rho(0.5));
        for (int rep = 0; rep < 10; ++rep) {
            const CMat b1 = span_combination(split.commutant, rng);
            const CMat b2 = span_combination(split.perp, rng);
            WeylWord whole, left, right;
            whole.vectors.push_back(b1 + b2);
            left.vectors.push_back(b1);
            right.vectors.push_back(b2);
            const cplx lhs = quasifree_eval(s, whole);
            const cplx rhs = quasifree_eval(s, left) * quasifree_eval(s, right);
            CHECK(std::abs(lhs - rhs) < 1e-12);
        }
    }
    SUBCASE("word value equals its pre-collapsed value") {
        std::mt19937 rng(17);
        WeylWord w;
        for (int i = 0; i < 4; ++i) w.vectors.push_back(random_hermitian(2, rng));
        const auto c = weyl_collapse(w, s);
        WeylWord collapsed;
        collapsed.prefactor = c.phase;
        collapsed.vectors.push_back(c.sum);
        CHECK(std::abs(quasifree_eval(s, w) - quasifree_eval(s, collapsed)) < 1e-12);
    }
}

TEST_CASE("jet construction: analytic qubit vs finite differences") {
    const double r = 0.5;
    auto analytic = make_jet(std::make_shared<QubitFamily>(r));
    // the same family presented as raw matrix tables, jet by differences
    const CMat sx = pauli_x(), sy = pauli_y();
    const CMat sz = CMat(2, {1, 0, 0, -1});
    auto numeric = make_jet(std::make_shared<LinearMatrixFamily>(
        qubit_rho(r), std::vector<CMat>{0.5 * sx, 0.5 * sy, 0.5 * sz}));

    for (int k = 0; k < 3; ++k) {
        CHECK(hs_norm(analytic.H[k] - numeric.H[k]) < 1e-7);
        CHECK(hs_norm(analytic.l[k] - numeric.l[k]) < 1e-7);
        CHECK(hs_norm(analytic.drho[k] - numeric.drho[k]) < 1e-9);
    }
    const std::vector<double> u{0.7, -0.4, 0.9};
    CHECK(hs_norm(analytic.h(u) - numeric.h(u)) < 1e-4);

    SUBCASE("jet gauge and fisher identities") {
        const auto& jet = analytic;
        const std::vector<double> dir{0.3, 0.2, 0.6};
        CHECK(std::abs(jet.rho.expect(jet.H_of(dir))) < 1e-10);
        CHECK(std::abs(jet.rho.expect(jet.l_of(dir))) < 1e-10);
        const CMat lu = jet.l_of(dir);
        CHECK(std::abs(-jet.rho.expect(jet.h(dir)).real() -
                       jet.rho.expect(lu * lu).real()) < 1e-8);
    }
}

TEST_CASE("limit cocycle") {
    const double r = 0.5;
    const auto jet = make_jet(std::make_shared<QubitFamily>(r));
    const SymplecticSpace s(jet.rho);

    SUBCASE("t = 0 or u = 0 is the identity word") {
        const std::vector<double> u{1.0, 0.3, 0.8};
        const auto w0 = limit_cocycle(s, jet, u, 0.0);
        CHECK(std::abs(w0.prefactor - cplx(1.0)) < 1e-12);
        for (const auto& v : w0.vectors) CHECK(hs_norm(v) < 1e-12);
        const std::vector<double> zero{0.0, 0.0, 0.0};
        const auto wz = limit_cocycle(s, jet, zero, 1.3);
        CHECK(std::abs(wz.prefactor - cplx(1.0)) < 1e-12);
        for (const auto& v : wz.vectors) CHECK(hs_norm(v) < 1e-12);
    }
    SUBCASE("prefactor is unimodular") {
        std::mt19937 rng(19);
        std::uniform_real_distribution<double> un(-1.0, 1.0);
        for (int rep = 0; rep < 10; ++rep) {
            const std::vector<double> u{un(rng), un(rng), un(rng)};
            const auto w = limit_cocycle(s, jet, u, un(rng) * 3.0);
            // the t l(u) part carries the only non-unimodular freedom and is real
            CHECK(std::abs(std::abs(w.prefactor) - 1.0) < 1e-12);
        }
    }
    SUBCASE("pure rotation family reduces to the unitary closed form") {
        const CMat h = 0.5 * pauli_y();
        auto rot = std::make_shared<RotationFamily>(qubit_rho(r), std::vector<CMat>{h});
        const auto rjet = make_jet(rot);
        for (double u : {0.3, 1.0}) {
            for (double t : {-1.2, 0.7}) {
                const auto w = limit_cocycle(s, rjet, std::vector<double>{u}, t);
                const cplx val = quasifree_eval(s, w);
                // hand-coded: W(u(H - sigma_t H)) exp((u^2/2) phi([H, sigma_t H]))
                const CMat ut = jet.rho.power(cplx(0, t));
                const CMat hs_ = ut * h * ut.adjoint();
                const CMat diff = u * (h - hs_);
                const cplx pref =
                    std::exp(0.5 * u * u * jet.rho.expect(commutator(h, hs_)));
                const cplx expected =
                    pref * std::exp(cplx(-0.5 * s.alpha(diff, diff), 0.0));
                CHECK(std::abs(val - expected) < 1e-10);
            }
        }
    }
}

TEST_CASE("K subspace") {
    SUBCASE("commuting family: K = span of the scores") {
        auto diag = std::make_shared<DiagonalFamily>(
            std::vector<double>{0.5, 0.3, 0.2},
            std::vector<std::vector<double>>{{0.1, -0.2, 0.1}, {0.05, 0.05, -0.1}});
        const auto jet = make_jet(diag);
        const SymplecticSpace s(jet.rho);
        const auto k = k_subspace(s, jet, default_k_grid(3));
        CHECK(k.size() == 2);
        for (const auto& lk : jet.l) CHECK(projection_residual(s, k, lk) < 1e-10);
    }
    SUBCASE("unitary family: K inside the perp block") {
        std::mt19937 rng(23);
        auto rot = std::make_shared<RotationFamily>(
            qubit_rho(0.5), std::vector<CMat>{random_hermitian(2, rng)});
        const auto jet = make_jet(rot);
        const SymplecticSpace s(jet.rho);
        const auto k = k_subspace(s, jet, default_k_grid(2));
        const auto split = split_commutant(jet.rho);
        for (const auto& v : k) {
            double res = projection_residual(s, split.perp, v);
            CHECK(res < 1e-10);
        }
    }
    SUBCASE("full qubit family: dim K = 3") {
        const auto jet = make_jet(std::make_shared<QubitFamily>(0.5));
        const SymplecticSpace s(jet.rho);
        CHECK(k_subspace(s, jet, default_k_grid(2)).size() == 3);
    }
}

TEST_CASE("symmetric logarithmic derivative") {
    SUBCASE("constant family has zero scores") {
        auto diag = std::make_shared<DiagonalFamily>(
            std::vector<double>{0.6, 0.4}, std::vector<std::vector<double>>{{0.0, 0.0}});
        const auto slds = sld(make_jet(diag));
        CHECK(hs_norm(slds[0]) < 1e-12);
    }
    SUBCASE("diag(0.8,0.2) with drho = sx gives 2 sx") {
        // solve via a handmade jet carrying the requested derivative
        auto rot = std::make_shared<RotationFamily>(
            DensityMatrix(CMat::diagonal(std::vector<double>{0.8, 0.2})),
            std::vector<CMat>{pauli_y()});
        auto jet = make_jet(rot);
        jet.drho = {pauli_x()};
        const auto slds = sld(jet);
        CHECK(hs_norm(slds[0] - 2.0 * pauli_x()) < 1e-12);
    }
    SUBCASE("qubit rotation: |L_12| = r and fisher = r^2") {
        const double r = 0.5;
        auto rot = std::make_shared<RotationFamily>(qubit_rho(r),
                                                    std::vector<CMat>{0.5 * pauli_y()});
        const auto jet = make_jet(rot);
        const auto slds = sld(jet);
        CHECK(std::abs(slds[0](0, 1)) == doctest::Approx(r).epsilon(1e-12));
        CHECK(quantum_fisher(jet.rho, slds[0]) == doctest::Approx(r * r).epsilon(1e-12));
    }
}

TEST_CASE("field fisher information is maximized along the SLD") {
    const double r = 0.5;
    auto rot = std::make_shared<RotationFamily>(qubit_rho(r),
                                                std::vector<CMat>{0.5 * pauli_y()});
    const auto jet = make_jet(rot);
    const SymplecticSpace s(jet.rho);
    const auto slds = sld(jet);
    const auto k = k_subspace(s, jet, default_k_grid(2));
    const double bound = quantum_fisher(jet.rho, slds[0]);

    std::mt19937 rng(29);
    double best = 0.0;
    for (int rep = 0; rep < 100; ++rep) {
        const CMat a = span_combination(k, rng);
        const double ia = field_fisher(s, slds[0], a);
        CHECK(ia <= bound + 1e-9);
        best = std::max(best, ia);
    }
    CHECK(field_fisher(s, slds[0], slds[0]) == doctest::Approx(bound).epsilon(1e-12));
}

TEST_CASE("logarithmic derivative family L^F") {
    const auto jet = make_jet(std::make_shared<QubitFamily>(0.4));
    SUBCASE("SLD form recovers the symmetric derivative") {
        const auto ls = sld(jet);
        const auto lf = log_derivative_f(jet, LogDerivativeForm::sld_form());
        for (size_t k = 0; k < ls.size(); ++k) CHECK(hs_norm(ls[k] - lf[k]) < 1e-10);
    }
    SUBCASE("BKM form equals the derivative of log rho") {
        const auto lf = log_derivative_f(jet, LogDerivativeForm::bkm_form());
        const double h = 1e-5;
        auto fam = jet.family;
        for (int k = 0; k < 3; ++k) {
            std::vector<double> tp = jet.theta0, tm = jet.theta0;
            tp[k] += h;
            tm[k] -= h;
            const CMat dlog =
                (0.5 / h) * (fam->state(tp).log() - fam->state(tm).log());
            CHECK(hs_norm(lf[k] - dlog) < 1e-6);
        }
    }
    SUBCASE("memberships: SLD, BKM and a sampled F all live in K") {
        const SymplecticSpace s(jet.rho);
        const auto k = k_subspace(s, jet, default_k_grid(2));
        for (const auto& m : sld(jet)) CHECK(projection_residual(s, k, m) < 1e-8);
        for (const auto& m : log_derivative_f(jet, LogDerivativeForm::bkm_form()))
            CHECK(projection_residual(s, k, m) < 1e-8);
        // a generic admissible form: F(t) = (1/4)(sqrt(t)+1)^2 satisfies F(1)=1
        LogDerivativeForm custom{[](double t) {
            const double q = std::sqrt(t) + 1.0;
            return 0.25 * q * q;
        }};
        for (const auto& m : log_derivative_f(jet, custom))
            CHECK(projection_residual(s, k, m) < 1e-8);
    }
    SUBCASE("form validation") {
        CHECK_THROWS_AS(log_derivative_f(jet, LogDerivativeForm{[](double) { return 2.0; }}),
                        std::invalid_argument);
        CHECK_THROWS_AS(log_derivative_f(jet, LogDerivativeForm{[](double t) { return t - 1.0; }}),
                        std::invalid_argument);
    }
}

TEST_CASE("SLD decomposes into eigenvalue and unitary scores") {
    const auto jet = make_jet(std::make_shared<QubitFamily>(0.45));
    const auto slds = sld(jet);
    const auto ells = unitary_scores(jet);
    for (int k = 0; k < 3; ++k) {
        CHECK(hs_norm(slds[k] - jet.l[k] - ells[k]) < 1e-10);
        CHECK(std::abs(jet.rho.expect(ells[k])) < 1e-12);
    }
}

TEST_CASE("matrix list CSV export") {
    const auto jet = make_jet(std::make_shared<QubitFamily>(0.5));
    const SymplecticSpace s(jet.rho);
    const auto k = k_subspace(s, jet, default_k_grid(2));
    const std::string csv = matrices_to_csv(k);
    // one line per matrix, re/im interleaved row-major: 8 numbers for a 2x2
    size_t lines = 0, commas = 0;
    for (char c : csv) {
        if (c == '\n') ++lines;
        if (c == ',') ++commas;
    }
    CHECK(lines == k.size());
    CHECK(commas == 7 * k.size());
}

TEST_CASE("multiple commutators C_r stay in K") {
    const auto jet = make_jet(std::make_shared<QubitFamily>(0.6));
    const SymplecticSpace s(jet.rho);
    const auto k = k_subspace(s, jet, default_k_grid(2));
    const CMat logrho = jet.rho.log();
    for (int idx : {0, 1}) {
        CMat c = jet.H[idx];
        for (int r = 1; r <= 3; ++r) {
            c = commutator(c, logrho);
            CHECK(projection_residual(s, k, c) < 1e-8);
        }
    }
}

TEST_CASE("shifted state: field mean and variance by differentiation") {
    const auto jet = make_jet(std::make_shared<QubitFamily>(0.5));
    const SymplecticSpace s(jet.rho);
    const auto slds = sld(jet);
    const std::vector<double> u{0.2, -0.3, 0.4};
    CMat shift(2);
    for (int k = 0; k < 3; ++k) shift += u[k] * slds[k];

    std::mt19937 rng(31);
    const CMat a = random_hermitian(2, rng);
    auto eval = [&](double t) {
        WeylWord w;
        w.vectors.push_back(t * a);
        return quasifree_eval(s, w, &shift);
    };
    const double h = 1e-5;
    const cplx d1 = (eval(h) - eval(-h)) / (2.0 * h);
    const cplx d2 = (eval(h) - 2.0 * eval(0.0) + eval(-h)) / (h * h);
    const double mean = (cplx(0, -1) * d1).real();
    const double second = (-d2).real();
    CHECK(mean == doctest::Approx(s.alpha(a, shift)).epsilon(1e-6));
    CHECK(second - mean * mean == doctest::Approx(s.alpha(a, a)).epsilon(1e-5));
}

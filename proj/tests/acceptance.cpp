// Acceptance suite: one criterion per section, one pass/fail line each.
// Every tolerance is pinned here; the process exits nonzero if any line fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "qlab/ccr.hpp"
#include "qlab/classical.hpp"
#include "qlab/family.hpp"
#include "qlab/lan.hpp"
#include "qlab/matrix.hpp"
#include "qlab/quantum.hpp"

using namespace qlab;
using namespace std::chrono;

namespace {

int g_failures = 0;

void criterion(int id, const std::string& name, const std::function<bool(std::string&)>& body) {
    std::string detail;
    bool ok = false;
    const auto start = steady_clock::now();
    try {
        ok = body(detail);
    } catch (const std::exception& e) {
        detail = std::string("exception: ") + e.what();
    }
    const double secs = duration_cast<duration<double>>(steady_clock::now() - start).count();
    std::printf("[%s] criterion %2d: %-38s (%.2fs) %s\n", ok ? "PASS" : "FAIL", id, name.c_str(),
                secs, detail.c_str());
    if (!ok) ++g_failures;
}

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

DensityMatrix random_density(int d, std::mt19937& rng) {
    const CMat h = random_hermitian(d, rng);
    CMat m = h * h.adjoint() + 0.15 * CMat::identity(d);
    m *= 1.0 / m.trace();
    m = 0.5 * (m + m.adjoint());
    m = m + (1.0 - m.trace()) * CMat::identity(d) * (1.0 / d);
    return DensityMatrix(m);
}

std::shared_ptr<const Family> random_family(int d, std::mt19937& rng) {
    std::uniform_int_distribution<int> kind(0, d == 2 ? 2 : 1);
    switch (kind(rng)) {
        case 0: {
            std::vector<CMat> gens;
            const int m = 1 + kind(rng) % 2;
            for (int k = 0; k < m; ++k) gens.push_back(random_hermitian(d, rng, 0.7));
            return std::make_shared<RotationFamily>(random_density(d, rng), std::move(gens));
        }
        case 1: {
            const DensityMatrix rho = random_density(d, rng);
            std::vector<CMat> deltas;
            CMat delta = random_hermitian(d, rng, 0.05);
            delta -= (delta.trace() / static_cast<double>(d)) * CMat::identity(d);
            delta = 0.5 * (delta + delta.adjoint());
            deltas.push_back(std::move(delta));
            return std::make_shared<LinearMatrixFamily>(rho, std::move(deltas));
        }
        default: {
            std::uniform_real_distribution<double> rr(0.25, 0.75);
            return std::make_shared<QubitFamily>(rr(rng));
        }
    }
}

lan::WordSpec random_word(int m, int max_len, std::mt19937& rng, double u_scale) {
    std::uniform_int_distribution<int> len(1, max_len);
    std::uniform_real_distribution<double> uu(-u_scale, u_scale);
    std::uniform_real_distribution<double> tt(-2.0, 2.0);
    std::uniform_int_distribution<int> adj(0, 1);
    lan::WordSpec w;
    const int L = len(rng);
    for (int i = 0; i < L; ++i) {
        std::vector<double> u(m);
        for (double& x : u) x = uu(rng);
        w.push_back({std::move(u), tt(rng), adj(rng) == 1});
    }
    return w;
}

// the three word specs used by criteria 2 and 11
std::vector<lan::WordSpec> acceptance_words() {
    return {
        {{{1.0, 0.3, 0.8}, 1.0, false}},
        {{{1.0, 0.3, 0.8}, 1.0, false}, {{-0.5, 0.7, 0.2}, -1.3, false}},
        {{{1.0, 0.3, 0.8}, 1.0, false}, {{-0.5, 0.7, 0.2}, -1.3, true}},
    };
}

quantum::Experiment random_quantum_experiment(int d, int np, std::mt19937& rng) {
    std::vector<std::string> labels;
    std::vector<DensityMatrix> states;
    for (int t = 0; t < np; ++t) {
        labels.push_back("t" + std::to_string(t));
        states.push_back(random_density(d, rng));
    }
    return quantum::Experiment(std::move(labels), std::move(states), 0);
}

quantum::GroupWord random_group_word(int np, int max_len, std::mt19937& rng) {
    std::uniform_int_distribution<int> len(1, max_len);
    std::uniform_int_distribution<int> th(0, np - 1);
    std::uniform_real_distribution<double> tt(-2.0, 2.0);
    std::uniform_int_distribution<int> inv(0, 1);
    std::vector<quantum::WordLetter> letters;
    const int L = len(rng);
    for (int i = 0; i < L; ++i) letters.push_back({th(rng), tt(rng), inv(rng) == 1});
    return quantum::GroupWord(letters, 0);
}

}  // namespace

int main() {
    std::printf("acceptance suite\n================\n");

    criterion(1, "collapse identity vs tensor oracle", [](std::string& detail) {
        const auto t0 = steady_clock::now();
        std::mt19937 rng(101);
        double worst = 0.0;
        for (int rep = 0; rep < 50; ++rep) {
            const lan::LocalFamily fam(random_family(2, rng));
            const auto w = random_word(fam.num_params(), 3, rng, 0.25);
            for (int n : {1, 2, 3}) {
                const cplx a = lan::finite_n_expectation(fam, w, n);
                const cplx b = lan::tensor_oracle(fam, w, n);
                worst = std::max(worst, std::abs(a - b));
            }
        }
        for (int rep = 0; rep < 10; ++rep) {
            const lan::LocalFamily fam(random_family(3, rng));
            const auto w = random_word(fam.num_params(), 3, rng, 0.25);
            const cplx a = lan::finite_n_expectation(fam, w, 2);
            const cplx b = lan::tensor_oracle(fam, w, 2);
            worst = std::max(worst, std::abs(a - b));
        }
        const double secs = duration_cast<duration<double>>(steady_clock::now() - t0).count();
        char buf[80];
        std::snprintf(buf, sizeof(buf), "max |collapsed - oracle| = %.2e", worst);
        detail = buf;
        return worst < 1e-12 && secs < 5.0;
    });

    criterion(2, "quantum LAN on the qubit family", [](std::string& detail) {
        const lan::LocalFamily fam(std::make_shared<QubitFamily>(0.5));
        const auto schedule = lan::default_schedule();
        bool ok = true;
        char buf[160];
        detail.clear();
        for (const auto& w : acceptance_words()) {
            const auto t0 = steady_clock::now();
            const auto rep = lan::lan_report(fam, w, schedule);
            const double secs = duration_cast<duration<double>>(steady_clock::now() - t0).count();
            double gap8 = 1.0;
            for (size_t i = 0; i < rep.ns.size(); ++i)
                if (rep.ns[i] == 1e8) gap8 = rep.gaps[i];
            const bool word_ok = rep.monotone_after_burn_in && gap8 < 1e-3 &&
                                 rep.slope >= -0.65 && rep.slope <= -0.35 && secs < 1.0;
            std::snprintf(buf, sizeof(buf), "[gap(1e8)=%.2e slope=%.2f %.2fs]", gap8, rep.slope,
                          secs);
            detail += buf;
            ok = ok && word_ok;
        }
        return ok;
    });

    criterion(3, "unitary-family closed form", [](std::string& detail) {
        const double r = 0.5;
        const CMat h = 0.5 * CMat(2, {0, cplx(0, -1), cplx(0, 1), 0});  // sigma_y / 2
        auto rot = std::make_shared<RotationFamily>(
            DensityMatrix(CMat::diagonal(std::vector<double>{(1 + r) / 2, (1 - r) / 2})),
            std::vector<CMat>{h});
        const lan::LocalFamily fam(rot);
        const ccr::SymplecticSpace space(fam.jet().rho);
        double worst = 0.0;
        for (int iu = 0; iu < 5; ++iu) {
            for (int it = 0; it < 5; ++it) {
                const double u = -1.0 + 0.5 * iu;
                const double t = -2.0 + 1.0 * it;
                const lan::WordSpec w{{{u}, t, false}};
                const cplx got = lan::limit_expectation(fam, w);
                // hand-coded eq: W(u(H - sigma_t H)) exp((u^2/2) phi([H, sigma_t H]))
                const CMat ut = fam.jet().rho.power(cplx(0, t));
                const CMat hs = ut * h * ut.adjoint();
                const CMat diff = u * (h - hs);
                const cplx pref =
                    std::exp(0.5 * u * u * fam.jet().rho.expect(commutator(h, hs)));
                const cplx expected = pref * std::exp(-0.5 * space.alpha(diff, diff));
                worst = std::max(worst, std::abs(got - expected));
            }
        }
        detail = "max grid deviation = " + std::to_string(worst);
        return worst < 1e-10;
    });

    criterion(4, "classical LAN and examples", [](std::string& detail) {
        using namespace qlab::classical;
        const std::vector<double> th{1.0, 2.0};
        const SimplexPoint half({0.5, 0.5});
        double prev = 1.0;
        bool monotone = true;
        double gap4 = 1.0;
        for (double n : {1e1, 1e2, 1e3, 1e4}) {
            const double gap = std::abs(binomial_hellinger(n, th, half) -
                                        poisson_limit_hellinger(th, half));
            monotone = monotone && gap < prev;
            prev = gap;
            gap4 = gap;
        }
        // 3-outcome local family vs gaussian shift at n = 1e6
        const std::vector<double> p0{0.2, 0.3, 0.5};
        const std::vector<double> dir{0.1, -0.2, 0.1};
        const std::vector<double> shifts{0.0, 0.7, -0.4};
        const auto fisher = fisher_information(p0, std::vector<std::vector<double>>{dir});
        const SimplexPoint z({0.2, 0.5, 0.3});
        const double n = 1e6;
        double per = 0.0;
        for (size_t w = 0; w < p0.size(); ++w) {
            double prod = 1.0;
            for (size_t i = 0; i < shifts.size(); ++i)
                prod *= std::pow(p0[w] + shifts[i] / std::sqrt(n) * dir[w], z.z[i]);
            per += prod;
        }
        const double eta_n = std::exp(n * std::log(per));
        std::vector<std::vector<double>> sh;
        for (double u : shifts) sh.push_back({u});
        const double gap_gauss = std::abs(eta_n - gaussian_shift_hellinger(sh, fisher, z));
        char buf[100];
        std::snprintf(buf, sizeof(buf), "binpoiss gap(1e4)=%.2e, gauss gap(1e6)=%.2e", gap4,
                      gap_gauss);
        detail = buf;
        return monotone && gap4 < 1e-3 && gap_gauss < 1e-3;
    });

    criterion(5, "deficiency linear program", [](std::string& detail) {
        using namespace qlab::classical;
        const Experiment e1({"t1", "t2"}, {{0.9, 0.1}, {0.1, 0.9}});
        const auto e2 = Experiment::unrestricted({"t1", "t2"}, {{1.0, 0.0}, {0.0, 1.0}});
        const double self = deficiency_lp(e1, e1).delta;

        const std::vector<std::vector<double>> m0{{0.8, 0.2}, {0.3, 0.7}};
        std::vector<std::vector<double>> rows(2, std::vector<double>(2, 0.0));
        for (int t = 0; t < 2; ++t)
            for (int j = 0; j < 2; ++j)
                for (int i = 0; i < 2; ++i) rows[t][j] += e1.row(t)[i] * m0[i][j];
        const double garbled = deficiency_lp(e1, Experiment({"t1", "t2"}, rows)).delta;

        const double delta = deficiency_lp(e1, e2).delta;
        // exhaustive grid over 2x2 stochastic kernels
        double grid_best = 1.0;
        const int steps = 2000;
        for (int ia = 0; ia <= steps; ++ia) {
            for (int ib = 0; ib <= steps; ++ib) {
                const double a = static_cast<double>(ia) / steps;
                const double b = static_cast<double>(ib) / steps;
                double worst = 0.0;
                for (int t = 0; t < 2; ++t) {
                    const double p0 = e1.row(t)[0] * a + e1.row(t)[1] * b;
                    const double l1 = std::abs(p0 - e2.row(t)[0]) +
                                      std::abs(1.0 - p0 - e2.row(t)[1]);
                    worst = std::max(worst, 0.5 * l1);
                }
                grid_best = std::min(grid_best, worst);
            }
        }
        char buf[120];
        std::snprintf(buf, sizeof(buf), "self=%.1e garbled=%.1e delta=%.7f grid=%.7f", self,
                      garbled, delta, grid_best);
        detail = buf;
        return self <= 1e-9 && garbled <= 1e-7 && std::abs(delta - 0.1) <= 1e-6 &&
               std::abs(delta - grid_best) <= 1e-4;
    });

    criterion(6, "qubit closed forms", [](std::string& detail) {
        bool ok = true;
        double worst_ic = 0.0, worst_sigma = 0.0;
        for (double r : {0.1, 0.3, 0.5, 0.7, 0.9}) {
            const auto q = lan::qubit_closed_forms(r, 0.0, 0.0, 0.0);
            const double ic = 1.0 / (1.0 - r * r);
            worst_ic = std::max({worst_ic, std::abs(q.pipeline_fisher - ic),
                                 std::abs(q.pipeline_fisher_h - ic)});
            worst_sigma = std::max(worst_sigma, std::abs(q.commutator_scale - r));
            ok = ok && q.k_dimension == 3;
        }
        char buf[100];
        std::snprintf(buf, sizeof(buf), "|I_c err|=%.1e |sigma err|=%.1e", worst_ic, worst_sigma);
        detail = buf;
        return ok && worst_ic < 1e-9 && worst_sigma < 1e-12;
    });

    criterion(7, "cocycle algebra", [](std::string& detail) {
        std::mt19937 rng(707);
        std::uniform_real_distribution<double> ts(-3.0, 3.0);
        double worst = 0.0;
        int draws = 0;
        for (int d : {2, 3, 4}) {
            const auto e = random_quantum_experiment(d, 3, rng);
            const auto& rho = e.base_state();
            for (int rep = 0; rep < 34 && draws < 100; ++rep, ++draws) {
                const double s = ts(rng), t = ts(rng);
                const int theta = 1 + rep % 2;
                const CMat us = quantum::connes_cocycle(e, theta, s);
                const CMat ut = quantum::connes_cocycle(e, theta, t);
                worst = std::max(worst, hs_norm(us * quantum::modular_orbit(rho, ut, s) -
                                                quantum::connes_cocycle(e, theta, s + t)));
                const CMat a = random_hermitian(d, rng);
                worst = std::max(
                    worst, hs_norm(ut * quantum::modular_orbit(rho, a, t) * ut.adjoint() -
                                   quantum::modular_orbit(e.state(theta), a, t)));
                const CMat chained =
                    quantum::connes_cocycle(e, 2, t) * quantum::connes_cocycle(e, 1, t).adjoint();
                worst = std::max(worst, hs_norm(e.state(2).power(cplx(0, t)) *
                                                    e.state(1).power(cplx(0, -t)) -
                                                chained));
            }
        }
        detail = "max residual over " + std::to_string(draws) + " draws = " +
                 std::to_string(worst);
        return worst < 1e-10;
    });

    criterion(8, "canonical-state properties", [](std::string& detail) {
        std::mt19937 rng(808);
        const auto e = random_quantum_experiment(3, 3, rng);
        bool ok = std::abs(quantum::canonical_state(e, quantum::GroupWord()) - cplx(1.0)) == 0.0;

        std::vector<quantum::GroupWord> words{quantum::GroupWord()};
        for (int i = 0; i < 19; ++i) words.push_back(random_group_word(3, 3, rng));
        CMat gram(static_cast<int>(words.size()));
        for (size_t i = 0; i < words.size(); ++i)
            for (size_t j = 0; j < words.size(); ++j)
                gram(static_cast<int>(i), static_cast<int>(j)) =
                    quantum::canonical_state(e, words[i].inverse().concat(words[j]));
        const auto spec = eig_hermitian(0.5 * (gram + gram.adjoint()));
        const double min_eig = spec.eigenvalues.back();
        ok = ok && min_eig >= -1e-10;

        double mod_res = 0.0;
        for (int rep = 0; rep < 10; ++rep) {
            const auto g = random_group_word(3, 3, rng);
            const double s = std::uniform_real_distribution<double>(-2.0, 2.0)(rng);
            mod_res = std::max(mod_res, std::abs(quantum::canonical_state(e, g) -
                                                 quantum::canonical_state(
                                                     e, g.modular_shift(s, 0))));
        }
        ok = ok && mod_res < 1e-10;

        const auto f = random_quantum_experiment(2, 3, rng);
        const auto g2 = random_quantum_experiment(2, 3, rng);
        const auto mix = quantum::mix_experiments(f, g2, 0.4);
        double mix_res = 0.0;
        for (int rep = 0; rep < 10; ++rep) {
            const auto g = random_group_word(3, 3, rng);
            mix_res = std::max(mix_res,
                               std::abs(quantum::canonical_state(mix, g) -
                                        0.4 * quantum::canonical_state(f, g) -
                                        0.6 * quantum::canonical_state(g2, g)));
        }
        ok = ok && mix_res < 1e-12;
        char buf[120];
        std::snprintf(buf, sizeof(buf), "gram min eig=%.1e, modular=%.1e, mixture=%.1e", min_eig,
                      mod_res, mix_res);
        detail = buf;
        return ok;
    });

    criterion(9, "commutative consistency", [](std::string& detail) {
        const quantum::Experiment eq(
            {"t0", "t1", "t2"},
            {DensityMatrix(CMat::diagonal(std::vector<double>{0.5, 0.3, 0.2})),
             DensityMatrix(CMat::diagonal(std::vector<double>{0.4, 0.35, 0.25})),
             DensityMatrix(CMat::diagonal(std::vector<double>{0.25, 0.45, 0.3}))},
            0);
        const classical::Experiment ec({"t0", "t1", "t2"}, {{0.5, 0.3, 0.2},
                                                            {0.4, 0.35, 0.25},
                                                            {0.25, 0.45, 0.3}});
        std::mt19937 rng(909);
        std::uniform_real_distribution<double> tt(-2.0, 2.0);
        std::uniform_int_distribution<int> th(1, 2);
        std::uniform_int_distribution<int> inv(0, 1);
        double worst = 0.0;
        for (int rep = 0; rep < 20; ++rep) {
            std::vector<quantum::WordLetter> wq;
            std::vector<classical::LoglikLetter> wc;
            const int len = 1 + rep % 4;
            for (int i = 0; i < len; ++i) {
                const int theta = th(rng);
                const double t = tt(rng);
                const bool iv = inv(rng) == 1;
                wq.push_back({theta, t, iv});
                wc.push_back({theta, t, iv});
            }
            worst = std::max(worst, std::abs(quantum::canonical_state(eq, quantum::GroupWord(wq, 0)) -
                                             classical::loglik_char(ec, 0, wc)));
        }
        detail = "max |quantum - classical| = " + std::to_string(worst);
        return worst < 1e-12;
    });

    criterion(10, "derivative memberships and field fisher", [](std::string& detail) {
        const auto jet = make_jet(std::make_shared<QubitFamily>(0.5));
        const ccr::SymplecticSpace space(jet.rho);
        const auto k = ccr::k_subspace(space, jet, ccr::default_k_grid(2));
        double worst = 0.0;
        const auto slds = ccr::sld(jet);
        for (const auto& m : slds) worst = std::max(worst, ccr::projection_residual(space, k, m));
        for (const auto& m : ccr::log_derivative_f(jet, ccr::LogDerivativeForm::bkm_form()))
            worst = std::max(worst, ccr::projection_residual(space, k, m));
        const ccr::LogDerivativeForm wigner_yanase{[](double t) {
            const double q = std::sqrt(t) + 1.0;
            return 0.25 * q * q;
        }};
        for (const auto& m : ccr::log_derivative_f(jet, wigner_yanase))
            worst = std::max(worst, ccr::projection_residual(space, k, m));
        const ccr::LogDerivativeForm geometric{[](double t) { return std::sqrt(t); }};
        for (const auto& m : ccr::log_derivative_f(jet, geometric))
            worst = std::max(worst, ccr::projection_residual(space, k, m));

        // direction with a nonzero score in every coordinate
        const std::vector<double> dir{0.6, -0.3, 0.5};
        CMat l_dir(2);
        for (int i = 0; i < 3; ++i) l_dir += dir[i] * slds[i];
        const double bound = ccr::quantum_fisher(jet.rho, l_dir);
        std::mt19937 rng(1010);
        std::normal_distribution<double> g(0.0, 1.0);
        double best = 0.0;
        bool bounded = true;
        for (int rep = 0; rep < 100; ++rep) {
            CMat a(2);
            for (const auto& b : k) a += g(rng) * b;
            const double ia = ccr::field_fisher(space, l_dir, a);
            bounded = bounded && ia <= bound * (1.0 + 1e-6);
            best = std::max(best, ia);
        }
        const double at_l = ccr::field_fisher(space, l_dir, l_dir);
        char buf[120];
        std::snprintf(buf, sizeof(buf), "membership=%.1e, sup/bound=%.8f", worst, at_l / bound);
        detail = buf;
        return worst < 1e-8 && bounded && std::abs(at_l - bound) <= 1e-6 * bound;
    });

    criterion(11, "simplified-family agreement", [](std::string& detail) {
        const lan::LocalFamily fam(std::make_shared<QubitFamily>(0.5));
        const std::vector<double> ns{1e6};
        double worst = 0.0;
        for (const auto& w : acceptance_words()) {
            const auto cmp = lan::compare_simplified(fam, w, ns);
            worst = std::max(worst, cmp.gaps[0]);
        }
        detail = "max |E_orig - E_tilde| at n=1e6 = " + std::to_string(worst);
        return worst < 1e-3;
    });

    std::printf("================\n%s (%d failure%s)\n", g_failures == 0 ? "ALL PASS" : "FAILED",
                g_failures, g_failures == 1 ? "" : "s");
    return g_failures == 0 ? 0 : 1;
}

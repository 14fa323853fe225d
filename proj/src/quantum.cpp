#include "qlab/quantum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace qlab::quantum {

QuantumTolerances& quantum_tolerances() {
    static QuantumTolerances tol;
    return tol;
}

Experiment::Experiment(std::vector<std::string> params, std::vector<DensityMatrix> states,
                       int base_index, const QuantumTolerances& tol)
    : params_(std::move(params)), states_(std::move(states)), base_(base_index) {
    if (params_.empty() || params_.size() != states_.size())
        throw std::invalid_argument("Experiment: label/state count mismatch");
    if (base_ < 0 || base_ >= static_cast<int>(states_.size()))
        throw std::invalid_argument("Experiment: base index out of range");
    const int d = states_.front().dim();
    for (const auto& s : states_) {
        if (s.dim() != d) throw std::invalid_argument("Experiment: mixed dimensions");
        if (s.min_eigenvalue() <= tol.faithful)
            throw std::invalid_argument("Experiment: state is not faithful enough");
    }
}

int Experiment::param_index(const std::string& label) const {
    for (int i = 0; i < num_params(); ++i)
        if (params_[i] == label) return i;
    throw std::invalid_argument("Experiment: unknown parameter label '" + label + "'");
}

GroupWord::GroupWord(std::span<const WordLetter> letters, int base_index,
                     const QuantumTolerances& tol) {
    for (const auto& l : letters) {
        if (l.theta == base_index || std::abs(l.t) < tol.letter_drop) continue;
        letters_.push_back(l);
    }
}

GroupWord GroupWord::inverse() const {
    GroupWord g;
    g.letters_.assign(letters_.rbegin(), letters_.rend());
    for (auto& l : g.letters_) l.inverse = !l.inverse;
    return g;
}

GroupWord GroupWord::concat(const GroupWord& other) const {
    GroupWord g = *this;
    g.letters_.insert(g.letters_.end(), other.letters_.begin(), other.letters_.end());
    return g;
}

GroupWord GroupWord::modular_shift(double s, int base_index) const {
    std::vector<WordLetter> out;
    for (const auto& l : letters_) {
        if (!l.inverse) {
            out.push_back({l.theta, s, true});
            out.push_back({l.theta, l.t + s, false});
        } else {
            out.push_back({l.theta, l.t + s, true});
            out.push_back({l.theta, s, false});
        }
    }
    return GroupWord(out, base_index);
}

CMat modular_orbit(const DensityMatrix& rho, const CMat& a, double t) {
    if (t == 0.0) return a;
    const CMat u = rho.power(cplx(0.0, t));
    return u * a * u.adjoint();
}

CMat connes_cocycle(const Experiment& e, int theta, double t) {
    if (theta < 0 || theta >= e.num_params())
        throw std::invalid_argument("connes_cocycle: unknown parameter index");
    if (t == 0.0 || theta == e.base_index()) return CMat::identity(e.dim());
    return e.state(theta).power(cplx(0.0, t)) * e.base_state().power(cplx(0.0, -t));
}

CMat word_operator(const Experiment& e, const GroupWord& g) {
    CMat w = CMat::identity(e.dim());
    for (const auto& l : g.letters()) {
        CMat c = connes_cocycle(e, l.theta, l.t);
        if (l.inverse) c = c.adjoint();
        w = w * c;
    }
    return w;
}

cplx canonical_state(const Experiment& e, const GroupWord& g) {
    if (g.empty()) return 1.0;  // omega(e) = 1 by state normalization
    return e.base_state().expect(word_operator(e, g));
}

cplx state_at_theta(const Experiment& e, int theta, const GroupWord& g) {
    if (g.empty()) return 1.0;
    return e.state(theta).expect(word_operator(e, g));
}

double quantum_hellinger(const DensityMatrix& rho_theta, const DensityMatrix& rho, double p) {
    if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("quantum_hellinger: p outside (0,1)");
    const cplx v = (rho.power(p) * rho_theta.power(1.0 - p)).trace();
    return v.real();
}

double quasi_entropy(const DensityMatrix& rho_theta, const DensityMatrix& rho, double p) {
    return (1.0 - quantum_hellinger(rho_theta, rho, p)) / (p * (1.0 - p));
}

Experiment mix_experiments(const Experiment& e1, const Experiment& e2, double lambda) {
    if (!(lambda > 0.0 && lambda < 1.0))
        throw std::invalid_argument("mix_experiments: lambda must be in (0,1)");
    if (e1.params() != e2.params())
        throw std::invalid_argument("mix_experiments: parameter sets differ");
    const int d1 = e1.dim(), d2 = e2.dim();
    std::vector<DensityMatrix> states;
    for (int t = 0; t < e1.num_params(); ++t) {
        CMat m(d1 + d2);
        const CMat& a = e1.state(t).matrix();
        const CMat& b = e2.state(t).matrix();
        for (int i = 0; i < d1; ++i)
            for (int j = 0; j < d1; ++j) m(i, j) = lambda * a(i, j);
        for (int i = 0; i < d2; ++i)
            for (int j = 0; j < d2; ++j) m(d1 + i, d1 + j) = (1.0 - lambda) * b(i, j);
        states.emplace_back(std::move(m));
    }
    return Experiment(e1.params(), std::move(states), e1.base_index());
}

namespace {

// Gram-Schmidt in the Hilbert-Schmidt inner product; returns the residual
// norm of a after projecting onto the orthonormal set.
CMat hs_project_residual(std::span<const CMat> onb, const CMat& a) {
    CMat r = a;
    for (const CMat& b : onb) r -= hs_inner(b, r) * b;
    return r;
}

bool in_span(std::span<const CMat> onb, const CMat& a, double rel_tol, double* res_out) {
    const double na = hs_norm(a);
    const double res = hs_norm(hs_project_residual(onb, a)) / std::max(na, 1e-30);
    if (res_out) *res_out = res;
    return res < rel_tol;
}

std::vector<CMat> orthonormalize(std::span<const CMat> gens, double rank_tol) {
    std::vector<CMat> onb;
    for (const CMat& g : gens) {
        CMat r = hs_project_residual(onb, g);
        const double n = hs_norm(r);
        if (n > rank_tol * std::max(1.0, hs_norm(g))) onb.push_back((1.0 / n) * r);
    }
    return onb;
}

}  // namespace

std::vector<double> default_t_grid() { return {0.5, -0.5, 1.0, -1.0, 1.7, -1.7, 2.3, -2.3}; }

SufficiencyResult is_sufficient_subalgebra(const Experiment& e, std::span<const CMat> basis,
                                           std::span<const double> t_grid,
                                           const QuantumTolerances& tol) {
    if (basis.empty()) throw std::invalid_argument("is_sufficient_subalgebra: empty basis");
    const auto onb = orthonormalize(basis, tol.closure_rank);
    // validation: the span must contain the unit and be *-closed
    double res;
    if (!in_span(onb, CMat::identity(e.dim()), tol.sufficiency, &res))
        throw std::invalid_argument("is_sufficient_subalgebra: span does not contain the unit");
    for (const CMat& b : basis)
        if (!in_span(onb, b.adjoint(), tol.sufficiency, &res))
            throw std::invalid_argument("is_sufficient_subalgebra: span is not *-closed");

    SufficiencyResult out{true, 0.0};
    for (int theta = 0; theta < e.num_params(); ++theta) {
        if (theta == e.base_index()) continue;
        for (double t : t_grid) {
            in_span(onb, connes_cocycle(e, theta, t), tol.sufficiency, &res);
            out.max_residual = std::max(out.max_residual, res);
        }
    }
    out.sufficient = out.max_residual < tol.sufficiency;
    return out;
}

MinimalBasis minimal_sufficient_basis(const Experiment& e, std::span<const double> t_grid,
                                      const QuantumTolerances& tol) {
    if (t_grid.empty()) throw std::invalid_argument("minimal_sufficient_basis: empty t grid");
    std::vector<CMat> gens{CMat::identity(e.dim())};
    for (int theta = 0; theta < e.num_params(); ++theta) {
        if (theta == e.base_index()) continue;
        for (double t : t_grid) {
            CMat c = connes_cocycle(e, theta, t);
            gens.push_back(c.adjoint());
            gens.push_back(std::move(c));
        }
    }
    std::vector<CMat> onb = orthonormalize(gens, tol.closure_rank);

    const int d2 = e.dim() * e.dim();
    const int max_rounds = d2 + 5;  // span dimension is monotone and capped by d^2
    for (int round = 0; round < max_rounds; ++round) {
        const size_t before = onb.size();
        const std::vector<CMat> snapshot = onb;
        for (const CMat& a : snapshot) {
            for (const CMat& b : snapshot) {
                CMat p = a * b;
                CMat r = hs_project_residual(onb, p);
                const double n = hs_norm(r);
                if (n > tol.closure_rank) onb.push_back((1.0 / n) * r);
                if (static_cast<int>(onb.size()) == d2) break;
            }
            if (static_cast<int>(onb.size()) == d2) break;
        }
        if (onb.size() == before || static_cast<int>(onb.size()) == d2) break;
    }
    return MinimalBasis{std::move(onb)};
}

namespace {

CMat compress_block(const CMat& m, const FactorBlock& b) {
    const int n = b.left_dim * b.right_dim;
    CMat out(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) out(i, j) = m(b.offset + i, b.offset + j);
    return out;
}

}  // namespace

FactorizationResult factorization_check(const Experiment& e, std::span<const FactorBlock> blocks,
                                        double tol) {
    int covered = 0;
    for (const auto& b : blocks) {
        if (b.offset < 0 || b.left_dim < 1 || b.right_dim < 1 ||
            b.offset + b.left_dim * b.right_dim > e.dim())
            throw std::invalid_argument("factorization_check: invalid block");
        covered += b.left_dim * b.right_dim;
    }
    if (covered != e.dim())
        throw std::invalid_argument("factorization_check: blocks must partition the space");

    // theta-independent right factors extracted at the base point
    std::vector<CMat> right;
    for (const auto& b : blocks) {
        CMat blk = compress_block(e.base_state().matrix(), b);
        const double w = blk.trace().real();
        if (w <= 0.0) throw std::invalid_argument("factorization_check: vanishing block weight");
        right.push_back(partial_trace_left((1.0 / w) * blk, b.left_dim, b.right_dim));
    }

    double worst = 0.0;
    for (int theta = 0; theta < e.num_params(); ++theta) {
        const CMat& rho = e.state(theta).matrix();
        // off-block mass
        CMat blocked(e.dim());
        for (const auto& b : blocks) {
            const int n = b.left_dim * b.right_dim;
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    blocked(b.offset + i, b.offset + j) = rho(b.offset + i, b.offset + j);
        }
        worst = std::max(worst, hs_norm(rho - blocked));
        for (size_t k = 0; k < blocks.size(); ++k) {
            const auto& b = blocks[k];
            CMat blk = compress_block(rho, b);
            const double w = blk.trace().real();
            if (w <= 0.0) {
                worst = std::max(worst, 1.0);
                continue;
            }
            blk *= 1.0 / w;
            const CMat left = partial_trace_right(blk, b.left_dim, b.right_dim);
            worst = std::max(worst, hs_norm(blk - kron(left, right[k])));
        }
    }
    return FactorizationResult{worst < tol, worst};
}

double equivalence_probe(const Experiment& e, const Experiment& f,
                         std::span<const GroupWord> words) {
    if (e.params() != f.params())
        throw std::invalid_argument("equivalence_probe: parameter sets differ");
    double worst = 0.0;
    for (const auto& g : words)
        worst = std::max(worst, std::abs(canonical_state(e, g) - canonical_state(f, g)));
    return worst;
}

}  // namespace qlab::quantum

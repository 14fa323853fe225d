#include "qlab/classical.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "qlab/matrix.hpp"
#include "qlab/simplex.hpp"

namespace qlab::classical {

ClassicalTolerances& classical_tolerances() {
    static ClassicalTolerances tol;
    return tol;
}

namespace {

void validate_rows(const std::vector<std::string>& params,
                   const std::vector<std::vector<double>>& probs,
                   const ClassicalTolerances& tol) {
    if (params.empty() || probs.size() != params.size())
        throw std::invalid_argument("Experiment: parameter/row count mismatch");
    const size_t omega = probs.front().size();
    if (omega == 0) throw std::invalid_argument("Experiment: empty sample space");
    for (const auto& row : probs) {
        if (row.size() != omega) throw std::invalid_argument("Experiment: ragged rows");
        double s = 0.0;
        for (double p : row) {
            if (!(p >= 0.0)) throw std::invalid_argument("Experiment: negative probability");
            s += p;
        }
        if (std::abs(s - 1.0) > tol.row_sum)
            throw std::invalid_argument("Experiment: row does not sum to 1");
    }
}

}  // namespace

Experiment::Experiment(std::vector<std::string> params, std::vector<std::vector<double>> probs,
                       const ClassicalTolerances& tol)
    : params_(std::move(params)), probs_(std::move(probs)) {
    validate_rows(params_, probs_, tol);
    // class E(Theta): for each outcome, all rows positive or all zero
    for (int w = 0; w < num_outcomes(); ++w) {
        bool any = false, all = true;
        for (const auto& row : probs_) {
            if (row[w] > 0.0)
                any = true;
            else
                all = false;
        }
        if (any && !all)
            throw std::invalid_argument(
                "Experiment: rows are not mutually absolutely continuous (outcome " +
                std::to_string(w) + ")");
    }
}

Experiment Experiment::unrestricted(std::vector<std::string> params,
                                    std::vector<std::vector<double>> probs,
                                    const ClassicalTolerances& tol) {
    validate_rows(params, probs, tol);
    Experiment e;
    e.params_ = std::move(params);
    e.probs_ = std::move(probs);
    return e;
}

Experiment Experiment::product(const Experiment& a, const Experiment& b) {
    if (a.params_ != b.params_) throw std::invalid_argument("product: parameter sets differ");
    std::vector<std::vector<double>> rows(a.num_params());
    for (int t = 0; t < a.num_params(); ++t) {
        rows[t].reserve(static_cast<size_t>(a.num_outcomes()) * b.num_outcomes());
        for (double pa : a.probs_[t])
            for (double pb : b.probs_[t]) rows[t].push_back(pa * pb);
    }
    return Experiment(a.params_, std::move(rows));
}

SimplexPoint::SimplexPoint(std::vector<double> coords) : z(std::move(coords)) {
    double s = 0.0;
    for (double v : z) {
        if (!(v >= 0.0)) throw std::invalid_argument("SimplexPoint: negative coordinate");
        s += v;
    }
    if (std::abs(s - 1.0) > classical_tolerances().row_sum)
        throw std::invalid_argument("SimplexPoint: coordinates do not sum to 1");
}

double CanonicalMeasure::total_mass() const {
    double s = 0.0;
    for (const auto& a : atoms) s += a.mass;
    return s;
}

CanonicalMeasure canonical_measure(const Experiment& e, const ClassicalTolerances& tol) {
    const int np = e.num_params();
    std::vector<CanonicalMeasure::Atom> atoms;
    for (int w = 0; w < e.num_outcomes(); ++w) {
        double mu = 0.0;
        for (int t = 0; t < np; ++t) mu += e.row(t)[w];
        if (mu == 0.0) continue;  // outside the joint support
        CanonicalMeasure::Atom a;
        a.mass = mu;
        a.v.resize(np);
        for (int t = 0; t < np; ++t) a.v[t] = e.row(t)[w] / mu;
        atoms.push_back(std::move(a));
    }
    if (atoms.empty()) throw std::invalid_argument("canonical_measure: zero-support experiment");

    std::sort(atoms.begin(), atoms.end(),
              [](const auto& a, const auto& b) { return a.v < b.v; });
    CanonicalMeasure out;
    for (auto& a : atoms) {
        if (!out.atoms.empty()) {
            auto& last = out.atoms.back();
            bool same = true;
            for (int t = 0; t < np; ++t)
                if (std::abs(last.v[t] - a.v[t]) > tol.atom_merge) {
                    same = false;
                    break;
                }
            if (same) {
                last.mass += a.mass;
                continue;
            }
        }
        out.atoms.push_back(std::move(a));
    }
    return out;
}

namespace {

double clamp01(double x) { return std::min(1.0, std::max(0.0, x)); }

// prod v_i^{z_i} with the 0^0 = 1 convention at simplex vertices
double weighted_geometric(std::span<const double> v, std::span<const double> z) {
    double r = 1.0;
    for (size_t i = 0; i < v.size(); ++i) {
        if (z[i] == 0.0) continue;
        if (v[i] == 0.0) return 0.0;
        r *= std::pow(v[i], z[i]);
    }
    return r;
}

}  // namespace

double hellinger_transform(const Experiment& e, const SimplexPoint& z) {
    if (static_cast<int>(z.z.size()) != e.num_params())
        throw std::invalid_argument("hellinger_transform: z dimension mismatch");
    double s = 0.0;
    std::vector<double> v(e.num_params());
    for (int w = 0; w < e.num_outcomes(); ++w) {
        for (int t = 0; t < e.num_params(); ++t) v[t] = e.row(t)[w];
        s += weighted_geometric(v, z.z);
    }
    return clamp01(s);
}

double hellinger_transform(const CanonicalMeasure& m, const SimplexPoint& z) {
    double s = 0.0;
    for (const auto& a : m.atoms) s += a.mass * weighted_geometric(a.v, z.z);
    return clamp01(s);
}

double hellinger_distance(std::span<const double> p1, std::span<const double> p2) {
    if (p1.size() != p2.size()) throw std::invalid_argument("hellinger_distance: size mismatch");
    double s = 0.0;
    for (size_t w = 0; w < p1.size(); ++w) {
        const double d = std::sqrt(p1[w]) - std::sqrt(p2[w]);
        s += d * d;
    }
    return s;
}

Experiment binomial_experiment(int n, std::span<const double> thetas) {
    if (n < 1) throw std::invalid_argument("binomial_experiment: n must be positive");
    std::vector<std::string> params;
    std::vector<std::vector<double>> rows;
    for (double th : thetas) {
        const double p = th / n;
        if (!(p > 0.0 && p < 1.0))
            throw std::invalid_argument("binomial_experiment: theta/n outside (0,1)");
        std::vector<double> row(n + 1);
        for (int k = 0; k <= n; ++k) {
            const double lg = std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
            row[k] = std::exp(lg + k * std::log(p) + (n - k) * std::log1p(-p));
        }
        params.push_back("theta=" + std::to_string(th));
        rows.push_back(std::move(row));
    }
    return Experiment(std::move(params), std::move(rows));
}

double binomial_hellinger(double n, std::span<const double> thetas, const SimplexPoint& z) {
    if (thetas.size() != z.z.size())
        throw std::invalid_argument("binomial_hellinger: dimension mismatch");
    double succ = 1.0, fail = 1.0;
    for (size_t i = 0; i < thetas.size(); ++i) {
        succ *= std::pow(thetas[i] / n, z.z[i]);
        fail *= std::pow(1.0 - thetas[i] / n, z.z[i]);
    }
    return std::exp(n * std::log(succ + fail));
}

double poisson_limit_hellinger(std::span<const double> thetas, const SimplexPoint& z) {
    if (thetas.size() != z.z.size())
        throw std::invalid_argument("poisson_limit_hellinger: dimension mismatch");
    double geo = 1.0, lin = 0.0;
    for (size_t i = 0; i < thetas.size(); ++i) {
        if (!(thetas[i] > 0.0)) throw std::invalid_argument("poisson_limit: theta must be > 0");
        geo *= std::pow(thetas[i], z.z[i]);
        lin += thetas[i] * z.z[i];
    }
    return std::exp(geo - lin);
}

Experiment poisson_experiment(std::span<const double> thetas, int* k_out,
                              const ClassicalTolerances& tol) {
    const double theta_max = *std::max_element(thetas.begin(), thetas.end());
    // truncation point: grow K until every row's tail mass is < tolerance
    int k = static_cast<int>(theta_max) + 1;
    auto tail = [&](double th, int kk) {
        // 1 - CDF via the complement of the partial sums
        double s = 0.0, term = std::exp(-th);
        for (int i = 0; i <= kk; ++i) {
            s += term;
            term *= th / (i + 1);
        }
        return 1.0 - s;
    };
    while (tail(theta_max, k) >= tol.poisson_tail) ++k;
    if (k_out) *k_out = k;

    std::vector<std::string> params;
    std::vector<std::vector<double>> rows;
    for (double th : thetas) {
        std::vector<double> row(k + 1);
        double term = std::exp(-th);
        for (int i = 0; i <= k; ++i) {
            row[i] = term;
            term *= th / (i + 1);
        }
        // fold the residual tail into the last outcome to keep the row exact
        double s = std::accumulate(row.begin(), row.end(), 0.0);
        row[k] += 1.0 - s;
        params.push_back("theta=" + std::to_string(th));
        rows.push_back(std::move(row));
    }
    return Experiment(std::move(params), std::move(rows));
}

FisherMatrix::FisherMatrix(std::vector<std::vector<double>> entries) : m(std::move(entries)) {
    const size_t n = m.size();
    for (const auto& row : m)
        if (row.size() != n) throw std::invalid_argument("FisherMatrix: not square");
    for (size_t i = 0; i < n; ++i)
        for (size_t j = i + 1; j < n; ++j)
            if (std::abs(m[i][j] - m[j][i]) > 1e-12)
                throw std::invalid_argument("FisherMatrix: not symmetric");
    CMat h(static_cast<int>(n));
    for (size_t i = 0; i < n; ++i)
        for (size_t j = 0; j < n; ++j) h(static_cast<int>(i), static_cast<int>(j)) = m[i][j];
    if (eig_hermitian(h).eigenvalues.back() < -1e-10)
        throw std::invalid_argument("FisherMatrix: not positive semidefinite");
}

namespace {

double quad_form(const FisherMatrix& f, std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (int i = 0; i < f.size(); ++i)
        for (int j = 0; j < f.size(); ++j) s += a[i] * f.m[i][j] * b[j];
    return s;
}

}  // namespace

double gaussian_shift_hellinger(std::span<const std::vector<double>> shifts,
                                const FisherMatrix& fisher, const SimplexPoint& z) {
    if (shifts.size() != z.z.size())
        throw std::invalid_argument("gaussian_shift_hellinger: shift/z mismatch");
    const int m = fisher.size();
    std::vector<double> ubar(m, 0.0);
    double quad = 0.0;
    for (size_t i = 0; i < shifts.size(); ++i) {
        if (static_cast<int>(shifts[i].size()) != m)
            throw std::invalid_argument("gaussian_shift_hellinger: shift dimension mismatch");
        quad += z.z[i] * quad_form(fisher, shifts[i], shifts[i]);
        for (int k = 0; k < m; ++k) ubar[k] += z.z[i] * shifts[i][k];
    }
    return std::exp(-0.5 * (quad - quad_form(fisher, ubar, ubar)));
}

ConvergenceTable weak_convergence_report(const EtaEvaluator& eta_n, const LimitEvaluator& limit,
                                         std::span<const SimplexPoint> z_grid,
                                         std::span<const double> n_schedule) {
    ConvergenceTable t;
    t.ns.assign(n_schedule.begin(), n_schedule.end());
    t.zs.assign(z_grid.begin(), z_grid.end());
    for (const auto& z : z_grid) t.eta_limit.push_back(limit(z));
    for (double n : n_schedule) {
        std::vector<double> row, grow;
        for (size_t i = 0; i < z_grid.size(); ++i) {
            const double v = eta_n(n, z_grid[i]);
            row.push_back(v);
            grow.push_back(std::abs(v - t.eta_limit[i]));
        }
        t.eta_n.push_back(std::move(row));
        t.gaps.push_back(std::move(grow));
    }
    // worst-z gap per n for monotonicity and slope
    std::vector<double> worst;
    for (const auto& g : t.gaps) worst.push_back(*std::max_element(g.begin(), g.end()));
    for (size_t i = 1; i < worst.size(); ++i)
        if (worst[i] > worst[i - 1] + 1e-15) t.monotone = false;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int cnt = 0;
    for (size_t i = 0; i < worst.size(); ++i) {
        if (worst[i] <= 1e-13) continue;
        const double x = std::log(t.ns[i]), y = std::log(worst[i]);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++cnt;
    }
    t.slope = cnt >= 2 ? (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx) : 0.0;
    return t;
}

DeficiencyResult deficiency_lp(const Experiment& e1, const Experiment& e2,
                               const ClassicalTolerances& tol) {
    if (e1.params() != e2.params())
        throw std::invalid_argument("deficiency_lp: parameter sets differ");
    const int n1 = e1.num_outcomes();
    const int n2 = e2.num_outcomes();
    const int nt = e1.num_params();
    if (n1 * n2 > tol.deficiency_size_limit)
        throw std::invalid_argument("deficiency_lp: problem size exceeds guard");

    // variables: M[i][j] (n1*n2), s[theta][j] (nt*n2), t (1)
    const int nm = n1 * n2;
    const int ns = nt * n2;
    const int nv = nm + ns + 1;
    const int tvar = nm + ns;
    auto mvar = [&](int i, int j) { return i * n2 + j; };
    auto svar = [&](int th, int j) { return nm + th * n2 + j; };

    SimplexSolver lp(nv);
    for (int i = 0; i < n1; ++i) {  // rows of M are probability vectors
        std::vector<double> row(nv, 0.0);
        for (int j = 0; j < n2; ++j) row[mvar(i, j)] = 1.0;
        lp.add_equality(std::move(row), 1.0);
    }
    for (int th = 0; th < nt; ++th) {
        for (int j = 0; j < n2; ++j) {
            // |(P1_th M)_j - P2_th(j)| <= s_th(j)
            std::vector<double> pos(nv, 0.0), neg(nv, 0.0);
            for (int i = 0; i < n1; ++i) {
                pos[mvar(i, j)] = e1.row(th)[i];
                neg[mvar(i, j)] = -e1.row(th)[i];
            }
            pos[svar(th, j)] = -1.0;
            neg[svar(th, j)] = -1.0;
            lp.add_less_equal(std::move(pos), e2.row(th)[j]);
            lp.add_less_equal(std::move(neg), -e2.row(th)[j]);
        }
        // 1/2 sum_j s_th(j) <= t
        std::vector<double> cap(nv, 0.0);
        for (int j = 0; j < n2; ++j) cap[svar(th, j)] = 0.5;
        cap[tvar] = -1.0;
        lp.add_less_equal(std::move(cap), 0.0);
    }
    std::vector<double> obj(nv, 0.0);
    obj[tvar] = 1.0;
    lp.set_objective(std::move(obj));

    const auto sol = lp.solve();
    // infeasibility is impossible (any stochastic M is feasible); flag solver bugs
    if (!sol.feasible || !sol.bounded)
        throw std::runtime_error("deficiency_lp: simplex failed on a feasible program");
    DeficiencyResult res;
    res.delta = std::max(0.0, sol.objective);
    res.kernel.assign(n1, std::vector<double>(n2, 0.0));
    for (int i = 0; i < n1; ++i)
        for (int j = 0; j < n2; ++j) res.kernel[i][j] = sol.x[mvar(i, j)];
    return res;
}

double le_cam_distance(const Experiment& e1, const Experiment& e2,
                       const ClassicalTolerances& tol) {
    return std::max(deficiency_lp(e1, e2, tol).delta, deficiency_lp(e2, e1, tol).delta);
}

cplx loglik_char(const Experiment& e, int base_theta, std::span<const LoglikLetter> letters) {
    if (base_theta < 0 || base_theta >= e.num_params())
        throw std::invalid_argument("loglik_char: bad base index");
    cplx total = 0.0;
    for (int w = 0; w < e.num_outcomes(); ++w) {
        const double pb = e.row(base_theta)[w];
        if (pb == 0.0) continue;
        cplx factor = pb;
        for (const auto& l : letters) {
            const double ratio = e.row(l.theta)[w] / pb;
            const double t = l.inverse ? -l.t : l.t;
            factor *= std::exp(cplx(0.0, t * std::log(ratio)));
        }
        total += factor;
    }
    return total;
}

std::string to_csv(const Experiment& e) {
    std::string out;
    char buf[40];
    for (int t = 0; t < e.num_params(); ++t) {
        out += e.params()[t];
        for (double p : e.row(t)) {
            std::snprintf(buf, sizeof(buf), ",%.17g", p);
            out += buf;
        }
        out += '\n';
    }
    return out;
}

Experiment experiment_from_csv(const std::string& text, bool unrestricted) {
    std::vector<std::string> labels;
    std::vector<std::vector<double>> rows;
    size_t pos = 0;
    while (pos < text.size()) {
        size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        const std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        if (line.empty()) continue;
        size_t comma = line.find(',');
        if (comma == std::string::npos)
            throw std::invalid_argument("experiment_from_csv: line without probabilities");
        labels.push_back(line.substr(0, comma));
        std::vector<double> row;
        size_t at = comma + 1;
        while (at <= line.size()) {
            size_t next = line.find(',', at);
            if (next == std::string::npos) next = line.size();
            row.push_back(std::stod(line.substr(at, next - at)));
            at = next + 1;
        }
        rows.push_back(std::move(row));
    }
    return unrestricted ? Experiment::unrestricted(std::move(labels), std::move(rows))
                        : Experiment(std::move(labels), std::move(rows));
}

FisherMatrix fisher_information(std::span<const double> p0,
                                std::span<const std::vector<double>> scores) {
    const int m = static_cast<int>(scores.size());
    std::vector<std::vector<double>> f(m, std::vector<double>(m, 0.0));
    for (int k = 0; k < m; ++k)
        for (int l = 0; l < m; ++l)
            for (size_t w = 0; w < p0.size(); ++w) {
                if (p0[w] <= 0.0) throw std::invalid_argument("fisher_information: zero mass");
                f[k][l] += scores[k][w] * scores[l][w] / p0[w];
            }
    // exact symmetrization against rounding
    for (int k = 0; k < m; ++k)
        for (int l = k + 1; l < m; ++l) f[k][l] = f[l][k] = 0.5 * (f[k][l] + f[l][k]);
    return FisherMatrix(std::move(f));
}

}  // namespace qlab::classical

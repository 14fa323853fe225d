#include "qlab/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qlab {

MatrixTolerances& matrix_tolerances() {
    static MatrixTolerances tol;
    return tol;
}

CMat::CMat(int dim, std::vector<cplx> entries) : dim_(dim), a_(std::move(entries)) {
    if (a_.size() != static_cast<size_t>(dim) * dim)
        throw std::invalid_argument("CMat: entry count does not match dimension");
    for (const cplx& v : a_)
        if (!std::isfinite(v.real()) || !std::isfinite(v.imag()))
            throw std::invalid_argument("CMat: non-finite entry");
}

CMat CMat::identity(int dim) {
    CMat m(dim);
    for (int i = 0; i < dim; ++i) m(i, i) = 1.0;
    return m;
}

CMat CMat::diagonal(std::span<const double> d) {
    CMat m(static_cast<int>(d.size()));
    for (int i = 0; i < m.dim(); ++i) m(i, i) = d[i];
    return m;
}

CMat CMat::diagonal(std::span<const cplx> d) {
    CMat m(static_cast<int>(d.size()));
    for (int i = 0; i < m.dim(); ++i) m(i, i) = d[i];
    return m;
}

CMat CMat::adjoint() const {
    CMat r(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) r(j, i) = std::conj((*this)(i, j));
    return r;
}

CMat CMat::transpose() const {
    CMat r(dim_);
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j) r(j, i) = (*this)(i, j);
    return r;
}

cplx CMat::trace() const {
    cplx t = 0.0;
    for (int i = 0; i < dim_; ++i) t += (*this)(i, i);
    return t;
}

double CMat::frobenius_norm() const {
    double s = 0.0;
    for (const cplx& v : a_) s += std::norm(v);
    return std::sqrt(s);
}

double CMat::max_abs() const {
    double m = 0.0;
    for (const cplx& v : a_) m = std::max(m, std::abs(v));
    return m;
}

CMat& CMat::operator+=(const CMat& o) {
    if (o.dim_ != dim_) throw std::invalid_argument("CMat: dimension mismatch");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
}

CMat& CMat::operator-=(const CMat& o) {
    if (o.dim_ != dim_) throw std::invalid_argument("CMat: dimension mismatch");
    for (size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
}

CMat& CMat::operator*=(cplx s) {
    for (cplx& v : a_) v *= s;
    return *this;
}

CMat operator*(const CMat& a, const CMat& b) {
    if (a.dim_ != b.dim_) throw std::invalid_argument("CMat: dimension mismatch");
    const int n = a.dim_;
    CMat r(n);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k) {
            const cplx aik = a(i, k);
            if (aik == cplx{}) continue;
            for (int j = 0; j < n; ++j) r(i, j) += aik * b(k, j);
        }
    return r;
}

double CMat::hermiticity_defect() const {
    double m = 0.0;
    for (int i = 0; i < dim_; ++i)
        for (int j = i; j < dim_; ++j)
            m = std::max(m, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return m;
}

bool CMat::is_hermitian(double tol) const { return hermiticity_defect() <= tol; }

CMat commutator(const CMat& a, const CMat& b) { return a * b - b * a; }

CMat jordan_product(const CMat& a, const CMat& b) { return 0.5 * (a * b + b * a); }

cplx hs_inner(const CMat& a, const CMat& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("hs_inner: dimension mismatch");
    cplx s = 0.0;
    const auto da = a.data();
    const auto db = b.data();
    for (size_t i = 0; i < da.size(); ++i) s += std::conj(da[i]) * db[i];
    return s;
}

double hs_norm(const CMat& a) { return a.frobenius_norm(); }

CMat kron(const CMat& a, const CMat& b) {
    const int na = a.dim(), nb = b.dim();
    CMat r(na * nb);
    for (int i = 0; i < na; ++i)
        for (int j = 0; j < na; ++j) {
            const cplx aij = a(i, j);
            if (aij == cplx{}) continue;
            for (int k = 0; k < nb; ++k)
                for (int l = 0; l < nb; ++l) r(i * nb + k, j * nb + l) = aij * b(k, l);
        }
    return r;
}

CMat kron_power(const CMat& a, int n) {
    if (n < 1) throw std::invalid_argument("kron_power: n must be >= 1");
    CMat r = a;
    for (int i = 1; i < n; ++i) r = kron(r, a);
    return r;
}

CMat partial_trace_left(const CMat& m, int dl, int dr) {
    if (m.dim() != dl * dr) throw std::invalid_argument("partial_trace: block dims mismatch");
    CMat r(dr);
    for (int k = 0; k < dr; ++k)
        for (int l = 0; l < dr; ++l)
            for (int i = 0; i < dl; ++i) r(k, l) += m(i * dr + k, i * dr + l);
    return r;
}

CMat partial_trace_right(const CMat& m, int dl, int dr) {
    if (m.dim() != dl * dr) throw std::invalid_argument("partial_trace: block dims mismatch");
    CMat r(dl);
    for (int i = 0; i < dl; ++i)
        for (int j = 0; j < dl; ++j)
            for (int k = 0; k < dr; ++k) r(i, j) += m(i * dr + k, j * dr + k);
    return r;
}

namespace {

double offdiag_norm(const CMat& a) {
    double s = 0.0;
    for (int i = 0; i < a.dim(); ++i)
        for (int j = 0; j < a.dim(); ++j)
            if (i != j) s += std::norm(a(i, j));
    return std::sqrt(s);
}

// One complex Jacobi rotation zeroing (p,q). Updates a (in place, Hermitian)
// and accumulates the rotation into v's columns.
void jacobi_rotate(CMat& a, CMat& v, int p, int q) {
    const cplx apq = a(p, q);
    const double r = std::abs(apq);
    if (r == 0.0) return;
    const cplx phase = apq / r;  // apq = r * phase
    const double app = a(p, p).real();
    const double aqq = a(q, q).real();

    double t;  // tan(theta), smaller root for stability
    if (app == aqq) {
        t = 1.0;
    } else {
        const double tau = (app - aqq) / (2.0 * r);
        t = (tau >= 0 ? 1.0 : -1.0) / (std::abs(tau) + std::sqrt(1.0 + tau * tau));
    }
    const double c = 1.0 / std::sqrt(1.0 + t * t);
    const double s = t * c;
    const cplx spq = s * phase;         // J(p,q) column entry uses -s*phase
    const int n = a.dim();

    // A <- J* A J with J acting on the (p,q) plane:
    //   J[p][p]=c, J[p][q]=-s*phase, J[q][p]=s*conj(phase), J[q][q]=c
    for (int k = 0; k < n; ++k) {  // columns: A <- A J
        const cplx akp = a(k, p), akq = a(k, q);
        a(k, p) = c * akp + std::conj(spq) * akq;
        a(k, q) = -spq * akp + c * akq;
    }
    for (int k = 0; k < n; ++k) {  // rows: A <- J* A
        const cplx apk = a(p, k), aqk = a(q, k);
        a(p, k) = c * apk + spq * aqk;
        a(q, k) = -std::conj(spq) * apk + c * aqk;
    }
    a(p, q) = 0.0;
    a(q, p) = 0.0;
    a(p, p) = cplx(a(p, p).real(), 0.0);
    a(q, q) = cplx(a(q, q).real(), 0.0);
    for (int k = 0; k < n; ++k) {  // eigenvector columns
        const cplx vkp = v(k, p), vkq = v(k, q);
        v(k, p) = c * vkp + std::conj(spq) * vkq;
        v(k, q) = -spq * vkp + c * vkq;
    }
}

// Make the first component with |v_i| above threshold real positive.
void fix_column_phase(CMat& u, int col) {
    const int n = u.dim();
    for (int i = 0; i < n; ++i) {
        const double m = std::abs(u(i, col));
        if (m > 1e-12) {
            const cplx ph = std::conj(u(i, col)) / m;
            for (int k = 0; k < n; ++k) u(k, col) *= ph;
            return;
        }
    }
}

bool column_less(const CMat& u, int a, int b) {
    for (int i = 0; i < u.dim(); ++i) {
        const cplx x = u(i, a), y = u(i, b);
        if (std::abs(x.real() - y.real()) > 1e-12) return x.real() < y.real();
        if (std::abs(x.imag() - y.imag()) > 1e-12) return x.imag() < y.imag();
    }
    return false;
}

}  // namespace

SpectralDecomposition eig_hermitian(const CMat& h, const MatrixTolerances& tol) {
    if (h.dim() == 0) throw std::invalid_argument("eig_hermitian: empty matrix");
    if (!h.is_hermitian(tol.hermitian))
        throw std::invalid_argument("eig_hermitian: input is not Hermitian (defect " +
                                    std::to_string(h.hermiticity_defect()) + ")");
    const int n = h.dim();
    CMat a = h;
    // symmetrize exactly so rounding in the input cannot bias the sweep
    for (int i = 0; i < n; ++i) {
        for (int j = i + 1; j < n; ++j) {
            const cplx m = 0.5 * (a(i, j) + std::conj(a(j, i)));
            a(i, j) = m;
            a(j, i) = std::conj(m);
        }
        a(i, i) = cplx(a(i, i).real(), 0.0);
    }
    CMat v = CMat::identity(n);
    const double scale = std::max(1.0, a.frobenius_norm());
    const double target = tol.jacobi_offdiag * scale;

    bool converged = (n == 1) || offdiag_norm(a) <= target;
    for (int sweep = 0; sweep < tol.jacobi_max_sweeps && !converged; ++sweep) {
        for (int p = 0; p < n - 1; ++p)
            for (int q = p + 1; q < n; ++q)
                if (std::abs(a(p, q)) > target / (n * n)) jacobi_rotate(a, v, p, q);
        converged = offdiag_norm(a) <= target;
    }
    if (!converged) throw NumericalError("eig_hermitian: Jacobi sweeps did not converge");

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int i, int j) { return a(i, i).real() > a(j, j).real(); });

    SpectralDecomposition out;
    out.eigenvalues.resize(n);
    out.vectors = CMat(n);
    for (int c = 0; c < n; ++c) {
        out.eigenvalues[c] = a(order[c], order[c]).real();
        for (int r = 0; r < n; ++r) out.vectors(r, c) = v(r, order[c]);
        fix_column_phase(out.vectors, c);
    }
    // deterministic order inside eigenvalue clusters
    for (auto [b, e] : out.clusters(tol.eig_cluster)) {
        for (int i = b; i < e - 1; ++i)
            for (int j = b; j < e - 1 - (i - b); ++j)
                if (column_less(out.vectors, j + 1, j)) {
                    std::swap(out.eigenvalues[j], out.eigenvalues[j + 1]);
                    for (int r = 0; r < n; ++r) std::swap(out.vectors(r, j), out.vectors(r, j + 1));
                }
    }
    return out;
}

CMat SpectralDecomposition::apply(const std::function<cplx(double)>& f) const {
    const int n = vectors.dim();
    std::vector<cplx> fd(n);
    for (int i = 0; i < n; ++i) fd[i] = f(eigenvalues[i]);
    CMat r(n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            cplx s = 0.0;
            for (int k = 0; k < n; ++k) s += vectors(i, k) * fd[k] * std::conj(vectors(j, k));
            r(i, j) = s;
        }
    return r;
}

CMat SpectralDecomposition::reconstruct() const {
    return apply([](double x) { return cplx(x, 0.0); });
}

std::vector<std::pair<int, int>> SpectralDecomposition::clusters(double tol) const {
    std::vector<std::pair<int, int>> out;
    const int n = static_cast<int>(eigenvalues.size());
    int b = 0;
    for (int i = 1; i <= n; ++i) {
        if (i == n || std::abs(eigenvalues[i] - eigenvalues[i - 1]) > tol) {
            out.emplace_back(b, i);
            b = i;
        }
    }
    return out;
}

DensityMatrix::DensityMatrix(CMat m, const MatrixTolerances& tol) : m_(std::move(m)) {
    if (m_.hermiticity_defect() > tol.density_hermitian)
        throw std::invalid_argument("DensityMatrix: not Hermitian");
    if (std::abs(m_.trace() - 1.0) > tol.density_trace)
        throw std::invalid_argument("DensityMatrix: trace != 1");
    spec_ = eig_hermitian(m_, tol);
    if (spec_.eigenvalues.back() <= 0.0)
        throw std::invalid_argument("DensityMatrix: state is not faithful (eigenvalue " +
                                    std::to_string(spec_.eigenvalues.back()) + ")");
}

CMat DensityMatrix::power(cplx z) const {
    for (double lam : spec_.eigenvalues)
        if (lam <= 0.0) throw NumericalError("matrix_power: non-positive eigenvalue");
    if (z == cplx{}) return CMat::identity(dim());
    return spec_.apply([z](double lam) { return std::exp(z * std::log(lam)); });
}

CMat DensityMatrix::log() const {
    return spec_.apply([](double lam) {
        if (lam <= 0.0) throw NumericalError("matrix_log: non-positive eigenvalue");
        return cplx(std::log(lam), 0.0);
    });
}

cplx DensityMatrix::expect(const CMat& a) const {
    if (a.dim() != dim()) throw std::invalid_argument("expect: dimension mismatch");
    cplx s = 0.0;
    for (int i = 0; i < dim(); ++i)
        for (int k = 0; k < dim(); ++k) s += m_(i, k) * a(k, i);
    return s;
}

CMat matrix_power(const DensityMatrix& rho, cplx z) { return rho.power(z); }

CMat matrix_log(const DensityMatrix& rho) { return rho.log(); }

double rho_inner(const DensityMatrix& rho, const CMat& a, const CMat& b) {
    if (!a.is_hermitian() || !b.is_hermitian())
        throw std::invalid_argument("rho_inner: arguments must be Hermitian");
    const cplx v = rho.expect(jordan_product(a, b));
    return v.real();
}

CMat unitary_exp(const CMat& h) {
    const auto spec = eig_hermitian(h);
    return spec.apply([](double x) { return std::exp(cplx(0.0, x)); });
}

}  // namespace qlab

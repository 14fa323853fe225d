#pragma once

#include <complex>
#include <functional>
#include <span>
#include <string>
#include <vector>

namespace qlab {

using cplx = std::complex<double>;

/// Numerical tolerances used by the linear-algebra substrate. Every value can
/// be overridden per call; the defaults are shared project-wide.
struct MatrixTolerances {
    double hermitian = 1e-10;       // max |A - A*| entry for Hermitian checks
    double jacobi_offdiag = 1e-14;  // off-diagonal Frobenius target (relative)
    int jacobi_max_sweeps = 100;
    double eig_cluster = 1e-12;     // eigenvalues closer than this form a cluster
    double density_hermitian = 1e-12;
    double density_trace = 1e-12;
};

MatrixTolerances& matrix_tolerances();

/// Dense square complex matrix, row-major storage. Small dimensions only
/// (operators on C^d with d <= 64 for the tensor oracle).
class CMat {
public:
    CMat() = default;
    explicit CMat(int dim) : dim_(dim), a_(static_cast<size_t>(dim) * dim) {}
    CMat(int dim, std::vector<cplx> entries);

    static CMat identity(int dim);
    static CMat zero(int dim) { return CMat(dim); }
    static CMat diagonal(std::span<const double> d);
    static CMat diagonal(std::span<const cplx> d);

    int dim() const { return dim_; }
    cplx& operator()(int i, int j) { return a_[static_cast<size_t>(i) * dim_ + j]; }
    const cplx& operator()(int i, int j) const { return a_[static_cast<size_t>(i) * dim_ + j]; }
    std::span<const cplx> data() const { return a_; }

    CMat adjoint() const;
    CMat transpose() const;
    cplx trace() const;
    double frobenius_norm() const;
    double max_abs() const;

    CMat& operator+=(const CMat& o);
    CMat& operator-=(const CMat& o);
    CMat& operator*=(cplx s);

    friend CMat operator+(CMat a, const CMat& b) { return a += b; }
    friend CMat operator-(CMat a, const CMat& b) { return a -= b; }
    friend CMat operator*(CMat a, cplx s) { return a *= s; }
    friend CMat operator*(cplx s, CMat a) { return a *= s; }
    friend CMat operator*(const CMat& a, const CMat& b);

    bool is_hermitian(double tol = matrix_tolerances().hermitian) const;
    double hermiticity_defect() const;  // max |A_ij - conj(A_ji)|

private:
    int dim_ = 0;
    std::vector<cplx> a_;
};

CMat commutator(const CMat& a, const CMat& b);
CMat jordan_product(const CMat& a, const CMat& b);  // (ab + ba)/2

/// Hilbert-Schmidt inner product Tr(A* B) and norm.
cplx hs_inner(const CMat& a, const CMat& b);
double hs_norm(const CMat& a);

CMat kron(const CMat& a, const CMat& b);
CMat kron_power(const CMat& a, int n);
/// Partial traces of a matrix on C^{dl} (x) C^{dr}, row-major tensor indexing.
CMat partial_trace_left(const CMat& m, int dl, int dr);
CMat partial_trace_right(const CMat& m, int dl, int dr);

/// Eigen-system of a Hermitian matrix, eigenvalues sorted descending.
/// Reconstruction U diag(lambda) U* reproduces the input; columns of U are the
/// eigenvectors. Near-degenerate eigenvalues (within the cluster tolerance)
/// keep an orthonormal but basis-arbitrary set of columns; ordering inside a
/// cluster and the global phase of each column are fixed deterministically
/// (first significant component made real positive, lexicographic tie-break).
struct SpectralDecomposition {
    std::vector<double> eigenvalues;
    CMat vectors;  // unitary, eigenvectors as columns

    /// U f(diag) U* for a scalar function on the spectrum.
    CMat apply(const std::function<cplx(double)>& f) const;
    CMat reconstruct() const;
    /// Cluster boundaries: indices [begin, end) of equal-eigenvalue groups.
    std::vector<std::pair<int, int>> clusters(double tol = matrix_tolerances().eig_cluster) const;
};

SpectralDecomposition eig_hermitian(const CMat& h,
                                    const MatrixTolerances& tol = matrix_tolerances());

/// Strictly positive, unit-trace Hermitian matrix together with its spectral
/// decomposition. Carrier of every state in the project.
class DensityMatrix {
public:
    explicit DensityMatrix(CMat m, const MatrixTolerances& tol = matrix_tolerances());

    int dim() const { return m_.dim(); }
    const CMat& matrix() const { return m_; }
    const SpectralDecomposition& spectral() const { return spec_; }
    double min_eigenvalue() const { return spec_.eigenvalues.back(); }

    /// rho^z = U diag(lambda^z) U*, principal branch (lambda > 0).
    CMat power(cplx z) const;
    /// log rho, Hermitian.
    CMat log() const;
    /// Expectation Tr(rho a).
    cplx expect(const CMat& a) const;

private:
    CMat m_;
    SpectralDecomposition spec_;
};

CMat matrix_power(const DensityMatrix& rho, cplx z);
CMat matrix_log(const DensityMatrix& rho);

/// rho-weighted inner product (A,B)_rho = Tr(rho A o B) for Hermitian A, B.
double rho_inner(const DensityMatrix& rho, const CMat& a, const CMat& b);

/// exp(iH) for Hermitian H via spectral calculus.
CMat unitary_exp(const CMat& h);

struct NumericalError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace qlab

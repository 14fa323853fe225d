#pragma once

#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "qlab/matrix.hpp"

namespace qlab {

/// Differentiable family theta -> rho_theta of faithful states. Built-in
/// families carry analytic first/second-order data; anything else falls back
/// to central finite differences (simple spectrum at theta0 required there).
class Family {
public:
    virtual ~Family() = default;

    virtual int dim() const = 0;
    virtual int num_params() const = 0;
    virtual const std::vector<double>& theta0() const = 0;
    virtual DensityMatrix state(std::span<const double> theta) const = 0;
    virtual std::string describe() const = 0;

    virtual bool analytic_jet() const { return false; }
    /// Eigenvector generators H_k (dP_j/dtheta_k = i[H_k, P_j], phi(H_k)=0).
    virtual std::vector<CMat> generators_at_base() const;
    /// Eigenvalue scores l_k = d log tau / dtheta_k (diagonal in the eigenbasis).
    virtual std::vector<CMat> scores_at_base() const;
    /// Second-order eigenvalue term h(u) = d^2/ds^2 log tau_{theta0+su} at 0.
    virtual CMat eigen_hessian(std::span<const double> u) const;
    /// State derivatives d rho / d theta_k at theta0.
    virtual std::vector<CMat> state_derivs_at_base() const;
};

/// First and second order data of a family at its base point. Everything the
/// Gaussian limit needs: generators H_k, eigenvalue scores l_k, the
/// second-order evaluator h(u), and the raw state derivatives.
struct FamilyJet {
    std::shared_ptr<const Family> family;
    std::vector<double> theta0;
    DensityMatrix rho;
    std::vector<CMat> H;
    std::vector<CMat> l;
    std::vector<CMat> drho;
    std::function<CMat(std::span<const double>)> h;

    int dim() const { return rho.dim(); }
    int num_params() const { return static_cast<int>(H.size()); }
    CMat H_of(std::span<const double> u) const;
    CMat l_of(std::span<const double> u) const;
    CMat drho_of(std::span<const double> u) const;
};

FamilyJet make_jet(std::shared_ptr<const Family> family, double fd_step = 1e-5);

/// Full qubit family rho_v = (1 + v.sigma)/2 around v0 = (0,0,r), local
/// coordinates u = (rx, ry, a). Analytic jet.
class QubitFamily final : public Family {
public:
    explicit QubitFamily(double r);

    int dim() const override { return 2; }
    int num_params() const override { return 3; }
    const std::vector<double>& theta0() const override { return theta0_; }
    DensityMatrix state(std::span<const double> theta) const override;
    std::string describe() const override;

    bool analytic_jet() const override { return true; }
    std::vector<CMat> generators_at_base() const override;
    std::vector<CMat> scores_at_base() const override;
    CMat eigen_hessian(std::span<const double> u) const override;
    std::vector<CMat> state_derivs_at_base() const override;

    double r() const { return r_; }

private:
    double r_;
    std::vector<double> theta0_;
};

/// Commutative family of diagonal states with linearly varying probabilities
/// p_j(theta) = base_j + sum_k theta_k D_kj. Analytic jet, H_k = 0.
class DiagonalFamily final : public Family {
public:
    DiagonalFamily(std::vector<double> base, std::vector<std::vector<double>> derivs);

    int dim() const override { return static_cast<int>(base_.size()); }
    int num_params() const override { return static_cast<int>(derivs_.size()); }
    const std::vector<double>& theta0() const override { return theta0_; }
    DensityMatrix state(std::span<const double> theta) const override;
    std::string describe() const override;

    bool analytic_jet() const override { return true; }
    std::vector<CMat> generators_at_base() const override;
    std::vector<CMat> scores_at_base() const override;
    CMat eigen_hessian(std::span<const double> u) const override;
    std::vector<CMat> state_derivs_at_base() const override;

    const std::vector<double>& base_probs() const { return base_; }
    const std::vector<std::vector<double>>& derivs() const { return derivs_; }

private:
    std::vector<double> base_;
    std::vector<std::vector<double>> derivs_;
    std::vector<double> theta0_;
};

/// Pure-rotation family exp(iH(theta)) rho0 exp(-iH(theta)), fixed spectrum.
class RotationFamily final : public Family {
public:
    RotationFamily(DensityMatrix rho0, std::vector<CMat> generators);

    int dim() const override { return rho0_.dim(); }
    int num_params() const override { return static_cast<int>(H_.size()); }
    const std::vector<double>& theta0() const override { return theta0_; }
    DensityMatrix state(std::span<const double> theta) const override;
    std::string describe() const override;

    bool analytic_jet() const override { return true; }
    std::vector<CMat> generators_at_base() const override { return H_; }
    std::vector<CMat> scores_at_base() const override;
    CMat eigen_hessian(std::span<const double> u) const override;
    std::vector<CMat> state_derivs_at_base() const override;

private:
    DensityMatrix rho0_;
    std::vector<CMat> H_;  // gauged so phi(H_k) = 0
    std::vector<double> theta0_;
};

/// User family given by matrix tables: rho_theta = rho0 + sum_k theta_k Delta_k.
/// Jet by finite differences.
class LinearMatrixFamily final : public Family {
public:
    LinearMatrixFamily(DensityMatrix rho0, std::vector<CMat> deltas);

    int dim() const override { return rho0_.dim(); }
    int num_params() const override { return static_cast<int>(deltas_.size()); }
    const std::vector<double>& theta0() const override { return theta0_; }
    DensityMatrix state(std::span<const double> theta) const override;
    std::string describe() const override;

    std::vector<CMat> state_derivs_at_base() const override { return deltas_; }

private:
    DensityMatrix rho0_;
    std::vector<CMat> deltas_;
    std::vector<double> theta0_;
};

/// Simplified family rho~_a = exp(iH(a)) tau_{theta0+a} exp(-iH(a)) built from
/// a jet; shares the base family's eigenvalue branches (paired descending) and
/// has the same jet data at a = 0.
class SimplifiedFamily final : public Family {
public:
    explicit SimplifiedFamily(FamilyJet base_jet);

    int dim() const override { return jet_.dim(); }
    int num_params() const override { return jet_.num_params(); }
    const std::vector<double>& theta0() const override { return origin_; }
    DensityMatrix state(std::span<const double> a) const override;
    std::string describe() const override;

    bool analytic_jet() const override { return true; }
    std::vector<CMat> generators_at_base() const override { return jet_.H; }
    std::vector<CMat> scores_at_base() const override { return jet_.l; }
    CMat eigen_hessian(std::span<const double> u) const override { return jet_.h(u); }
    std::vector<CMat> state_derivs_at_base() const override { return jet_.drho; }

    /// Eigenvalues of the base family at theta0 + a, branch-paired descending.
    std::vector<double> paired_eigenvalues(std::span<const double> a) const;

private:
    FamilyJet jet_;
    std::vector<double> origin_;
};

}  // namespace qlab

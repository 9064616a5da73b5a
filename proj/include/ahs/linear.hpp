#pragma once

#include "core.hpp"

#include <Eigen/IterativeLinearSolvers>

#include <functional>

namespace ahs {
class LinearOperator;
}

namespace Eigen::internal {
template <>
struct traits<ahs::LinearOperator> : public Eigen::internal::traits<Eigen::SparseMatrix<double>> {};
} // namespace Eigen::internal

namespace ahs {

using VecFn = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

// Matrix-free operator for Eigen's Krylov solvers; carries its own preconditioner.
class LinearOperator : public Eigen::EigenBase<LinearOperator> {
public:
    using Scalar = double;
    using RealScalar = double;
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic, IsRowMajor = false };

    LinearOperator(Eigen::Index n, VecFn apply, VecFn precond)
        : n_(n), apply_(std::move(apply)), precond_(std::move(precond)) {}

    Eigen::Index rows() const { return n_; }
    Eigen::Index cols() const { return n_; }

    template <typename Rhs>
    Eigen::Product<LinearOperator, Rhs, Eigen::AliasFreeProduct> operator*(const Eigen::MatrixBase<Rhs>& x) const {
        return Eigen::Product<LinearOperator, Rhs, Eigen::AliasFreeProduct>(*this, x.derived());
    }

    Eigen::VectorXd apply(const Eigen::VectorXd& x) const { return apply_(x); }
    const VecFn& preconditioner() const { return precond_; }

private:
    Eigen::Index n_;
    VecFn apply_, precond_;
};

class FunctionPreconditioner {
public:
    using StorageIndex = int;
    enum { ColsAtCompileTime = Eigen::Dynamic, MaxColsAtCompileTime = Eigen::Dynamic };

    FunctionPreconditioner() = default;
    template <class M>
    explicit FunctionPreconditioner(const M& m) { compute(m); }
    template <class M>
    FunctionPreconditioner& analyzePattern(const M&) { return *this; }
    template <class M>
    FunctionPreconditioner& factorize(const M& m) { return compute(m); }
    FunctionPreconditioner& compute(const LinearOperator& m) {
        fn_ = m.preconditioner();
        return *this;
    }
    template <class Rhs>
    Eigen::VectorXd solve(const Rhs& b) const {
        return fn_ ? fn_(b) : Eigen::VectorXd(b);
    }
    Eigen::ComputationInfo info() const { return Eigen::Success; }

private:
    VecFn fn_;
};

struct LinearSolveResult {
    Eigen::VectorXd x;
    int iterations = 0;
    double error = 0;
    bool converged = false;
};

inline LinearSolveResult bicgstab(const LinearOperator& A, const Eigen::VectorXd& b, double rel_tol, int max_iter) {
    Eigen::BiCGSTAB<LinearOperator, FunctionPreconditioner> solver;
    solver.setTolerance(rel_tol);
    solver.setMaxIterations(max_iter);
    solver.compute(A);
    LinearSolveResult r;
    r.x = solver.solve(b);
    r.iterations = int(solver.iterations());
    r.error = solver.error();
    r.converged = solver.info() == Eigen::Success && r.x.allFinite();
    return r;
}

} // namespace ahs

namespace Eigen::internal {
template <typename Rhs>
struct generic_product_impl<ahs::LinearOperator, Rhs, SparseShape, DenseShape, GemvProduct>
    : generic_product_impl_base<ahs::LinearOperator, Rhs, generic_product_impl<ahs::LinearOperator, Rhs>> {
    using Scalar = typename Product<ahs::LinearOperator, Rhs>::Scalar;
    template <typename Dest>
    static void scaleAndAddTo(Dest& dst, const ahs::LinearOperator& lhs, const Rhs& rhs, const Scalar& alpha) {
        dst.noalias() += alpha * lhs.apply(rhs);
    }
};
} // namespace Eigen::internal

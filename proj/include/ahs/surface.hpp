#pragma once

#include "core.hpp"
#include "fornberg.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseLU>
#include <fftw3.h>

#include <complex>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

namespace ahs {

using cplx = std::complex<double>;

namespace detail {

inline std::mutex& fftw_plan_mutex() {
    static std::mutex m;
    return m;
}

// Real-to-complex transforms over either the full 2-D grid (rank 2) or each
// row of length n2 separately (rank 1). Plans are created once; execution uses
// the new-array interface so concurrent calls are safe.
class RealFFT {
public:
    RealFFT(int rank, int n1, int n2) : rank_(rank), n1_(n1), n2_(n2) {
        const int nc = n2 / 2 + 1;
        std::vector<double> in(static_cast<size_t>(n1) * n2);
        std::vector<cplx> out(static_cast<size_t>(n1) * nc);
        auto* cin = in.data();
        auto* cout = reinterpret_cast<fftw_complex*>(out.data());
        const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        if (rank == 2) {
            fwd_ = fftw_plan_dft_r2c_2d(n1, n2, cin, cout, flags);
            bwd_ = fftw_plan_dft_c2r_2d(n1, n2, cout, cin, flags);
        } else {
            int n[] = {n2};
            fwd_ = fftw_plan_many_dft_r2c(1, n, n1, cin, nullptr, 1, n2, cout, nullptr, 1, nc, flags);
            bwd_ = fftw_plan_many_dft_c2r(1, n, n1, cout, nullptr, 1, nc, cin, nullptr, 1, n2, flags);
        }
    }
    ~RealFFT() {
        std::lock_guard<std::mutex> lock(fftw_plan_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    RealFFT(const RealFFT&) = delete;
    RealFFT& operator=(const RealFFT&) = delete;

    int nc() const { return n2_ / 2 + 1; }

    std::vector<cplx> forward(const Vec& f) const {
        std::vector<double> in(f.data(), f.data() + f.size());
        std::vector<cplx> out(static_cast<size_t>(n1_) * nc());
        fftw_execute_dft_r2c(fwd_, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
        return out;
    }

    // Includes the 1/N normalization.
    Vec backward(std::vector<cplx> spec) const {
        Vec out(static_cast<Eigen::Index>(n1_) * n2_);
        fftw_execute_dft_c2r(bwd_, reinterpret_cast<fftw_complex*>(spec.data()), out.data());
        const double norm = rank_ == 2 ? double(n1_) * n2_ : double(n2_);
        return out / norm;
    }

private:
    int rank_, n1_, n2_;
    fftw_plan fwd_{}, bwd_{};
};

inline int wavenumber(int k, int n) { return k <= n / 2 ? k : k - n; }

} // namespace detail

// A sampled chart with a flat reference metric delta in chart coordinates (c1, c2).
// Fields are stored row-major: index = i * n2 + j, i along c1, j along c2.
class DiscreteSurface {
public:
    virtual ~DiscreteSurface() = default;

    virtual std::string kind() const = 0;
    virtual int genus() const = 0;

    int n1() const { return n1_; }
    int n2() const { return n2_; }
    Eigen::Index size() const { return static_cast<Eigen::Index>(n1_) * n2_; }
    Eigen::Index index(int i, int j) const { return static_cast<Eigen::Index>(i) * n2_ + j; }

    const Vec& c1() const { return c1_; }
    const Vec& c2() const { return c2_; }
    virtual Vec plane_x() const = 0;
    virtual Vec plane_y() const = 0;

    virtual Vec d1(const Vec& f) const = 0;
    virtual Vec d2(const Vec& f) const = 0;
    // Flat reference Laplacian d1^2 + d2^2.
    virtual Vec lap(const Vec& f) const = 0;
    Vec d(int a, const Vec& f) const { return a == 0 ? d1(f) : d2(f); }

    // Integral of a density g against dc1 dc2 over the whole surface.
    virtual double integrate_density(const Vec& g) const = 0;

    // Rows held fixed by solvers (chart boundary); zero on closed grids.
    virtual Vec dirichlet_mask() const { return Vec::Zero(size()); }

    // Approximate inverse of (lap + c) for Krylov preconditioning.
    virtual std::function<Vec(const Vec&)> preconditioner(const Vec& c) const = 0;

    virtual bool same_as(const DiscreteSurface& o) const = 0;

protected:
    int n1_ = 0, n2_ = 0;
    Vec c1_, c2_;
};

using SurfacePtr = std::shared_ptr<const DiscreteSurface>;

inline bool same_surface(const SurfacePtr& a, const SurfacePtr& b) {
    return a && b && (a == b || a->same_as(*b));
}

inline void require_same(const SurfacePtr& a, const SurfacePtr& b) {
    require(same_surface(a, b), ErrorCode::SurfaceMismatch, "fields live on different surfaces");
}

// Flat torus R^2 / (Z g1 + Z g2), sampled on the unit square of lattice coordinates.
class LatticeTorus final : public DiscreteSurface {
public:
    LatticeTorus(Eigen::Vector2d g1, Eigen::Vector2d g2, int nx, int ny) : g1_(g1), g2_(g2) {
        A_.col(0) = g1;
        A_.col(1) = g2;
        require(std::abs(A_.determinant()) > 1e-14, ErrorCode::InvalidArgument,
                "lattice generators are linearly dependent");
        require(nx >= 8 && ny >= 8 && nx % 2 == 0 && ny % 2 == 0, ErrorCode::InvalidArgument,
                "torus resolution must be even and at least 8");
        n1_ = nx;
        n2_ = ny;
        Ainv_ = A_.inverse();
        c1_.resize(size());
        c2_.resize(size());
        for (int i = 0; i < nx; ++i)
            for (int j = 0; j < ny; ++j) {
                Eigen::Vector2d p = A_ * Eigen::Vector2d(double(i) / nx, double(j) / ny);
                c1_(index(i, j)) = p(0);
                c2_(index(i, j)) = p(1);
            }
        fft_ = std::make_shared<detail::RealFFT>(2, nx, ny);
    }

    static std::shared_ptr<LatticeTorus> square(double side, int n) {
        return std::make_shared<LatticeTorus>(Eigen::Vector2d(side, 0), Eigen::Vector2d(0, side), n, n);
    }

    std::string kind() const override { return "torus"; }
    int genus() const override { return 1; }
    const Eigen::Vector2d& generator1() const { return g1_; }
    const Eigen::Vector2d& generator2() const { return g2_; }
    double area() const { return std::abs(A_.determinant()); }
    // Lattice coordinate a (0 or 1) in [0, 1) at each node.
    Vec lattice_coord(int a) const { return Ainv_(a, 0) * c1_ + Ainv_(a, 1) * c2_; }

    Vec plane_x() const override { return c1_; }
    Vec plane_y() const override { return c2_; }

    Vec d1(const Vec& f) const override { return apply_symbol(f, [&](double kx, double, bool nyq) {
        return nyq ? cplx(0) : cplx(0, kx); }); }
    Vec d2(const Vec& f) const override { return apply_symbol(f, [&](double, double ky, bool nyq) {
        return nyq ? cplx(0) : cplx(0, ky); }); }
    Vec lap(const Vec& f) const override { return apply_symbol(f, [&](double kx, double ky, bool) {
        return cplx(-(kx * kx + ky * ky)); }); }

    double integrate_density(const Vec& g) const override { return area() * g.sum() / double(size()); }

    std::function<Vec(const Vec&)> preconditioner(const Vec& c) const override {
        const double cbar = -std::max(std::abs(c.mean()), 1e-3);
        return [this, cbar](const Vec& r) {
            return apply_symbol(r, [&](double kx, double ky, bool) {
                return cplx(1.0 / (-(kx * kx + ky * ky) + cbar)); });
        };
    }

    bool same_as(const DiscreteSurface& o) const override {
        auto* t = dynamic_cast<const LatticeTorus*>(&o);
        return t && t->n1_ == n1_ && t->n2_ == n2_ && (t->A_ - A_).norm() == 0.0;
    }

private:
    // symbol(kx, ky, nyquist) in physical wavenumbers; nyquist flags modes with no odd-derivative partner.
    template <class Symbol>
    Vec apply_symbol(const Vec& f, Symbol symbol) const {
        auto spec = fft_->forward(f);
        const int nc = fft_->nc();
        const double tp = 2.0 * pi;
        for (int i = 0; i < n1_; ++i) {
            const int k1 = detail::wavenumber(i, n1_);
            for (int j = 0; j < nc; ++j) {
                const int k2 = j;
                const bool nyq = (2 * i == n1_) || (2 * j == n2_);
                const double kx = tp * (Ainv_(0, 0) * k1 + Ainv_(1, 0) * k2);
                const double ky = tp * (Ainv_(0, 1) * k1 + Ainv_(1, 1) * k2);
                spec[static_cast<size_t>(i) * nc + j] *= symbol(kx, ky, nyq);
            }
        }
        return fft_->backward(std::move(spec));
    }

    Eigen::Vector2d g1_, g2_;
    Eigen::Matrix2d A_, Ainv_;
    std::shared_ptr<detail::RealFFT> fft_;
};

// Annulus rho_min <= rho <= rho_max of the stereographic plane, in cylinder
// coordinates s = log rho (finite differences) and angle r (spectral).
class SphereChart final : public DiscreteSurface {
public:
    SphereChart(double rho_min, double rho_max, int n_rho, int n_ang, int fd_order = 6)
        : rho_min_(rho_min), rho_max_(rho_max), order_(fd_order) {
        require(rho_min > 0 && rho_min < 1 && rho_max > 1, ErrorCode::InvalidArgument,
                "sphere chart must be an annulus containing the equator");
        require(std::abs(rho_min * rho_max - 1.0) < 1e-12, ErrorCode::InvalidArgument,
                "sphere chart must satisfy rho_min * rho_max = 1");
        require(fd_order == 4 || fd_order == 6, ErrorCode::InvalidArgument, "fd_order must be 4 or 6");
        require(n_rho >= fd_order + 3 && n_ang >= 8 && n_ang % 2 == 0, ErrorCode::InvalidArgument,
                "sphere chart resolution too small or angular count odd");
        n1_ = n_rho;
        n2_ = n_ang;
        S_ = -std::log(rho_min);
        h_ = 2 * S_ / (n_rho - 1);
        c1_.resize(size());
        c2_.resize(size());
        for (int i = 0; i < n_rho; ++i)
            for (int j = 0; j < n_ang; ++j) {
                c1_(index(i, j)) = s_at(i);
                c2_(index(i, j)) = 2 * pi * j / n_ang;
            }
        const int width = fd_order + 1;
        const int half = fd_order / 2;
        start_.resize(n_rho);
        w1_.resize(n_rho);
        w2_.resize(n_rho);
        for (int i = 0; i < n_rho; ++i) {
            int st = std::clamp(i - half, 0, n_rho - width);
            std::vector<double> x(width);
            for (int l = 0; l < width; ++l) x[l] = s_at(st + l);
            auto w = fornberg_weights(s_at(i), x, 2);
            start_[i] = st;
            w1_[i] = w[1];
            w2_[i] = w[2];
        }
        fft_ = std::make_shared<detail::RealFFT>(1, n_rho, n_ang);
    }

    static std::shared_ptr<SphereChart> make_default() {
        return std::make_shared<SphereChart>(std::exp(-5.0), std::exp(5.0), 1025, 256);
    }

    std::string kind() const override { return "sphere"; }
    int genus() const override { return 0; }
    double rho_min() const { return rho_min_; }
    double rho_max() const { return rho_max_; }
    double s_max() const { return S_; }
    double ds() const { return h_; }
    int fd_order() const { return order_; }
    double s_at(int i) const { return -S_ + i * h_; }

    Vec plane_x() const override { return c1_.exp() * c2_.cos(); }
    Vec plane_y() const override { return c1_.exp() * c2_.sin(); }

    Vec d1(const Vec& f) const override { return apply_s(f, w1_); }
    Vec d2(const Vec& f) const override { return apply_angle(f, 1); }
    Vec d11(const Vec& f) const { return apply_s(f, w2_); }
    Vec lap(const Vec& f) const override { return apply_s(f, w2_) + apply_angle(f, 2); }

    double integrate_density(const Vec& g) const override {
        double total = 0;
        for (int j = 0; j < n2_; ++j) total += integrate_column(g, j);
        return total * 2 * pi / n2_;
    }

    // Radial quadrature times the exact 2 pi angular factor; g must not depend on the angle.
    double integrate_axisymmetric(const Vec& g) const {
        double scale = std::max(max_abs(g), 1e-300);
        for (int i = 0; i < n1_; ++i)
            for (int j = 1; j < n2_; ++j)
                require(std::abs(g(index(i, j)) - g(index(i, 0))) <= 1e-10 * scale, ErrorCode::InvalidArgument,
                        "integrand is not axisymmetric");
        return 2 * pi * integrate_column(g, 0);
    }

    Vec dirichlet_mask() const override {
        Vec m = Vec::Zero(size());
        for (int j = 0; j < n2_; ++j) {
            m(index(0, j)) = 1;
            m(index(n1_ - 1, j)) = 1;
        }
        return m;
    }

    std::function<Vec(const Vec&)> preconditioner(const Vec& c) const override {
        // One banded solve per angular Fourier mode, using the angular mean of c.
        const int nc = n2_ / 2 + 1;
        Vec cbar = Vec::Zero(n1_);
        for (int i = 0; i < n1_; ++i) cbar(i) = c.segment(index(i, 0), n2_).mean();
        auto solvers = std::make_shared<std::vector<std::shared_ptr<Eigen::SparseLU<Eigen::SparseMatrix<double>>>>>();
        for (int m = 0; m < nc; ++m) {
            std::vector<Eigen::Triplet<double>> trip;
            for (int i = 0; i < n1_; ++i) {
                if (i == 0 || i == n1_ - 1) {
                    trip.emplace_back(i, i, 1.0);
                    continue;
                }
                for (size_t l = 0; l < w2_[i].size(); ++l) trip.emplace_back(i, start_[i] + int(l), w2_[i][l]);
                trip.emplace_back(i, i, -double(m) * m + std::min(cbar(i), 0.0) - 1e-9);
            }
            Eigen::SparseMatrix<double> M(n1_, n1_);
            M.setFromTriplets(trip.begin(), trip.end());
            auto lu = std::make_shared<Eigen::SparseLU<Eigen::SparseMatrix<double>>>();
            lu->compute(M);
            solvers->push_back(lu);
        }
        return [this, solvers, nc](const Vec& r) {
            auto spec = fft_->forward(r);
            Eigen::VectorXd re(n1_), im(n1_);
            for (int m = 0; m < nc; ++m) {
                for (int i = 0; i < n1_; ++i) {
                    re(i) = spec[size_t(i) * nc + m].real();
                    im(i) = spec[size_t(i) * nc + m].imag();
                }
                Eigen::VectorXd xr = (*solvers)[m]->solve(re), xi = (*solvers)[m]->solve(im);
                for (int i = 0; i < n1_; ++i) spec[size_t(i) * nc + m] = cplx(xr(i), xi(i));
            }
            return fft_->backward(std::move(spec));
        };
    }

    bool same_as(const DiscreteSurface& o) const override {
        auto* t = dynamic_cast<const SphereChart*>(&o);
        return t && t->n1_ == n1_ && t->n2_ == n2_ && t->rho_min_ == rho_min_ && t->order_ == order_;
    }

private:
    Vec apply_s(const Vec& f, const std::vector<std::vector<double>>& w) const {
        Vec out = Vec::Zero(size());
        for (int i = 0; i < n1_; ++i) {
            auto row = out.segment(index(i, 0), n2_);
            for (size_t l = 0; l < w[i].size(); ++l) row += w[i][l] * f.segment(index(start_[i] + int(l), 0), n2_);
        }
        return out;
    }

    Vec apply_angle(const Vec& f, int order) const {
        auto spec = fft_->forward(f);
        const int nc = n2_ / 2 + 1;
        for (int i = 0; i < n1_; ++i)
            for (int m = 0; m < nc; ++m) {
                cplx sym = order == 1 ? (2 * m == n2_ ? cplx(0) : cplx(0, m)) : cplx(-double(m) * m);
                spec[size_t(i) * nc + m] *= sym;
            }
        return fft_->backward(std::move(spec));
    }

    // Trapezoid in s plus an exponential tail beyond |s| = S whose rate is fitted
    // from the last samples (smooth densities on S^2 decay like e^{-2|s|} or faster
    // in cylinder coordinates), with the matching Euler-Maclaurin endpoint term.
    double integrate_column(const Vec& g, int j) const {
        double t = 0;
        for (int i = 0; i < n1_; ++i) t += g(index(i, j));
        const double a = g(index(0, j)), b = g(index(n1_ - 1, j));
        t = h_ * (t - 0.5 * (a + b));
        const int m = std::max(1, std::min(n1_ / 4, int(std::lround(0.25 / h_))));
        auto tail = [&](double end, double inner) {
            double rate = 2.0;
            if (end != 0 && inner / end > 1.0) rate = std::clamp(std::log(inner / end) / (m * h_), 1.0, 8.0);
            return end / rate + h_ * h_ * rate * end / 12.0;
        };
        return t + tail(a, g(index(m, j))) + tail(b, g(index(n1_ - 1 - m, j)));
    }

    double rho_min_, rho_max_, S_ = 0, h_ = 0;
    int order_;
    std::vector<int> start_;
    std::vector<std::vector<double>> w1_, w2_;
    std::shared_ptr<detail::RealFFT> fft_;
};

} // namespace ahs

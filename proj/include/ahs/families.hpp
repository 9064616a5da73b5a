#pragma once

#include "structure.hpp"

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <array>
#include <functional>

namespace ahs {

// ---- sphere family -------------------------------------------------------------

struct SphereFamily {
    double kappa = 0;

    double R() const { return std::sqrt(kappa * kappa + 16); }
    double mu() const { return 2 * kappa / R(); }
    // kappa = 4 cot 2 theta, theta in (0, pi/2)
    double theta() const { return 0.5 * (pi / 2 - std::atan(kappa / 4)); }
};

struct SpherePoint {
    double h_coeff, sR, f, gamma2, gamma_coeff;
};

// h = h_coeff (dx^2 + dy^2), gamma = gamma_coeff (x dy - y dx), rho = |(x, y)|.
inline SpherePoint sphere_eval(const SphereFamily& fam, double rho) {
    require(rho >= 0, ErrorCode::InvalidArgument, "rho must be nonnegative");
    const double R = fam.R(), mu = fam.mu();
    const double r2 = rho * rho, r4 = r2 * r2;
    const double den = 1 + mu * r2 + r4;
    SpherePoint p;
    p.h_coeff = 8 / (R * den);
    p.sR = fam.kappa + 32 * r2 / (R * den);
    p.f = 4 * (r4 - 1) / den;
    p.gamma2 = 8 * r2 / (R * den);
    p.gamma_coeff = p.h_coeff;
    return p;
}

inline double tau(double z) { return z * (pi / 2 - std::atan(z)); }

inline double nu_from_kappa(double kappa) { return 8 * pi * tau(kappa / 4); }

inline double kappa_from_theta(double theta) {
    require(theta > 0 && theta < pi / 2, ErrorCode::InvalidArgument, "theta must lie in (0, pi/2)");
    return 4 / std::tan(2 * theta);
}

inline double nu_from_theta(double theta) {
    require(theta > 0 && theta < pi / 2, ErrorCode::InvalidArgument, "theta must lie in (0, pi/2)");
    return 16 * pi * theta / std::tan(2 * theta);
}

inline double sphere_volume(const SphereFamily& fam) { return 2 * pi * (pi / 2 - std::atan(fam.kappa / 4)); }

// 2 pi * int_0^inf h_coeff rho d rho.
inline double sphere_volume_quadrature(const SphereFamily& fam) {
    boost::math::quadrature::exp_sinh<double> q;
    auto g = [&](double rho) { return sphere_eval(fam, rho).h_coeff * rho; };
    return 2 * pi * q.integrate(g, 0.0, std::numeric_limits<double>::infinity());
}

inline double nu_quadrature(const SphereFamily& fam) { return fam.kappa * sphere_volume_quadrature(fam); }

struct EquatorLengths {
    double h, hhat;  // hhat = (sqrt(kappa^2 + 16)/2) h, normalized by max sR = 2
};

inline EquatorLengths equator_lengths(const SphereFamily& fam) {
    const double R = fam.R(), k = fam.kappa;
    return {pi * std::sqrt(R - k), 2 * std::sqrt(2.0) * pi * std::pow(R, 0.5) / std::sqrt(R + k)};
}

// Arc length of (cos t, sin t) in h and hhat by adaptive quadrature.
inline EquatorLengths equator_lengths_quadrature(const SphereFamily& fam) {
    auto speed = [&](double t) {
        const double x = std::cos(t), y = std::sin(t);
        const double dx = -std::sin(t), dy = std::cos(t);
        return std::sqrt(sphere_eval(fam, std::hypot(x, y)).h_coeff * (dx * dx + dy * dy));
    };
    const double L = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(speed, 0.0, 2 * pi, 5, 1e-14);
    return {L, L * std::sqrt(fam.R() / 2)};
}

// ---- torus family ---------------------------------------------------------------

struct TorusFamily {
    double kappa = -5;

    TorusFamily() = default;
    explicit TorusFamily(double k) : kappa(k) {
        require(k < -4, ErrorCode::InvalidArgument, "torus family needs kappa < -4");
    }
    double R() const { return std::sqrt(kappa * kappa - 16); }
};

struct TorusPoint {
    double h_coeff, sR, f, gamma2;
};

// h = h_coeff (dr^2 + ds^2), gamma = h_coeff dr; f is signed for the orientation dr ^ ds.
inline TorusPoint torus_eval(const TorusFamily& fam, double s) {
    require(fam.kappa < -4, ErrorCode::InvalidArgument, "torus family needs kappa < -4");
    const double R = fam.R(), k = fam.kappa, c = std::cos(2 * s);
    TorusPoint p;
    p.h_coeff = 4 / (R * c - k);
    p.sR = R * (k * c - R) / (R * c - k);
    p.f = 4 * std::sin(2 * s) / (c - k / R);
    p.gamma2 = p.h_coeff;
    return p;
}

// Over s in [0, pi] and r in [0, r_period].
inline double torus_volume(const TorusFamily& fam, double r_period = pi) {
    auto g = [&](double s) { return torus_eval(fam, s).h_coeff; };
    return r_period * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, pi, 8, 1e-14);
}

inline double torus_gamma_L2(const TorusFamily& fam, double r_period = pi) {
    auto g = [&](double s) {
        auto p = torus_eval(fam, s);
        return p.gamma2 * p.h_coeff;
    };
    return r_period * boost::math::quadrature::gauss_kronrod<double, 61>::integrate(g, 0.0, pi, 8, 1e-14);
}

// ---- Ricci flow -----------------------------------------------------------------

enum class RicciBranch { Sphere, Torus };

// Sphere: kappa(t) = -4 cot 4t on (-pi/4, 0). Torus: kappa(t) = -4 coth 4t on t > 0.
inline double ricci_kappa(RicciBranch b, double t) {
    if (b == RicciBranch::Sphere) {
        require(t > -pi / 4 && t < 0, ErrorCode::DomainViolation, "sphere branch needs t in (-pi/4, 0)");
        return -4 / std::tan(4 * t);
    }
    require(t > 0, ErrorCode::DomainViolation, "torus branch needs t > 0");
    return -4 / std::tanh(4 * t);
}

// max over sample points of |(h(t+d) - h(t-d)) / 2d + sR h(t)|, h the coefficient
// against dx^2 + dy^2 (sphere, samples in s = log rho) or dr^2 + ds^2 (torus).
inline double ricci_flow_residual(RicciBranch b, double t, double delta, int samples = 401) {
    require(delta > 0, ErrorCode::InvalidArgument, "delta must be positive");
    ricci_kappa(b, t - delta);
    ricci_kappa(b, t + delta);
    double worst = 0;
    for (int i = 0; i < samples; ++i) {
        const double u = double(i) / (samples - 1);
        double dh, h, sR;
        if (b == RicciBranch::Sphere) {
            const double rho = std::exp(-5 + 10 * u);
            auto at = [&](double tt) { return sphere_eval({ricci_kappa(b, tt)}, rho); };
            auto p = at(t);
            dh = (at(t + delta).h_coeff - at(t - delta).h_coeff) / (2 * delta);
            h = p.h_coeff;
            sR = p.sR;
        } else {
            const double s = pi * u;
            auto at = [&](double tt) { return torus_eval(TorusFamily(ricci_kappa(b, tt)), s); };
            auto p = at(t);
            dh = (at(t + delta).h_coeff - at(t - delta).h_coeff) / (2 * delta);
            h = p.h_coeff;
            sR = p.sR;
        }
        worst = std::max(worst, std::abs(dh + sR * h));
    }
    return worst;
}

// ---- magnetic geodesics ---------------------------------------------------------

// Closed-form conformal plane metric e^sigma (dx^2 + dy^2) with a magnetic function f.
struct PlaneMagnetic {
    // returns {sigma, d sigma/dx, d sigma/dy}
    std::function<std::array<double, 3>(double, double)> sigma;
    std::function<double(double, double)> f;
    // chart: rho_min <= |(x, y)| <= rho_max
    double rho_min = 0, rho_max = std::numeric_limits<double>::infinity();
    double scale = 1;  // magnetic form scale; 1 is the (1/2) d gamma convention
};

inline PlaneMagnetic sphere_family_magnetic(const SphereFamily& fam, double rho_min = std::exp(-5.0),
                                            double rho_max = std::exp(5.0)) {
    PlaneMagnetic m;
    const double R = fam.R(), mu = fam.mu();
    m.sigma = [=](double x, double y) -> std::array<double, 3> {
        const double r2 = x * x + y * y;
        const double den = 1 + mu * r2 + r2 * r2;
        const double dden = (mu + 2 * r2) * 2;  // d den / d(x or y) divided by the coordinate
        return {std::log(8 / (R * den)), -dden * x / den, -dden * y / den};
    };
    m.f = [=](double x, double y) { return sphere_eval(fam, std::hypot(x, y)).f; };
    m.rho_min = rho_min;
    m.rho_max = rho_max;
    return m;
}

inline PlaneMagnetic flat_plane(double f = 0) {
    PlaneMagnetic m;
    m.sigma = [](double, double) -> std::array<double, 3> { return {0, 0, 0}; };
    m.f = [f](double, double) { return f; };
    return m;
}

struct TrajectorySample {
    double t, x, y, energy, kgeo;
};

struct Trajectory {
    std::vector<TrajectorySample> samples;
    double energy_drift = 0;   // max |E - E0| / E0
    double radial_drift = 0;   // max | |p| - |p0| |
    double kgeo_mean = 0, kgeo_spread = 0;
    double kgeo_expected_max_error = 0;  // max |kgeo + (scale/4) f / |v||
};

namespace detail {
using State = std::array<double, 4>;

inline State magnetic_rhs(const PlaneMagnetic& m, const State& s) {
    const double x = s[0], y = s[1], u = s[2], v = s[3];
    auto sg = m.sigma(x, y);
    const double dot = sg[1] * u + sg[2] * v, n2 = u * u + v * v;
    // Christoffel part of e^sigma delta: v (dsigma . v) - |v|^2 grad sigma / 2
    double ax = -(u * dot - 0.5 * n2 * sg[1]);
    double ay = -(v * dot - 0.5 * n2 * sg[2]);
    // A(v) = -(scale/4) f J v, J v = (-v_y, v_x)
    const double c = -0.25 * m.scale * m.f(x, y);
    ax += c * -v;
    ay += c * u;
    return {u, v, ax, ay};
}

// Signed geodesic curvature against the h-normal J v.
inline double geodesic_curvature(const PlaneMagnetic& m, const State& s) {
    State d = magnetic_rhs(m, s);
    auto sg = m.sigma(s[0], s[1]);
    const double u = s[2], v = s[3];
    const double n2 = u * u + v * v;
    const double ke = (u * d[3] - v * d[2]) / std::pow(n2, 1.5);
    // normal derivative of sigma along the Euclidean unit normal (-v, u)/|v|
    const double dn = (-v * sg[1] + u * sg[2]) / std::sqrt(n2);
    return std::exp(-0.5 * sg[0]) * (ke - 0.5 * dn);
}
} // namespace detail

// Fixed-step RK4 for D_v v = A(v). Samples every `stride` steps.
inline Trajectory magnetic_geodesic(const PlaneMagnetic& m, std::array<double, 2> start, std::array<double, 2> v0,
                                    double T, double dt, int stride = 100) {
    require(dt > 0 && T > 0, ErrorCode::InvalidArgument, "T and dt must be positive");
    using detail::State;
    State s{start[0], start[1], v0[0], v0[1]};
    auto energy = [&](const State& q) { return std::exp(m.sigma(q[0], q[1])[0]) * (q[2] * q[2] + q[3] * q[3]); };
    const double E0 = energy(s), r0 = std::hypot(s[0], s[1]);
    require(E0 > 0, ErrorCode::InvalidArgument, "initial velocity must be nonzero");
    const long n = std::lround(T / dt);
    Trajectory tr;
    std::vector<double> ks;
    auto record = [&](double t) {
        const double k = detail::geodesic_curvature(m, s);
        const double E = energy(s);
        tr.samples.push_back({t, s[0], s[1], E, k});
        tr.energy_drift = std::max(tr.energy_drift, std::abs(E - E0) / E0);
        tr.radial_drift = std::max(tr.radial_drift, std::abs(std::hypot(s[0], s[1]) - r0));
        tr.kgeo_expected_max_error =
            std::max(tr.kgeo_expected_max_error, std::abs(k + 0.25 * m.scale * m.f(s[0], s[1]) / std::sqrt(E)));
        ks.push_back(k);
    };
    record(0);
    for (long i = 1; i <= n; ++i) {
        auto add = [](const State& a, const State& b, double h) {
            return State{a[0] + h * b[0], a[1] + h * b[1], a[2] + h * b[2], a[3] + h * b[3]};
        };
        State k1 = detail::magnetic_rhs(m, s);
        State k2 = detail::magnetic_rhs(m, add(s, k1, dt / 2));
        State k3 = detail::magnetic_rhs(m, add(s, k2, dt / 2));
        State k4 = detail::magnetic_rhs(m, add(s, k3, dt));
        for (int c = 0; c < 4; ++c) s[c] += dt / 6 * (k1[c] + 2 * k2[c] + 2 * k3[c] + k4[c]);
        const double r = std::hypot(s[0], s[1]);
        require(std::isfinite(r) && r >= m.rho_min && r <= m.rho_max, ErrorCode::LeftChart,
                "trajectory left the chart at t = " + format_double(i * dt));
        if (i % stride == 0 || i == n) record(i * dt);
    }
    double lo = ks[0], hi = ks[0], sum = 0;
    for (double k : ks) {
        lo = std::min(lo, k);
        hi = std::max(hi, k);
        sum += k;
    }
    tr.kgeo_mean = sum / ks.size();
    tr.kgeo_spread = hi - lo;
    return tr;
}

// Start at (rho, 0) with v0 = gamma^sharp = d/dr = (0, rho) and integrate one revolution.
inline Trajectory gamma_orbit(const SphereFamily& fam, double rho, int steps = 20000, double revolutions = 1) {
    auto m = sphere_family_magnetic(fam);
    const double T = 2 * pi * revolutions;
    return magnetic_geodesic(m, {rho, 0}, {0, rho}, T, 2 * pi / steps, std::max(1, steps / 200));
}

inline std::string trajectory_csv(const Trajectory& tr) {
    std::string out = "t,x,y,energy,kappa_geo\n";
    for (const auto& s : tr.samples)
        out += format_double(s.t) + "," + format_double(s.x) + "," + format_double(s.y) + "," +
               format_double(s.energy) + "," + format_double(s.kgeo) + "\n";
    return out;
}

// ---- tables ---------------------------------------------------------------------

inline std::string sphere_table_csv(const SphereFamily& fam, int n = 201, double s_max = 5) {
    std::string out = "rho,h_coeff,sR,f,gamma2\n";
    for (int i = 0; i < n; ++i) {
        const double rho = std::exp(-s_max + 2 * s_max * i / (n - 1));
        auto p = sphere_eval(fam, rho);
        out += format_double(rho) + "," + format_double(p.h_coeff) + "," + format_double(p.sR) + "," +
               format_double(p.f) + "," + format_double(p.gamma2) + "\n";
    }
    return out;
}

inline std::string torus_table_csv(const TorusFamily& fam, int n = 201) {
    std::string out = "s,h_coeff,sR,f,gamma2\n";
    for (int i = 0; i < n; ++i) {
        const double s = pi * i / (n - 1);
        auto p = torus_eval(fam, s);
        out += format_double(s) + "," + format_double(p.h_coeff) + "," + format_double(p.sR) + "," +
               format_double(p.f) + "," + format_double(p.gamma2) + "\n";
    }
    return out;
}

} // namespace ahs

#pragma once

#include "surface.hpp"

#include <vector>

namespace ahs {

struct ScalarField {
    SurfacePtr surface;
    Vec values;

    ScalarField() = default;
    ScalarField(SurfacePtr s, Vec v) : surface(std::move(s)), values(std::move(v)) {
        require(values.size() == surface->size(), ErrorCode::InvalidArgument, "field size does not match surface");
    }
    static ScalarField constant(SurfacePtr s, double c) {
        Vec v = Vec::Constant(s->size(), c);
        return ScalarField(std::move(s), std::move(v));
    }
};

// Covariant components in chart coordinates.
struct OneFormField {
    SurfacePtr surface;
    Vec c1, c2;
    const Vec& operator[](int a) const { return a == 0 ? c1 : c2; }
};

// Completely symmetric tensor of rank k, stored by the k+1 independent
// components comp[m], m = number of indices equal to 2 (e.g. 111, 112, 122, 222).
struct SymTensorField {
    SurfacePtr surface;
    int rank = 0;
    bool contravariant = false;
    std::vector<Vec> comp;
};

// General tensor with 2^rank components; bit n of the component index selects
// coordinate 2 in slot n. up[n] marks contravariant slots.
struct Tensor {
    SurfacePtr surface;
    std::vector<bool> up;
    std::vector<Vec> comp;

    int rank() const { return static_cast<int>(up.size()); }
    static Tensor zeros(SurfacePtr s, std::vector<bool> up) {
        Tensor t{s, std::move(up), {}};
        t.comp.assign(size_t(1) << t.up.size(), Vec::Zero(s->size()));
        return t;
    }
};

inline int popcount(unsigned x) { return __builtin_popcount(x); }

inline double binomial(int n, int k) {
    double r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

inline Tensor to_full(const SymTensorField& s) {
    Tensor t = Tensor::zeros(s.surface, std::vector<bool>(s.rank, s.contravariant));
    for (unsigned I = 0; I < t.comp.size(); ++I) t.comp[I] = s.comp[popcount(I)];
    return t;
}

// Symmetrization of an all-covariant or all-contravariant tensor.
inline SymTensorField symmetric_part(const Tensor& t) {
    SymTensorField s{t.surface, t.rank(), t.rank() > 0 && t.up[0], {}};
    s.comp.assign(t.rank() + 1, Vec::Zero(t.surface->size()));
    for (unsigned I = 0; I < t.comp.size(); ++I) s.comp[popcount(I)] += t.comp[I];
    for (int m = 0; m <= t.rank(); ++m) s.comp[m] /= binomial(t.rank(), m);
    return s;
}

inline Tensor from_one_form(const OneFormField& g) {
    Tensor t{g.surface, {false}, {g.c1, g.c2}};
    return t;
}

inline Tensor add(const Tensor& a, const Tensor& b, double sb = 1.0) {
    Tensor r = a;
    for (size_t I = 0; I < r.comp.size(); ++I) r.comp[I] += sb * b.comp[I];
    return r;
}

inline SymTensorField add(const SymTensorField& a, const SymTensorField& b, double sb = 1.0) {
    SymTensorField r = a;
    for (size_t m = 0; m < r.comp.size(); ++m) r.comp[m] += sb * b.comp[m];
    return r;
}

// Complex structure on the first slot: (JT)_{1...} = T_{2...}, (JT)_{2...} = -T_{1...}
// for covariant slots (J d1 = d2); the transpose action for contravariant slots.
inline Tensor apply_J_first(const Tensor& t) {
    Tensor r = t;
    const bool upper = t.up[0];
    for (unsigned I = 0; I < t.comp.size(); ++I) {
        const unsigned partner = I ^ 1u;
        const bool is2 = I & 1u;
        if (!upper) r.comp[I] = is2 ? Vec(-t.comp[partner]) : t.comp[partner];
        else r.comp[I] = is2 ? t.comp[partner] : Vec(-t.comp[partner]);
    }
    return r;
}

// J on a trace-free symmetric tensor (any slot gives the same result). Pure
// component relabelling, so J(J B) = -B holds bit for bit when B is trace-free.
inline SymTensorField apply_J(const SymTensorField& s) {
    SymTensorField r = s;
    const double sign = s.contravariant ? -1.0 : 1.0;
    for (int m = 0; m < s.rank; ++m) r.comp[m] = sign * s.comp[m + 1];
    if (s.rank > 0) r.comp[s.rank] = -sign * s.comp[s.rank - 1];
    return r;
}

} // namespace ahs

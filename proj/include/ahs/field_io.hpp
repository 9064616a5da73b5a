#pragma once

#include "field.hpp"

#include <json.hpp>

#include <cstdio>
#include <sstream>
#include <string>

namespace ahs {

using json = nlohmann::json;

inline json surface_to_json(const DiscreteSurface& s) {
    if (auto* t = dynamic_cast<const LatticeTorus*>(&s)) {
        return {{"type", "torus"},
                {"generators", {{t->generator1()(0), t->generator1()(1)}, {t->generator2()(0), t->generator2()(1)}}},
                {"n", {t->n1(), t->n2()}}};
    }
    auto& c = dynamic_cast<const SphereChart&>(s);
    return {{"type", "sphere"}, {"rho_min", c.rho_min()}, {"rho_max", c.rho_max()},
            {"n", {c.n1(), c.n2()}}, {"fd_order", c.fd_order()}};
}

inline SurfacePtr surface_from_json(const json& j) {
    const std::string type = j.at("type");
    if (type == "torus") {
        auto g = j.value("generators", json{{1.0, 0.0}, {0.0, 1.0}});
        auto n = j.value("n", json{256, 256});
        return std::make_shared<LatticeTorus>(Eigen::Vector2d(g[0][0], g[0][1]), Eigen::Vector2d(g[1][0], g[1][1]),
                                              n[0].get<int>(), n[1].get<int>());
    }
    require(type == "sphere", ErrorCode::InvalidArgument, "unknown surface type " + type);
    const double rmin = j.value("rho_min", std::exp(-5.0));
    const double rmax = j.value("rho_max", 1.0 / rmin);
    auto n = j.value("n", json{1025, 256});
    return std::make_shared<SphereChart>(rmin, rmax, n[0].get<int>(), n[1].get<int>(), j.value("fd_order", 6));
}

inline std::string format_double(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

// One-line header "# <surface> <n1>x<n2> <component>" then n1 rows of n2 values.
inline std::string to_csv(const ScalarField& f, const std::string& component) {
    const auto& s = *f.surface;
    std::string out = "# " + s.kind() + " " + std::to_string(s.n1()) + "x" + std::to_string(s.n2()) + " " + component + "\n";
    for (int i = 0; i < s.n1(); ++i) {
        for (int j = 0; j < s.n2(); ++j) {
            if (j) out += ',';
            out += format_double(f.values(s.index(i, j)));
        }
        out += '\n';
    }
    return out;
}

inline ScalarField scalar_from_csv(const std::string& text, SurfacePtr s) {
    std::istringstream in(text);
    std::string line;
    std::getline(in, line);
    std::istringstream hdr(line);
    std::string hash, kind, res;
    hdr >> hash >> kind >> res;
    const std::string expect = std::to_string(s->n1()) + "x" + std::to_string(s->n2());
    require(hash == "#" && kind == s->kind() && res == expect, ErrorCode::Io,
            "CSV header does not match surface: " + line);
    Vec v(s->size());
    Eigen::Index k = 0;
    while (std::getline(in, line)) {
        std::istringstream row(line);
        std::string cell;
        while (std::getline(row, cell, ',')) {
            require(k < v.size(), ErrorCode::Io, "too many CSV values");
            v(k++) = std::strtod(cell.c_str(), nullptr);
        }
    }
    require(k == v.size(), ErrorCode::Io, "too few CSV values");
    return ScalarField(std::move(s), std::move(v));
}

inline json to_json(const ScalarField& f, const std::string& component) {
    std::vector<double> data(f.values.data(), f.values.data() + f.values.size());
    return {{"schema", 1},
            {"kind", "scalar-field"},
            {"component", component},
            {"surface", surface_to_json(*f.surface)},
            {"shape", {f.surface->n1(), f.surface->n2()}},
            {"layout", "row-major"},
            {"data", data}};
}

inline ScalarField scalar_from_json(const json& j, SurfacePtr s = nullptr) {
    if (!s) s = surface_from_json(j.at("surface"));
    auto data = j.at("data").get<std::vector<double>>();
    require(Eigen::Index(data.size()) == s->size(), ErrorCode::Io, "payload size does not match surface");
    return ScalarField(s, Eigen::Map<Vec>(data.data(), Eigen::Index(data.size())));
}

} // namespace ahs

#pragma once

#include "axieuler/field.hpp"

#include <cmath>
#include <limits>

namespace axieuler {

inline constexpr double infinity = std::numeric_limits<double>::infinity();

/// 3-D measure 2 pi r dr dz, or the toroidal (r, z) measure dr dz.
enum class Measure { three_d, toroidal };

struct NormSpec {
    double p = 2.0;
    double sigma = 0.0; ///< weight r^{-sigma}
    Measure measure = Measure::three_d;

    void validate() const {
        if (!(p >= 1.0)) throw ValidationError("NormSpec: p must be >= 1");
        if (!std::isfinite(sigma)) throw ValidationError("NormSpec: sigma must be finite");
    }
    /// sigma in (-2/p', 2/p), the admissible range for the beta/lambda comparison.
    bool sigma_admissible() const {
        // -2/p' = -2 (1 - 1/p); both ends open.
        const double inv_p = std::isinf(p) ? 0.0 : 1.0 / p;
        return sigma > -2.0 * (1.0 - inv_p) && sigma < 2.0 * inv_p;
    }
};

struct SupLocation {
    double value = 0.0;
    double r = 0.0;
    double z = 0.0;
};

namespace detail {

template <class Magnitude>
double weighted_norm_impl(const AxiGrid& g, const NormSpec& spec, Magnitude&& mag) {
    spec.validate();
    if (std::isinf(spec.p)) {
        double m = 0.0;
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.nr; ++j) m = std::max(m, std::pow(g.r(j), -spec.sigma) * mag(j, k));
        return m;
    }
    double acc = 0.0;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            const double rj = g.r(j);
            double w = std::pow(rj, -spec.sigma * spec.p);
            if (spec.measure == Measure::three_d) w *= 2.0 * pi * rj;
            acc += std::pow(mag(j, k), spec.p) * w;
        }
    return std::pow(acc * g.dr * g.dz, 1.0 / spec.p);
}

} // namespace detail

/// ||r^{-sigma} f||_{L^p} with the measure chosen by `spec`.
inline double weighted_norm(const AxiField& f, const NormSpec& spec) {
    return detail::weighted_norm_impl(f.grid(), spec, [&](int j, int k) { return std::abs(f(j, k)); });
}

/// Same, for the pointwise Euclidean magnitude of a vector field.
inline double weighted_norm(const AxiVectorField& v, const NormSpec& spec) {
    return detail::weighted_norm_impl(v.grid(), spec, [&](int j, int k) {
        return std::sqrt(v.ur(j, k) * v.ur(j, k) + v.utheta(j, k) * v.utheta(j, k) + v.uz(j, k) * v.uz(j, k));
    });
}

/// Grid maximum of r^{-a} |f| together with where it is attained.
inline SupLocation weighted_sup(const AxiField& f, double a) {
    const AxiGrid& g = f.grid();
    SupLocation s;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) {
            const double v = std::pow(g.r(j), -a) * std::abs(f(j, k));
            if (v > s.value) s = {v, g.r(j), g.z(k)};
        }
    return s;
}

/// Integral of f against 2 pi r dr dz (three_d) or dr dz.
inline double integrate(const AxiField& f, Measure m = Measure::three_d) {
    const AxiGrid& g = f.grid();
    double acc = 0.0;
    for (int k = 0; k < g.nz; ++k)
        for (int j = 0; j < g.nr; ++j) acc += f(j, k) * (m == Measure::three_d ? 2.0 * pi * g.r(j) : 1.0);
    return acc * g.dr * g.dz;
}

} // namespace axieuler

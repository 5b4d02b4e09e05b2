#pragma once

#include "hesslab/hessian.hpp"

namespace hesslab {

// One node of the discrete scheme: H(v) = H0 + v dH, affine in the center
// value v. dH is -1/h^2 times the identity wherever the pure stencils are
// centered; one-sided mixed fallbacks add small off-diagonal terms.
struct NodeSystem {
    Herm H0;
    Herm dH;
    bool low_order = false;
};

inline NodeSystem assemble_node(const Grid& g, const double* u, int64_t id) {
    NodeSystem ns;
    complex_hessian_at(g, u, id, 0.0, ns.H0, &ns.dH, ns.low_order);
    return ns;
}

// Largest center value v such that sigma_k(H(v)) >= 0 for k < m and
// sigma_m(H(v)) >= F (the Garding cone constraint with prescribed sigma_m
// level). Closed forms for n <= 2 when the center dependence is the plain
// -1/h^2 diagonal; monotone bisection otherwise.
inline double admissible_center(const Grid& g, const NodeSystem& ns, int m, double F,
                                double v_hint) {
    const int n = g.spec.n;
    const double ih2 = 1.0 / (g.h * g.h);

    const bool plain_diag = [&] {
        for (int i = 0; i < n; ++i) {
            if (std::abs(ns.dH.at(i, i).real() + ih2) > 1e-9 * ih2) return false;
            for (int j = i + 1; j < n; ++j)
                if (std::abs(ns.dH.at(i, j)) > 1e-12 * ih2) return false;
        }
        return true;
    }();

    if (plain_diag && n == 1) {
        return (ns.H0.at(0, 0).real() - F) * g.h * g.h;
    }
    if (plain_diag && n == 2) {
        const double a1 = ns.H0.at(0, 0).real(), a2 = ns.H0.at(1, 1).real();
        if (m == 1) return 0.5 * (a1 + a2 - F) * g.h * g.h;
        // m = 2: minus root of (a1-w)(a2-w) - |c|^2 = F keeps sigma_1 >= 0
        const double c2 = std::norm(ns.H0.at(0, 1));
        const double disc = (a1 - a2) * (a1 - a2) + 4.0 * (c2 + std::max(F, 0.0));
        const double w = 0.5 * ((a1 + a2) - std::sqrt(disc));
        return w * g.h * g.h;
    }

    // generic monotone bisection on the cone predicate
    auto admissible = [&](double v) {
        Herm H = ns.H0;
        for (int i = 0; i < n * n; ++i)
            H.a[static_cast<size_t>(i)] += v * ns.dH.a[static_cast<size_t>(i)];
        for (int k = 1; k < m; ++k)
            if (sigma_of_matrix(H, k) < 0.0) return false;
        return sigma_of_matrix(H, m) >= F;
    };
    double step = std::max(g.h * g.h, 1e-8);
    double lo = v_hint, hi = v_hint;
    int guard = 0;
    while (!admissible(lo) && ++guard < 80) {
        hi = lo;
        lo -= step;
        step *= 2.0;
    }
    if (guard >= 80) return v_hint;  // pathological node; leave unchanged
    step = std::max(g.h * g.h, 1e-8);
    guard = 0;
    while (admissible(hi) && ++guard < 80) {
        lo = hi;
        hi += step;
        step *= 2.0;
    }
    for (int it = 0; it < 80; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (admissible(mid))
            lo = mid;
        else
            hi = mid;
    }
    return lo;
}

inline double admissible_center(const Grid& g, const double* u, int64_t id, int m, double F,
                                double v_hint) {
    const NodeSystem ns = assemble_node(g, u, id);
    return admissible_center(g, ns, m, F, v_hint);
}

// Fused closed-form roots for "plain" nodes whose full centered stencil
// carries values; these dominate the sweeps and skip the generic assembly.
struct SweepPlan {
    std::vector<uint8_t> plain;  // parallel to grid.interior_nodes
};

inline SweepPlan build_sweep_plan(const Grid& g) {
    SweepPlan plan;
    plan.plain.assign(g.interior_nodes.size(), 0);
    const int d = g.dim();
    for (size_t s = 0; s < g.interior_nodes.size(); ++s) {
        const int64_t id = g.interior_nodes[s];
        const auto c = g.coords_of(id);
        bool ok = true;
        for (int a = 0; a < d && ok; ++a)
            if (c[static_cast<size_t>(a)] < 1 || c[static_cast<size_t>(a)] > g.res - 2) ok = false;
        for (int a = 0; a < d && ok; ++a) {
            const int64_t sa = g.stride[static_cast<size_t>(a)];
            if (!g.carries_value(id + sa) || !g.carries_value(id - sa)) ok = false;
            for (int b = a + 1; b < d && ok; ++b) {
                const int64_t sb = g.stride[static_cast<size_t>(b)];
                if (!g.carries_value(id + sa + sb) || !g.carries_value(id + sa - sb) ||
                    !g.carries_value(id - sa + sb) || !g.carries_value(id - sa - sb))
                    ok = false;
            }
        }
        plan.plain[s] = ok ? 1 : 0;
    }
    return plan;
}

inline double plain_root(const Grid& g, const double* u, int64_t id, int m, double F) {
    const double h2 = g.h * g.h;
    if (m == 1) {
        // sigma_1 is the quarter-Laplacian in the 2n real coordinates
        double sum = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            const int64_t sa = g.stride[static_cast<size_t>(a)];
            sum += u[id + sa] + u[id - sa];
        }
        return (sum - 4.0 * h2 * F) / (2.0 * g.dim());
    }
    // n == m == 2
    const int64_t s0 = g.stride[0], s1 = g.stride[1], s2 = g.stride[2], s3 = g.stride[3];
    const double sum1 = u[id + s0] + u[id - s0] + u[id + s1] + u[id - s1];
    const double sum2 = u[id + s2] + u[id - s2] + u[id + s3] + u[id - s3];
    auto cross = [&](int64_t sa, int64_t sb) {
        return u[id + sa + sb] - u[id + sa - sb] - u[id - sa + sb] + u[id - sa - sb];
    };
    const double inv4h2 = 0.25 / h2;
    const double cre = 0.25 * (cross(s0, s2) + cross(s1, s3)) * inv4h2;
    const double cim = 0.25 * (cross(s0, s3) - cross(s1, s2)) * inv4h2;
    const double p = sum1 * inv4h2, q = sum2 * inv4h2;
    const double c2 = cre * cre + cim * cim;
    const double disc = (p - q) * (p - q) + 4.0 * (c2 + std::max(F, 0.0));
    return 0.5 * ((p + q) - std::sqrt(disc)) * h2;
}

}  // namespace hesslab

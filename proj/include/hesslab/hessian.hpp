#pragma once

#include "hesslab/domain.hpp"

namespace hesslab {

namespace detail {

// Pure second difference along real axis `a`, exact for quadratics. Centered
// when both neighbors carry values, else one-sided (also quadratic-exact).
// `dcenter` is the derivative of the value with respect to u[idx].
inline bool pure_second(const Grid& g, const double* u, int64_t idx, int a, double center,
                        double& value, double& dcenter, bool& low_order) {
    const int64_t s = g.stride[static_cast<size_t>(a)];
    const double ih2 = 1.0 / (g.h * g.h);
    const bool okp = g.carries_value(idx + s), okm = g.carries_value(idx - s);
    if (okp && okm) {
        value = (u[idx + s] - 2.0 * center + u[idx - s]) * ih2;
        dcenter = -2.0 * ih2;
        return true;
    }
    for (int sgn : {+1, -1}) {
        const int64_t n1 = idx + sgn * s, n2 = idx + 2 * sgn * s;
        if (g.carries_value(n1) && g.carries_value(n2)) {
            value = (center - 2.0 * u[n1] + u[n2]) * ih2;
            dcenter = ih2;
            low_order = true;
            return true;
        }
    }
    return false;
}

// Mixed second difference d^2u/dx_a dx_b (a != b), exact for quadratics in
// all variants. Falls back from the centered 4-point cross to half-sided and
// fully one-sided forms when corners are missing; one-sided forms are O(h)
// and flagged low-order.
inline bool mixed_second(const Grid& g, const double* u, int64_t idx, int a, int b, double center,
                         double& value, double& dcenter, bool& low_order) {
    const int64_t sa = g.stride[static_cast<size_t>(a)], sb = g.stride[static_cast<size_t>(b)];
    const double ih2 = 1.0 / (g.h * g.h);
    dcenter = 0.0;
    const bool pp = g.carries_value(idx + sa + sb), pm = g.carries_value(idx + sa - sb);
    const bool mp = g.carries_value(idx - sa + sb), mm = g.carries_value(idx - sa - sb);
    if (pp && pm && mp && mm) {
        value = (u[idx + sa + sb] - u[idx + sa - sb] - u[idx - sa + sb] + u[idx - sa - sb]) * 0.25 * ih2;
        return true;
    }
    // Half-sided: centered in a, one step in b.
    for (int tb : {+1, -1}) {
        const int64_t off = idx + tb * sb;
        if (g.carries_value(idx + sa) && g.carries_value(idx - sa) && g.carries_value(off + sa) &&
            g.carries_value(off - sa)) {
            value = (u[off + sa] - u[off - sa] - u[idx + sa] + u[idx - sa]) * tb * 0.5 * ih2;
            low_order = true;
            return true;
        }
    }
    for (int ta : {+1, -1}) {
        const int64_t off = idx + ta * sa;
        if (g.carries_value(idx + sb) && g.carries_value(idx - sb) && g.carries_value(off + sb) &&
            g.carries_value(off - sb)) {
            value = (u[off + sb] - u[off - sb] - u[idx + sb] + u[idx - sb]) * ta * 0.5 * ih2;
            low_order = true;
            return true;
        }
    }
    // Fully one-sided corner formula; involves the center value.
    for (int ta : {+1, -1}) {
        for (int tb : {+1, -1}) {
            const int64_t n_a = idx + ta * sa, n_b = idx + tb * sb, n_ab = idx + ta * sa + tb * sb;
            if (g.carries_value(n_a) && g.carries_value(n_b) && g.carries_value(n_ab)) {
                value = (u[n_ab] - u[n_a] - u[n_b] + center) * ta * tb * ih2;
                dcenter = static_cast<double>(ta * tb) * ih2;
                low_order = true;
                return true;
            }
        }
    }
    return false;
}

}  // namespace detail

// Discrete complex Hessian H_jk ~ d^2 u / dz_j dz_bar_k at one node, with the
// center value replaceable (the solver varies it). dH is the derivative of H
// with respect to the center value. Combination rule:
//   H_jk = (1/4)(u_{x_j x_k} + u_{y_j y_k}) + (i/4)(u_{x_j y_k} - u_{y_j x_k}).
inline void complex_hessian_at(const Grid& g, const double* u, int64_t idx, double center, Herm& H,
                               Herm* dH, bool& low_order) {
    const int n = g.spec.n;
    H = Herm::zero(n);
    if (dH) *dH = Herm::zero(n);
    low_order = false;
    double v, dv;
    for (int j = 0; j < n; ++j) {
        for (int k = j; k < n; ++k) {
            cplx hjk = 0.0, djk = 0.0;
            if (j == k) {
                if (!detail::pure_second(g, u, idx, 2 * j, center, v, dv, low_order))
                    throw LabError("stencil incomplete");
                hjk += 0.25 * v;
                djk += 0.25 * dv;
                if (!detail::pure_second(g, u, idx, 2 * j + 1, center, v, dv, low_order))
                    throw LabError("stencil incomplete");
                hjk += 0.25 * v;
                djk += 0.25 * dv;
            } else {
                if (!detail::mixed_second(g, u, idx, 2 * j, 2 * k, center, v, dv, low_order))
                    throw LabError("stencil incomplete");
                hjk += 0.25 * v;
                djk += 0.25 * dv;
                if (!detail::mixed_second(g, u, idx, 2 * j + 1, 2 * k + 1, center, v, dv, low_order))
                    throw LabError("stencil incomplete");
                hjk += 0.25 * v;
                djk += 0.25 * dv;
                if (!detail::mixed_second(g, u, idx, 2 * j, 2 * k + 1, center, v, dv, low_order))
                    throw LabError("stencil incomplete");
                hjk += cplx(0.0, 0.25) * v;
                djk += cplx(0.0, 0.25) * dv;
                if (!detail::mixed_second(g, u, idx, 2 * j + 1, 2 * k, center, v, dv, low_order))
                    throw LabError("stencil incomplete");
                hjk -= cplx(0.0, 0.25) * v;
                djk -= cplx(0.0, 0.25) * dv;
            }
            H.at(j, k) = hjk;
            H.at(k, j) = std::conj(hjk);
            if (dH) {
                dH->at(j, k) = djk;
                dH->at(k, j) = std::conj(djk);
            }
        }
    }
    H.symmetrize();
    if (dH) dH->symmetrize();
}

// Per-interior-node n x n complex Hessian field.
struct HermitianField {
    const Grid* grid = nullptr;
    std::vector<Herm> H;           // parallel to grid->interior_nodes
    std::vector<uint8_t> low_order;
    std::vector<int32_t> slot;     // node index -> slot, -1 elsewhere

    int32_t slot_of(int64_t idx) const { return slot[static_cast<size_t>(idx)]; }
    const Herm& at_node(int64_t idx) const { return H[static_cast<size_t>(slot_of(idx))]; }
};

inline HermitianField complex_hessian(const GridFunction& u) {
    const Grid& g = *u.grid;
    HermitianField f;
    f.grid = &g;
    f.H.resize(g.interior_nodes.size());
    f.low_order.resize(g.interior_nodes.size());
    f.slot.assign(static_cast<size_t>(g.total), -1);
    for (size_t s = 0; s < g.interior_nodes.size(); ++s) {
        const int64_t id = g.interior_nodes[s];
        bool lo = false;
        complex_hessian_at(g, u.values.data(), id, u[id], f.H[s], nullptr, lo);
        f.low_order[s] = lo ? 1 : 0;
        f.slot[static_cast<size_t>(id)] = static_cast<int32_t>(s);
    }
    return f;
}

// sigma_k of the eigenvalue vector, per interior node.
struct SigmaField {
    const Grid* grid = nullptr;
    int k = 0;
    std::vector<double> values;  // parallel to grid->interior_nodes
};

inline SigmaField sigma_k(const HermitianField& hf, int k) {
    const int n = hf.grid->spec.n;
    if (k < 1 || k > n) throw LabError("sigma_k order out of range");
    SigmaField s;
    s.grid = hf.grid;
    s.k = k;
    s.values.resize(hf.H.size());
    for (size_t i = 0; i < hf.H.size(); ++i) {
        const auto ev = hermitian_eigenvalues(hf.H[i]);
        const auto e = elementary_symmetric(ev.data(), n);
        s.values[i] = e[static_cast<size_t>(k)];
    }
    return s;
}

struct MshReport {
    bool ok = false;
    GridFunction violation_map;  // min over k <= m of sigma_k, per node
    double worst = 0.0;
    int64_t worst_node = -1;
};

inline MshReport is_m_subharmonic(const GridFunction& u, int m, double tol) {
    const Grid& g = *u.grid;
    MshReport r;
    r.violation_map = GridFunction(g, 0.0);
    r.worst = std::numeric_limits<double>::infinity();
    for (int64_t id : g.interior_nodes) {
        Herm H;
        bool lo = false;
        complex_hessian_at(g, u.values.data(), id, u[id], H, nullptr, lo);
        double worst_k = std::numeric_limits<double>::infinity();
        for (int k = 1; k <= m; ++k) worst_k = std::min(worst_k, sigma_of_matrix(H, k));
        r.violation_map[id] = worst_k;
        if (worst_k < r.worst) {
            r.worst = worst_k;
            r.worst_node = id;
        }
    }
    r.ok = r.worst >= -tol;
    return r;
}

// Affine slice {x_axis = offset for each pinned axis} carrying a uniform
// surface density (mass per unit (2n-d)-dimensional volume).
struct SliceMeasure {
    std::vector<int> axes;
    std::vector<double> offsets;
    double surface_density = 0.0;
};

// Borel measure as density relative to beta^n plus singular slices. Masses
// are Lebesgue integrals of the density (the global 2^n n! of beta^n cancels
// in every verified inequality and is dropped throughout).
struct HessianDensity {
    const Grid* grid = nullptr;
    std::vector<double> ac;  // full-size array; 0 off interior
    std::vector<SliceMeasure> slices;
    bool warning = false;

    double ac_at(int64_t idx) const { return ac[static_cast<size_t>(idx)]; }

    // Slice mass landing in the cell of `idx` (one-cell resolution).
    double slice_mass_in_cell(int64_t idx) const {
        if (slices.empty()) return 0.0;
        const Grid& g = *grid;
        const Point p = g.point_of(idx);
        double total = 0.0;
        for (const auto& sl : slices) {
            bool hit = true;
            for (size_t i = 0; i < sl.axes.size(); ++i) {
                if (std::abs(p[sl.axes[i]] - sl.offsets[i]) > 0.5 * g.h + 1e-12) {
                    hit = false;
                    break;
                }
            }
            if (!hit) continue;
            double free_vol = 1.0;
            const int free_axes = g.dim() - static_cast<int>(sl.axes.size());
            for (int a = 0; a < free_axes; ++a) free_vol *= g.h;
            total += sl.surface_density * free_vol;
        }
        return total;
    }

    double cell_mass(int64_t idx) const { return ac_at(idx) * grid->cell_volume() + slice_mass_in_cell(idx); }

    double total_mass() const {
        std::vector<double> parts;
        parts.reserve(grid->interior_nodes.size() + grid->band_nodes.size());
        for (int64_t id : grid->interior_nodes) parts.push_back(cell_mass(id));
        for (int64_t id : grid->band_nodes) parts.push_back(cell_mass(id));
        return pairwise_sum(parts);
    }
};

// Fraction of the node cell inside the domain, judged by the defining
// function's sign at cell corners. Cells well inside skip the corner scan.
inline double cell_inside_fraction(const Grid& g, int64_t idx) {
    const Point p = g.point_of(idx);
    const double sd = g.spec.signed_distance(p);
    const int d = g.dim();
    const double corner_reach = 0.5 * g.h * std::sqrt(static_cast<double>(d));
    if (sd <= -corner_reach) return 1.0;
    int inside = 0;
    const int corners = 1 << d;
    for (int c = 0; c < corners; ++c) {
        Point q = p;
        for (int a = 0; a < d; ++a) q[a] += ((c >> a) & 1) ? 0.5 * g.h : -0.5 * g.h;
        if (g.spec.rho(q) < 0.0) ++inside;
    }
    return static_cast<double>(inside) / static_cast<double>(corners);
}

// (dd^c u)^m ^ beta^(n-m) = [m!(n-m)!/n!] sigma_m(u) beta^n as an
// absolutely continuous density; negative values clamped to 0 and flagged.
inline HessianDensity hessian_measure(const GridFunction& u, int m, double tol = 1e-8) {
    const Grid& g = *u.grid;
    if (m < 1 || m > g.spec.n) throw LabError("hessian order out of range");
    HessianDensity d;
    d.grid = &g;
    d.ac.assign(static_cast<size_t>(g.total), 0.0);
    const double pref = 1.0 / static_cast<double>(binomial(g.spec.n, m));
    for (int64_t id : g.interior_nodes) {
        Herm H;
        bool lo = false;
        complex_hessian_at(g, u.values.data(), id, u[id], H, nullptr, lo);
        for (int k = 1; k <= m; ++k)
            if (sigma_of_matrix(H, k) < -tol) d.warning = true;
        d.ac[static_cast<size_t>(id)] = pref * std::max(sigma_of_matrix(H, m), 0.0);
    }
    // Band ring completion: one-sided stencils where available, so mass near
    // the boundary is not silently dropped from quadratures.
    for (int64_t id : g.band_nodes) {
        try {
            Herm H;
            bool lo = false;
            complex_hessian_at(g, u.values.data(), id, u[id], H, nullptr, lo);
            d.ac[static_cast<size_t>(id)] = pref * std::max(sigma_of_matrix(H, m), 0.0);
        } catch (const LabError&) {
            // no usable stencil: leave density 0 in this cell
        }
    }
    return d;
}

// I_m(u) = integral of the Hessian density over the domain, midpoint
// quadrature with boundary cells clipped by corner signs.
inline double energy_I_m(const GridFunction& u, int m, double tol = 1e-8) {
    const Grid& g = *u.grid;
    const HessianDensity d = hessian_measure(u, m, tol);
    const double vol = g.cell_volume();
    std::vector<double> parts;
    parts.reserve(g.interior_nodes.size() + g.band_nodes.size());
    for (int64_t id : g.interior_nodes)
        parts.push_back(d.ac_at(id) * vol * cell_inside_fraction(g, id));
    for (int64_t id : g.band_nodes)
        parts.push_back(d.ac_at(id) * vol * cell_inside_fraction(g, id));
    return pairwise_sum(parts);
}

struct ComparisonReport {
    bool holds = false;
    double lhs = 0.0;
    double rhs = 0.0;
    int64_t set_size = 0;
};

// Discrete comparison principle check over {u < v}:
//   integral_{u<v} sigma-density(v) <= integral_{u<v} sigma-density(u),
// requiring u >= v - tol on the boundary band.
inline ComparisonReport comparison_check(const GridFunction& u, const GridFunction& v, int m,
                                         double tol) {
    const Grid& g = *u.grid;
    for (int64_t id : g.band_nodes)
        if (u[id] < v[id] - tol) throw LabError("boundary ordering fails");
    const HessianDensity du = hessian_measure(u, m), dv = hessian_measure(v, m);
    const double vol = g.cell_volume();
    std::vector<double> lp, rp;
    ComparisonReport r;
    for (int64_t id : g.interior_nodes) {
        if (u[id] < v[id]) {
            lp.push_back(dv.ac_at(id) * vol);
            rp.push_back(du.ac_at(id) * vol);
            ++r.set_size;
        }
    }
    r.lhs = pairwise_sum(lp);
    r.rhs = pairwise_sum(rp);
    r.holds = r.lhs <= r.rhs * (1.0 + tol) + tol;
    return r;
}

// Polarized mixed sigma_m by inclusion-exclusion; PolarSigma(H,...,H) =
// sigma_m(H). Needed for the Cegrell-type mixed energies, m <= 3.
inline double mixed_sigma(const Herm* const* hs, int m) {
    if (m == 1) return sigma_of_matrix(*hs[0], 1);
    const int n = hs[0]->n;
    double total = 0.0;
    const int subsets = 1 << m;
    for (int t = 1; t < subsets; ++t) {
        Herm sum = Herm::zero(n);
        int bits = 0;
        for (int i = 0; i < m; ++i)
            if ((t >> i) & 1) {
                sum += *hs[i];
                ++bits;
            }
        const double sgn = ((m - bits) % 2 == 0) ? 1.0 : -1.0;
        total += sgn * sigma_of_matrix(sum, m);
    }
    double fact = 1.0;
    for (int i = 2; i <= m; ++i) fact *= i;
    return total / fact;
}

// integral of dd^c u_1 ^ ... ^ dd^c u_m ^ beta^(n-m) over the domain, as a
// beta^n-normalized density quadrature. Optionally weighted by a node factor.
inline double mixed_energy(const std::vector<const GridFunction*>& us, int m,
                           const std::function<double(int64_t)>& weight = nullptr) {
    const Grid& g = *us[0]->grid;
    const double pref = 1.0 / static_cast<double>(binomial(g.spec.n, m));
    const double vol = g.cell_volume();
    std::vector<double> parts;
    parts.reserve(g.interior_nodes.size());
    std::vector<Herm> H(static_cast<size_t>(m));
    std::vector<const Herm*> hp(static_cast<size_t>(m));
    for (int i = 0; i < m; ++i) hp[static_cast<size_t>(i)] = &H[static_cast<size_t>(i)];
    for (int64_t id : g.interior_nodes) {
        bool lo = false;
        for (int i = 0; i < m; ++i)
            complex_hessian_at(g, us[static_cast<size_t>(i)]->values.data(), id,
                               (*us[static_cast<size_t>(i)])[id], H[static_cast<size_t>(i)], nullptr, lo);
        double w = weight ? weight(id) : 1.0;
        parts.push_back(w * pref * mixed_sigma(hp.data(), m) * vol);
    }
    return pairwise_sum(parts);
}

struct PseudoconvexityReport {
    bool ok = false;
    Point worst_node{};
    double worst_value = 0.0;
    double lambda = 0.0;  // rescaling factor applied to rho
};

// Strong m-pseudoconvexity: certifies existence of a rescaling lambda*rho
// with sigma_k(lambda*rho) >= 1 - tol for k = 1..m at every interior node.
// Since sigma_k(lambda*rho) = lambda^k sigma_k(rho), this only requires
// min_z sigma_k(rho) > 0 for each k.
inline PseudoconvexityReport check_strong_m_pseudoconvexity(const DomainSpec& spec, const Grid& grid,
                                                            double tol) {
    GridFunction rho(grid);
    for (int64_t id : grid.interior_nodes) rho[id] = spec.rho(grid.point_of(id));
    for (int64_t id : grid.band_nodes) rho[id] = spec.rho(grid.point_of(id));

    PseudoconvexityReport rep;
    std::array<double, kMaxComplexDim> vmin{};
    vmin.fill(std::numeric_limits<double>::infinity());
    std::array<int64_t, kMaxComplexDim> vnode{};
    try {
        for (int64_t id : grid.interior_nodes) {
            Herm H;
            bool lo = false;
            complex_hessian_at(grid, rho.values.data(), id, rho[id], H, nullptr, lo);
            for (int k = 1; k <= spec.m; ++k) {
                const double s = sigma_of_matrix(H, k);
                if (s < vmin[static_cast<size_t>(k - 1)]) {
                    vmin[static_cast<size_t>(k - 1)] = s;
                    vnode[static_cast<size_t>(k - 1)] = id;
                }
            }
        }
    } catch (const LabError&) {
        throw LabError("rho not differentiable");
    }
    double lambda = 0.0;
    int worst_k = 0;
    for (int k = 1; k <= spec.m; ++k) {
        const double v = vmin[static_cast<size_t>(k - 1)];
        if (v <= tol) {
            rep.ok = false;
            rep.worst_node = grid.point_of(vnode[static_cast<size_t>(k - 1)]);
            rep.worst_value = v;
            rep.lambda = 0.0;
            return rep;
        }
        const double lk = std::pow(1.0 / v, 1.0 / static_cast<double>(k));
        if (lk > lambda) {
            lambda = lk;
            worst_k = k;
        }
    }
    lambda = std::max(lambda, 1.0);
    rep.lambda = lambda;
    double worst_scaled = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= spec.m; ++k) {
        const double sv = std::pow(lambda, k) * vmin[static_cast<size_t>(k - 1)];
        if (sv < worst_scaled) {
            worst_scaled = sv;
            worst_k = k;
        }
    }
    rep.worst_value = worst_scaled;
    rep.worst_node = grid.point_of(vnode[static_cast<size_t>(worst_k - 1)]);
    rep.ok = worst_scaled >= 1.0 - tol;
    return rep;
}

}  // namespace hesslab

#pragma once

#include "hesslab/envelope.hpp"

namespace hesslab {

enum class SolveScheme { gauss_seidel_root, pseudo_time };

struct SolveOptions {
    double tol_residual = 1e-9;  // max nodal update at convergence
    int max_iters = 60000;
    SolveScheme scheme = SolveScheme::gauss_seidel_root;
    double damping = 0.7;   // in (0, 1]; halved automatically on residual increase
    bool multigrid = true;  // V-cycle acceleration of the m = 1 (linear) case

    void validate() const {
        if (!(tol_residual > 0.0)) throw LabError("tol_residual must be positive");
        if (max_iters < 1) throw LabError("max_iters must be >= 1");
        if (!(damping > 0.0) || damping > 1.0) throw LabError("damping outside (0,1]");
    }
};

struct SolutionReport {
    GridFunction u;
    double residual_L1 = 0.0;    // |sigma_m-density(u) - mu_ac| integrated over interior
    double boundary_err = 0.0;   // max band constraint violation
    double msh_violation = 0.0;  // most negative sigma_k over k <= m
    int iterations = 0;
    bool converged = false;
    double damping_final = 0.0;
};

namespace detail {

// Dirichlet slaving of a band node: quadratic interpolation along the most
// inward axis through the exact boundary crossing (value g there) and up to
// two inward anchors. Exact for solutions whose restriction to the line is
// quadratic, which keeps the flat-density oracles exact.
struct BandPlan {
    int64_t node = 0;
    double g_value = 0.0;   // boundary datum at the crossing / projection
    double w_g = 1.0;       // Lagrange weights
    double w_a1 = 0.0;
    double w_a2 = 0.0;
    int64_t a1 = -1, a2 = -1;
};

inline std::vector<BandPlan> build_band_plans(const Grid& g,
                                              const std::function<double(const Point&)>& bdata) {
    std::vector<BandPlan> plans;
    plans.reserve(g.band_nodes.size());
    const int d = g.dim();
    for (int64_t id : g.band_nodes) {
        BandPlan plan;
        plan.node = id;
        const Point p = g.point_of(id);
        // most inward axis direction
        int best_a = 0, best_s = 1;
        double best_sd = std::numeric_limits<double>::infinity();
        for (int a = 0; a < d; ++a) {
            for (int s : {+1, -1}) {
                Point q = p;
                q[a] += s * g.h;
                const double sd = g.spec.signed_distance(q);
                if (sd < best_sd) {
                    best_sd = sd;
                    best_a = a;
                    best_s = s;
                }
            }
        }
        // outward crossing along -e: bisection on the signed distance
        double t_lo = 0.0, t_hi = 0.0;
        bool found = false;
        for (double t = 0.5 * g.h; t <= 2.5 * g.h + 1e-15; t += 0.5 * g.h) {
            Point q = p;
            q[best_a] -= best_s * t;
            if (g.spec.signed_distance(q) > 0.0) {
                t_hi = t;
                t_lo = t - 0.5 * g.h;
                found = true;
                break;
            }
        }
        const auto coords = g.coords_of(id);
        auto shifted = [&](int steps) -> int64_t {
            auto c = coords;
            c[static_cast<size_t>(best_a)] += best_s * steps;
            if (c[static_cast<size_t>(best_a)] < 0 || c[static_cast<size_t>(best_a)] >= g.res)
                return -1;
            const int64_t nid = g.index_of(c);
            return g.carries_value(nid) ? nid : -1;
        };
        const int64_t a1 = shifted(1), a2 = shifted(2);
        if (!found || a1 < 0) {
            // projection fallback: pin to the nearest boundary value
            plan.g_value = bdata(g.spec.project_to_boundary(p));
            plans.push_back(plan);
            continue;
        }
        for (int it = 0; it < 60; ++it) {
            const double mid = 0.5 * (t_lo + t_hi);
            Point q = p;
            q[best_a] -= best_s * mid;
            (g.spec.signed_distance(q) > 0.0 ? t_hi : t_lo) = mid;
        }
        const double t = 0.5 * (t_lo + t_hi);
        Point crossing = p;
        crossing[best_a] -= best_s * t;
        plan.g_value = bdata(crossing);
        const double h = g.h;
        if (a2 >= 0) {
            plan.w_g = 2.0 * h * h / ((t + h) * (t + 2.0 * h));
            plan.w_a1 = 2.0 * t / (t + h);
            plan.w_a2 = -t / (t + 2.0 * h);
            plan.a1 = a1;
            plan.a2 = a2;
        } else {
            plan.w_g = h / (t + h);
            plan.w_a1 = t / (t + h);
            plan.a1 = a1;
        }
        plans.push_back(plan);
    }
    return plans;
}

inline double band_target(const BandPlan& plan, const GridFunction& u) {
    double v = plan.w_g * plan.g_value;
    if (plan.a1 >= 0) v += plan.w_a1 * u[plan.a1];
    if (plan.a2 >= 0) v += plan.w_a2 * u[plan.a2];
    return v;
}

// sigma_1 of the discrete Hessian uses only pure second differences; the
// m = 1 problem is linear and admits a geometric multigrid solve.
inline double sigma1_apply(const Grid& g, const double* u, int64_t id, bool plain) {
    if (plain) {
        double acc = 0.0;
        for (int a = 0; a < g.dim(); ++a) {
            const int64_t sa = g.stride[static_cast<size_t>(a)];
            acc += u[id + sa] + u[id - sa];
        }
        return (acc - 2.0 * g.dim() * u[id]) * 0.25 / (g.h * g.h);
    }
    double acc = 0.0, v, dv;
    bool lo = false;
    for (int a = 0; a < g.dim(); ++a) {
        if (!pure_second(g, u, id, a, u[id], v, dv, lo)) throw LabError("stencil incomplete");
        acc += v;
    }
    return 0.25 * acc;
}

struct MgLevel {
    Grid grid;
    std::vector<BandPlan> plans;  // finest: real datum; coarser: zero crossings
    SweepPlan splan;
    GridFunction u, f;
};

// One damped Gauss-Seidel smoothing pass for the m = 1 level, band slaves
// refreshed at the end; returns the max nodal change.
inline double mg_smooth(MgLevel& L, double damping) {
    const Grid& g = L.grid;
    double max_change = 0.0;
    for (size_t s = 0; s < g.interior_nodes.size(); ++s) {
        const int64_t id = g.interior_nodes[s];
        const double F = L.f[id];
        const double vstar = L.splan.plain[s]
                                 ? plain_root(g, L.u.values.data(), id, 1, F)
                                 : admissible_center(g, L.u.values.data(), id, 1, F, L.u[id]);
        const double vnew = L.u[id] + damping * (vstar - L.u[id]);
        max_change = std::max(max_change, std::abs(vnew - L.u[id]));
        L.u[id] = vnew;
    }
    for (const auto& plan : L.plans) {
        const double t = band_target(plan, L.u);
        max_change = std::max(max_change, std::abs(t - L.u[plan.node]));
        L.u[plan.node] = t;
    }
    return max_change;
}

// Multilinear prolongation of a coarse field onto fine interior nodes.
inline void mg_prolong_add(const Grid& gf, const Grid& gc, const GridFunction& coarse,
                           GridFunction& fine, double& max_corr) {
    for (int64_t id : gf.interior_nodes) {
        const auto cf = gf.coords_of(id);
        double acc = 0.0, wsum = 0.0;
        const int corners = 1 << gf.dim();
        for (int corner = 0; corner < corners; ++corner) {
            std::array<int, kMaxRealDim> cc{};
            double w = 1.0;
            bool skip = false;
            for (int a = 0; a < gf.dim(); ++a) {
                const int fi = cf[static_cast<size_t>(a)];
                const int lo = fi / 2, rem = fi % 2;
                const int bit = (corner >> a) & 1;
                if (rem == 0 && bit == 1) {
                    skip = true;
                    break;
                }
                cc[static_cast<size_t>(a)] = lo + (rem ? bit : 0);
                w *= rem ? 0.5 : 1.0;
            }
            if (skip) continue;
            const int64_t cid = gc.index_of(cc);
            if (!gc.carries_value(cid) || std::isnan(coarse[cid])) continue;
            acc += w * coarse[cid];
            wsum += w;
        }
        if (wsum > 0.25) {
            const double corr = acc / wsum;
            fine[id] += corr;
            max_corr = std::max(max_corr, std::abs(corr));
        }
    }
}

inline double mg_vcycle(std::vector<MgLevel>& levels, size_t k, double damping, double coarse_tol) {
    MgLevel& L = levels[k];
    if (k + 1 == levels.size()) {
        double change = 0.0;
        for (int it = 0; it < 2000; ++it) {
            change = mg_smooth(L, damping);
            if (change < coarse_tol) break;
        }
        return change;
    }
    double max_change = 0.0;
    for (int s = 0; s < 3; ++s) max_change = std::max(max_change, mg_smooth(L, damping));
    // residual restriction by injection at coincident nodes
    MgLevel& C = levels[k + 1];
    for (int64_t id : C.grid.interior_nodes) C.u[id] = 0.0;
    for (const auto& plan : C.plans) C.u[plan.node] = 0.0;
    for (int64_t cid : C.grid.interior_nodes) {
        const auto cc = C.grid.coords_of(cid);
        std::array<int, kMaxRealDim> cf{};
        for (int a = 0; a < L.grid.dim(); ++a) cf[static_cast<size_t>(a)] = 2 * cc[static_cast<size_t>(a)];
        const int64_t fid = L.grid.index_of(cf);
        double r = 0.0;
        if (L.grid.cls(fid) == NodeClass::interior) {
            const size_t slot = static_cast<size_t>(
                std::lower_bound(L.grid.interior_nodes.begin(), L.grid.interior_nodes.end(), fid) -
                L.grid.interior_nodes.begin());
            r = L.f[fid] - sigma1_apply(L.grid, L.u.values.data(), fid, L.splan.plain[slot] != 0);
        }
        C.f[cid] = r;
    }
    mg_vcycle(levels, k + 1, damping, coarse_tol);
    double max_corr = 0.0;
    mg_prolong_add(L.grid, C.grid, C.u, L.u, max_corr);
    for (const auto& plan : L.plans) L.u[plan.node] = band_target(plan, L.u);
    max_change = std::max(max_change, max_corr);
    for (int s = 0; s < 3; ++s) max_change = std::max(max_change, mg_smooth(L, damping));
    return max_change;
}

}  // namespace detail

// Effective beta^n-normalized density of mu at a node cell, singular slices
// folded in as cell-averaged densities (one-cell resolution, mass conserved).
inline std::vector<double> effective_density(const HessianDensity& mu) {
    const Grid& g = *mu.grid;
    std::vector<double> f(static_cast<size_t>(g.total), 0.0);
    const double vol = g.cell_volume();
    for (int64_t id : g.interior_nodes) {
        const double fi = mu.ac_at(id) + mu.slice_mass_in_cell(id) / vol;
        if (fi < 0.0) throw LabError("invalid measure");
        f[static_cast<size_t>(id)] = fi;
    }
    return f;
}

// Discrete Dirichlet problem (dd^c u)^m ^ beta^(n-m) = mu, u = g on the
// boundary: nodewise damped root updates on sigma_m with the Garding cone
// enforced, band nodes slaved to the boundary datum between sweeps.
inline SolutionReport solve_dirichlet(const HessianDensity& mu,
                                      const std::function<double(const Point&)>& g_data, int m,
                                      SolveOptions opts = {},
                                      const GridFunction* initial_guess = nullptr) {
    opts.validate();
    const Grid& g = *mu.grid;
    const int n = g.spec.n;
    const double Cnm = static_cast<double>(binomial(n, m));
    const std::vector<double> f = effective_density(mu);

    SolutionReport rep;
    rep.u = GridFunction(g);
    GridFunction& u = rep.u;

    // initial guess: subsolution paraboloid + boundary datum extension;
    // refined by a coarse-grid cascade at higher resolutions
    double f_max = 0.0;
    for (int64_t id : g.interior_nodes) f_max = std::max(f_max, f[static_cast<size_t>(id)]);
    Point c = g.spec.center;
    c.dim = g.dim();
    double R2 = 0.0;
    for (int64_t id : g.band_nodes) R2 = std::max(R2, dist2(g.point_of(id), c));
    const double A = std::pow(f_max / Cnm, 1.0 / static_cast<double>(m)) * 1.05;
    if (initial_guess) {
        u = *initial_guess;
    } else {
        for (int64_t id : g.interior_nodes) {
            const Point p = g.point_of(id);
            u[id] = A * (dist2(p, c) - R2) + g_data(p);
        }
        const bool mg_path = m == 1 && opts.scheme == SolveScheme::gauss_seidel_root &&
                             opts.multigrid && g.res % 2 == 1 && g.res >= 33;
        if (!mg_path && g.res >= 25 && g.res % 2 == 1) {
            // solve on the even-index half grid, prolong multilinearly
            try {
                const Grid gc = build_grid(g.spec, (g.res + 1) / 2);
                HessianDensity muc;
                muc.grid = &gc;
                muc.ac.assign(static_cast<size_t>(gc.total), 0.0);
                for (int64_t id : gc.interior_nodes) {
                    const auto cc = gc.coords_of(id);
                    std::array<int, kMaxRealDim> cf{};
                    for (int a = 0; a < g.dim(); ++a) cf[static_cast<size_t>(a)] = 2 * cc[static_cast<size_t>(a)];
                    const int64_t fid = g.index_of(cf);
                    muc.ac[static_cast<size_t>(id)] =
                        g.carries_value(fid) ? f[static_cast<size_t>(fid)] : 0.0;
                }
                SolveOptions copts = opts;
                copts.tol_residual = std::max(opts.tol_residual, 1e-10);
                const SolutionReport crep = solve_dirichlet(muc, g_data, m, copts);
                // prolongation: coarse values at even coords, multilinear between
                for (int64_t id : g.interior_nodes) {
                    const auto cf = g.coords_of(id);
                    double acc = 0.0, wsum = 0.0;
                    const int corners = 1 << g.dim();
                    for (int corner = 0; corner < corners; ++corner) {
                        std::array<int, kMaxRealDim> cc{};
                        double w = 1.0;
                        for (int a = 0; a < g.dim(); ++a) {
                            const int fi = cf[static_cast<size_t>(a)];
                            const int lo = fi / 2, rem = fi % 2;
                            const int bit = (corner >> a) & 1;
                            if (rem == 0 && bit == 1) {
                                w = 0.0;
                                break;
                            }
                            cc[static_cast<size_t>(a)] = lo + (rem ? bit : 0);
                            w *= rem ? 0.5 : 1.0;
                        }
                        if (w == 0.0) continue;
                        const int64_t cid = gc.index_of(cc);
                        if (!gc.carries_value(cid) || std::isnan(crep.u[cid])) continue;
                        acc += w * crep.u[cid];
                        wsum += w;
                    }
                    if (wsum > 0.5) u[id] = acc / wsum;
                }
            } catch (const LabError&) {
                // cascade is best-effort; the paraboloid guess stands
            }
        }
    }
    const auto plans = detail::build_band_plans(g, g_data);
    for (const auto& plan : plans)
        u[plan.node] = plan.g_value;  // start from the crossing value

    const SweepPlan splan = build_sweep_plan(g);

    // m = 1 is linear: V-cycle multigrid when the lattice supports coarsening
    if (m == 1 && opts.scheme == SolveScheme::gauss_seidel_root && opts.multigrid &&
        g.res % 2 == 1 && g.res >= 33 && ((g.res + 1) / 2) % 2 == 1) {
        std::vector<detail::MgLevel> levels;
        levels.reserve(8);
        {
            detail::MgLevel fine;
            fine.grid = g;
            levels.push_back(std::move(fine));
            int res = g.res;
            while (res >= 33 && res % 2 == 1 && ((res + 1) / 2) % 2 == 1 && (res + 1) / 2 >= 17) {
                res = (res + 1) / 2;
                detail::MgLevel L;
                L.grid = build_grid(g.spec, res);
                levels.push_back(std::move(L));
            }
        }
        auto zero_fn = [](const Point&) { return 0.0; };
        for (size_t k = 0; k < levels.size(); ++k) {
            detail::MgLevel& L = levels[k];
            L.plans = (k == 0) ? plans : detail::build_band_plans(L.grid, zero_fn);
            L.splan = build_sweep_plan(L.grid);
            L.u = (k == 0) ? u : GridFunction(L.grid, 0.0);
            L.f = GridFunction(L.grid, 0.0);
            if (k == 0)
                for (int64_t id : g.interior_nodes) L.f[id] = Cnm * f[static_cast<size_t>(id)];
        }
        const int max_cycles = std::min(400, opts.max_iters);
        int cyc = 0;
        double change = std::numeric_limits<double>::infinity();
        for (; cyc < max_cycles; ++cyc) {
            change = detail::mg_vcycle(levels, 0, opts.damping, 0.1 * opts.tol_residual);
            if (change < opts.tol_residual) {
                rep.converged = true;
                break;
            }
        }
        u = levels[0].u;
        rep.iterations = cyc + 1;
        rep.damping_final = opts.damping;
        const HessianDensity du1 = hessian_measure(u, m, 1e-5);
        std::vector<double> res_parts;
        double viol1 = 0.0;
        for (int64_t id : g.interior_nodes) {
            res_parts.push_back(std::abs(du1.ac_at(id) - f[static_cast<size_t>(id)]) * g.cell_volume());
            Herm H;
            bool lo = false;
            complex_hessian_at(g, u.values.data(), id, u[id], H, nullptr, lo);
            viol1 = std::min(viol1, sigma_of_matrix(H, 1));
        }
        rep.residual_L1 = pairwise_sum(res_parts);
        rep.msh_violation = -viol1;
        for (const auto& plan : plans)
            rep.boundary_err =
                std::max(rep.boundary_err, std::abs(u[plan.node] - detail::band_target(plan, u)));
        return rep;
    }
    auto root_at = [&](size_t s, int64_t id) {
        const double F = Cnm * f[static_cast<size_t>(id)];
        return splan.plain[s] ? plain_root(g, u.values.data(), id, m, F)
                              : admissible_center(g, u.values.data(), id, m, F, u[id]);
    };

    double damping = opts.damping;
    double prev_change = std::numeric_limits<double>::infinity();
    const bool jacobi = opts.scheme == SolveScheme::pseudo_time;
    std::vector<double> scratch;
    if (jacobi) scratch.assign(static_cast<size_t>(g.total), 0.0);

    int it = 0;
    for (; it < opts.max_iters; ++it) {
        double max_change = 0.0;
        if (!jacobi) {
            for (size_t s = 0; s < g.interior_nodes.size(); ++s) {
                const int64_t id = g.interior_nodes[s];
                const double vnew = u[id] + damping * (root_at(s, id) - u[id]);
                max_change = std::max(max_change, std::abs(vnew - u[id]));
                u[id] = vnew;
            }
        } else {
            for (size_t s = 0; s < g.interior_nodes.size(); ++s)
                scratch[static_cast<size_t>(g.interior_nodes[s])] = root_at(s, g.interior_nodes[s]);
            for (int64_t id : g.interior_nodes) {
                const double vnew =
                    u[id] + damping * (scratch[static_cast<size_t>(id)] - u[id]);
                max_change = std::max(max_change, std::abs(vnew - u[id]));
                u[id] = vnew;
            }
        }
        for (const auto& plan : plans) {
            const double target = detail::band_target(plan, u);
            max_change = std::max(max_change, std::abs(target - u[plan.node]));
            u[plan.node] = target;
        }
        if (max_change < opts.tol_residual) {
            rep.converged = true;
            break;
        }
        if (max_change > 1.5 * prev_change && damping > 0.05) damping *= 0.5;
        prev_change = max_change;
    }
    rep.iterations = it + 1;
    rep.damping_final = damping;

    // final diagnostics
    const HessianDensity du = hessian_measure(u, m, 1e-5);
    std::vector<double> res_parts;
    res_parts.reserve(g.interior_nodes.size());
    double viol = 0.0;
    for (int64_t id : g.interior_nodes) {
        res_parts.push_back(std::abs(du.ac_at(id) - f[static_cast<size_t>(id)]) * g.cell_volume());
        Herm H;
        bool lo = false;
        complex_hessian_at(g, u.values.data(), id, u[id], H, nullptr, lo);
        for (int k = 1; k <= m; ++k) viol = std::min(viol, sigma_of_matrix(H, k));
    }
    rep.residual_L1 = pairwise_sum(res_parts);
    rep.msh_violation = -viol;
    for (const auto& plan : plans)
        rep.boundary_err = std::max(rep.boundary_err,
                                    std::abs(u[plan.node] - detail::band_target(plan, u)));
    return rep;
}

struct SubsolutionReport {
    bool holds = false;
    double measured_A = 0.0;  // max cell ratio mu / phi-mass
    int64_t worst_cell = -1;
    double worst_mu = 0.0;
    double worst_phi = 0.0;
};

// mu <= (dd^c phi)^m ^ beta^(n-m) cell by cell, singular slice mass compared
// against the cell-aggregated phi-mass.
inline SubsolutionReport subsolution_check(const GridFunction& phi, const HessianDensity& mu,
                                           int m, double tol) {
    const Grid& g = *phi.grid;
    const HessianDensity dphi = hessian_measure(phi, m, 1e-5);
    SubsolutionReport rep;
    rep.holds = true;
    const double floor = tol * g.cell_volume();
    for (int64_t id : g.interior_nodes) {
        const double mc = mu.cell_mass(id);
        const double pc = dphi.cell_mass(id);
        if (mc <= floor) continue;
        const double ratio = mc / std::max(pc, 1e-300);
        if (ratio > rep.measured_A) {
            rep.measured_A = ratio;
            rep.worst_cell = id;
            rep.worst_mu = mc;
            rep.worst_phi = pc;
        }
        if (mc > pc * (1.0 + tol) + floor) rep.holds = false;
    }
    return rep;
}

// Lemma-style global approximant: max(mean_delta u - kappa_hat, u) on
// Omega_delta, u elsewhere. kappa_hat must dominate the hat-moduli sum of the
// sandwich pair plus delta.
inline GridFunction global_approximants(const GridFunction& u, double delta, const GridFunction& v,
                                        const GridFunction& w, double kappa_hat,
                                        bool* equals_u_near_rim = nullptr) {
    const Grid& g = *u.grid;
    for (int64_t id : g.interior_nodes)
        if (v[id] > u[id] + 1e-7 || u[id] > w[id] + 1e-7) throw LabError("sandwich violated");
    for (int64_t id : g.band_nodes)
        if (std::abs(v[id] - w[id]) > 8.0 * g.h * (1.0 + std::abs(w[id])))
            throw LabError("sandwich violated");
    const GridFunction mean = mean_value(u, delta);
    GridFunction out = u;
    bool rim_ok = true;
    for (int64_t id : g.interior_nodes) {
        if (std::isnan(mean[id])) continue;
        const double cand = mean[id] - kappa_hat;
        if (cand > out[id]) out[id] = cand;
        const double depth = -g.spec.signed_distance(g.point_of(id));
        if (depth <= delta + 3.0 * g.h && cand > u[id] + 1e-12) rim_ok = false;
    }
    if (equals_u_near_rim) *equals_u_near_rim = rim_ok;
    return out;
}

struct ApproxEnergyReport {
    double delta = 0.0;
    double lhs = 0.0;      // integral of (u~_delta - u)^m d mu
    double rhs = 0.0;      // Chat kappa(theta_m(Dhat delta^2))
    double norm1 = 0.0;    // ||u~_delta - u||_1
    bool holds = false;
};

// Energy bound for the global approximants: the caller supplies the measured
// kappas of the subsolution and the boundary datum plus fitted constants.
inline ApproxEnergyReport approximation_energy_bound(
    const GridFunction& u, const HessianDensity& mu, const GridFunction& v, const GridFunction& w,
    double delta, double kappa_hat, const ModulusOfContinuity& kappa_phi,
    const ModulusOfContinuity& kappa_g, int m, double Chat, double Dhat) {
    const Grid& g = *u.grid;
    ApproxEnergyReport rep;
    rep.delta = delta;
    const GridFunction ut = global_approximants(u, delta, v, w, kappa_hat);
    std::vector<double> lhs_parts, n1_parts;
    for (int64_t id : g.interior_nodes) {
        const double diff = ut[id] - u[id];
        lhs_parts.push_back(std::pow(std::max(diff, 0.0), m) * mu.cell_mass(id));
        n1_parts.push_back(std::abs(diff) * g.cell_volume());
    }
    rep.lhs = pairwise_sum(lhs_parts);
    rep.norm1 = pairwise_sum(n1_parts);
    const MonotoneMap th = theta_m(kappa_phi, m);
    auto kap = [&](double d) { return kappa_phi(d) + kappa_g(std::sqrt(d)) + d; };
    rep.rhs = Chat * kap(th(Dhat * delta * delta));
    rep.holds = rep.lhs <= rep.rhs;
    return rep;
}

struct SolutionModulus {
    HatModulusCurve hat_curve;
    double holder_alpha = 0.0;
    double holder_r2 = 0.0;
};

inline SolutionModulus measure_solution_modulus(const GridFunction& u) {
    SolutionModulus sm;
    sm.hat_curve = hat_modulus(u, default_delta_ladder(*u.grid));
    const auto fit = sm.hat_curve.holder_fit();
    sm.holder_alpha = fit.slope;
    sm.holder_r2 = fit.r2;
    return sm;
}

// Convenience: measure with density f (relative to beta^n) and boundary g.
inline HessianDensity density_measure(const Grid& g, const std::function<double(const Point&)>& f) {
    HessianDensity mu;
    mu.grid = &g;
    mu.ac.assign(static_cast<size_t>(g.total), 0.0);
    for (int64_t id : g.interior_nodes) {
        const double v = f(g.point_of(id));
        if (v < 0.0) throw LabError("invalid measure");
        mu.ac[static_cast<size_t>(id)] = v;
    }
    return mu;
}

}  // namespace hesslab

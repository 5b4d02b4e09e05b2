#pragma once

#include "hesslab/hessian.hpp"
#include "hesslab/maps.hpp"

namespace hesslab {

enum class MollifyKernel { ball_indicator, smooth_bump };

// Node-weight table for the radial kernel scaled to radius delta. Weights are
// symmetric under o -> -o (odd moments vanish exactly) and carry a radial
// correction a + g r^2 fixing the 0th and 2nd moments, so mollification is
// exact on quadratic polynomials. This removes the O(h) quadrature noise that
// would otherwise swamp the hat-modulus at small delta.
struct KernelTable {
    double delta = 0.0;
    std::vector<int64_t> flat_offsets;
    std::vector<std::array<int16_t, kMaxRealDim>> offsets;
    std::vector<double> weights;
    int radius_cells = 0;
    double second_moment = 0.0;  // = delta^2 n/(n+1) for the ball kernel
};

namespace detail {

inline double bump_profile(double r) {
    if (r >= 1.0) return 0.0;
    return std::exp(-1.0 / (1.0 - r * r));
}

// mean of |zeta|^2 over the radial kernel on the unit ball of R^d
inline double kernel_second_moment(MollifyKernel kernel, int d) {
    if (kernel == MollifyKernel::ball_indicator)
        return static_cast<double>(d) / static_cast<double>(d + 2);
    // ratio of the r^(d+1) and r^(d-1) moments of the bump profile, Simpson
    auto integ = [d](int pow_extra) {
        const int N = 4000;
        double s = 0.0;
        for (int i = 0; i <= N; ++i) {
            const double r = static_cast<double>(i) / N;
            const double w = (i == 0 || i == N) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
            s += w * std::pow(r, d - 1 + pow_extra) * bump_profile(r);
        }
        return s / (3.0 * N);
    };
    return integ(2) / integ(0);
}

}  // namespace detail

inline KernelTable build_kernel_table(const Grid& g, double delta, MollifyKernel kernel) {
    if (delta < 2.0 * g.h) throw LabError("kernel under-resolved");
    if (!(delta < g.delta0)) throw LabError("delta exceeds the domain scale");
    const int d = g.dim();
    KernelTable kt;
    kt.delta = delta;
    kt.second_moment = delta * delta * detail::kernel_second_moment(kernel, d);
    const int R = static_cast<int>(std::floor((delta + g.h) / g.h));
    kt.radius_cells = R;

    std::array<int, kMaxRealDim> o{};
    o.fill(-R);
    std::vector<double> base, r2s;
    while (true) {
        double r2 = 0.0;
        for (int a = 0; a < d; ++a) r2 += static_cast<double>(o[static_cast<size_t>(a)]) *
                                          static_cast<double>(o[static_cast<size_t>(a)]);
        r2 *= g.h * g.h;
        const double r = std::sqrt(r2);
        double b = 0.0;
        if (kernel == MollifyKernel::ball_indicator) {
            b = std::clamp((delta - r) / g.h + 0.5, 0.0, 1.0);
        } else {
            b = detail::bump_profile(r / delta);
        }
        if (b > 0.0) {
            std::array<int16_t, kMaxRealDim> oo{};
            int64_t flat = 0;
            for (int a = 0; a < d; ++a) {
                oo[static_cast<size_t>(a)] = static_cast<int16_t>(o[static_cast<size_t>(a)]);
                flat += static_cast<int64_t>(o[static_cast<size_t>(a)]) * g.stride[static_cast<size_t>(a)];
            }
            kt.offsets.push_back(oo);
            kt.flat_offsets.push_back(flat);
            base.push_back(b);
            r2s.push_back(r2);
        }
        int a = 0;
        for (; a < d; ++a) {
            if (++o[static_cast<size_t>(a)] <= R) break;
            o[static_cast<size_t>(a)] = -R;
        }
        if (a == d) break;
    }
    // moment correction: weights w_i = base_i (A + G r_i^2) with exact
    // 0th and 2nd moments
    double S0 = 0.0, S2 = 0.0, S4 = 0.0;
    for (size_t i = 0; i < base.size(); ++i) {
        S0 += base[i];
        S2 += base[i] * r2s[i];
        S4 += base[i] * r2s[i] * r2s[i];
    }
    const double det = S0 * S4 - S2 * S2;
    if (std::abs(det) < 1e-30) throw LabError("kernel under-resolved");
    const double A = (S4 - S2 * kt.second_moment) / det;
    const double G = (S0 * kt.second_moment - S2) / det;
    kt.weights.resize(base.size());
    for (size_t i = 0; i < base.size(); ++i) kt.weights[i] = base[i] * (A + G * r2s[i]);
    return kt;
}

// Discrete convolution with the radial kernel. The result is defined on
// nodes whose full stencil carries values: Omega_{delta+h} for plain domain
// samples, one cell inside Omega_delta. Elsewhere the output is NaN. With
// `everywhere` (for kappa-extended inputs valued on the whole box) every box
// node with a full in-box stencil is evaluated.
inline GridFunction mollify(const GridFunction& u, double delta,
                            MollifyKernel kernel = MollifyKernel::ball_indicator,
                            bool everywhere = false) {
    const Grid& g = *u.grid;
    const KernelTable kt = build_kernel_table(g, delta, kernel);
    GridFunction out(g);
    const int d = g.dim();
    auto eval_at = [&](int64_t id) {
        const auto c = g.coords_of(id);
        for (int a = 0; a < d; ++a) {
            if (c[static_cast<size_t>(a)] - kt.radius_cells < 0 ||
                c[static_cast<size_t>(a)] + kt.radius_cells >= g.res)
                return;
        }
        double acc = 0.0;
        for (size_t i = 0; i < kt.flat_offsets.size(); ++i) {
            const double v = u[id + kt.flat_offsets[i]];
            if (std::isnan(v)) return;
            acc += kt.weights[i] * v;
        }
        out[id] = acc;
    };
    if (everywhere) {
        for (int64_t id = 0; id < g.total; ++id) eval_at(id);
    } else {
        for (int64_t id : g.interior_nodes) {
            if (g.spec.signed_distance(g.point_of(id)) >= -(delta + g.h)) continue;
            eval_at(id);
        }
    }
    return out;
}

inline GridFunction mean_value(const GridFunction& u, double delta) {
    return mollify(u, delta, MollifyKernel::ball_indicator);
}

// Geometric delta ladder {4h, 8h, ...} capped at delta0/4.
inline std::vector<double> default_delta_ladder(const Grid& g) {
    std::vector<double> ds;
    for (double d = 4.0 * g.h; d <= g.delta0 / 4.0; d *= 2.0) ds.push_back(d);
    if (ds.empty()) ds.push_back(4.0 * g.h);
    return ds;
}

struct HatModulusCurve {
    std::vector<double> deltas;
    std::vector<double> values;

    LogLogFit holder_fit() const { return fit_loglog(deltas, values); }
};

// hat-kappa(delta) = sup over Omega_delta of (mean_value_delta u - u).
inline HatModulusCurve hat_modulus(const GridFunction& u, const std::vector<double>& deltas) {
    const Grid& g = *u.grid;
    HatModulusCurve curve;
    for (double delta : deltas) {
        const GridFunction m = mean_value(u, delta);
        double worst = -std::numeric_limits<double>::infinity();
        bool any = false;
        for (int64_t id : g.interior_nodes) {
            const double v = m[id];
            if (std::isnan(v)) continue;
            worst = std::max(worst, v - u[id]);
            any = true;
        }
        if (!any) break;  // ladder exceeded the domain depth
        curve.deltas.push_back(delta);
        curve.values.push_back(worst);
    }
    return curve;
}

// Full modulus kappa(delta) = sup |u(z)-u(z')| over pairs with |z-z'|<=delta,
// computed by ascending shells of lattice offsets (each offset visited once).
inline ModulusOfContinuity full_modulus(const GridFunction& u, std::vector<double> deltas) {
    const Grid& g = *u.grid;
    std::sort(deltas.begin(), deltas.end());
    const int d = g.dim();
    const double h = g.h;
    const int Rmax = static_cast<int>(std::floor(deltas.back() / h));

    // enumerate offsets grouped by |o| <= delta_k shells; o = 0 skipped
    std::vector<std::vector<int64_t>> shell_flat(deltas.size());
    std::vector<std::vector<std::array<int16_t, kMaxRealDim>>> shell_off(deltas.size());
    std::array<int, kMaxRealDim> o{};
    o.fill(-Rmax);
    while (true) {
        double r2 = 0.0;
        bool zero = true;
        for (int a = 0; a < d; ++a) {
            r2 += static_cast<double>(o[static_cast<size_t>(a)]) * o[static_cast<size_t>(a)];
            zero = zero && o[static_cast<size_t>(a)] == 0;
        }
        const double r = h * std::sqrt(r2);
        if (!zero && r <= deltas.back() + 1e-12) {
            size_t k = 0;
            while (k < deltas.size() && r > deltas[k] + 1e-12) ++k;
            if (k < deltas.size()) {
                std::array<int16_t, kMaxRealDim> oo{};
                int64_t flat = 0;
                for (int a = 0; a < d; ++a) {
                    oo[static_cast<size_t>(a)] = static_cast<int16_t>(o[static_cast<size_t>(a)]);
                    flat += static_cast<int64_t>(o[static_cast<size_t>(a)]) *
                            g.stride[static_cast<size_t>(a)];
                }
                shell_flat[k].push_back(flat);
                shell_off[k].push_back(oo);
            }
        }
        int a = 0;
        for (; a < d; ++a) {
            if (++o[static_cast<size_t>(a)] <= Rmax) break;
            o[static_cast<size_t>(a)] = -Rmax;
        }
        if (a == d) break;
    }

    std::vector<double> kappas;
    double running = 0.0;
    for (size_t k = 0; k < deltas.size(); ++k) {
        for (size_t i = 0; i < shell_flat[k].size(); ++i) {
            const auto& oo = shell_off[k][i];
            // valid coordinate box for z so that z + o stays in the grid box
            std::array<int, kMaxRealDim> lo{}, hi{};
            for (int a = 0; a < d; ++a) {
                lo[static_cast<size_t>(a)] = std::max(0, -static_cast<int>(oo[static_cast<size_t>(a)]));
                hi[static_cast<size_t>(a)] =
                    std::min(g.res - 1, g.res - 1 - static_cast<int>(oo[static_cast<size_t>(a)]));
            }
            std::array<int, kMaxRealDim> c{};
            for (int a = 0; a < d; ++a) c[static_cast<size_t>(a)] = lo[static_cast<size_t>(a)];
            const int64_t off = shell_flat[k][i];
            while (true) {
                const int64_t id = g.index_of(c);
                const double v0 = u[id], v1 = u[id + off];
                if (!std::isnan(v0) && !std::isnan(v1)) running = std::max(running, v1 - v0);
                int a = 0;
                for (; a < d; ++a) {
                    if (++c[static_cast<size_t>(a)] <= hi[static_cast<size_t>(a)]) break;
                    c[static_cast<size_t>(a)] = lo[static_cast<size_t>(a)];
                }
                if (a == d) break;
            }
        }
        kappas.push_back(running);
    }
    return ModulusOfContinuity::tabulated(deltas, kappas);
}

// McShane-type extension sup_zeta {u(zeta) - kappa(|z-zeta|)} to the whole
// bounding box. Agrees with u on carried nodes iff kappa dominates the
// measured modulus, which is how the precondition is enforced.
inline GridFunction kappa_extension(const GridFunction& u, const ModulusOfContinuity& kappa,
                                    double tol = 1e-9) {
    const Grid& g = *u.grid;
    std::vector<int64_t> carriers;
    carriers.reserve(g.interior_nodes.size() + g.band_nodes.size());
    for (int64_t id : g.interior_nodes) carriers.push_back(id);
    for (int64_t id : g.band_nodes) carriers.push_back(id);
    std::vector<Point> cpts;
    cpts.reserve(carriers.size());
    for (int64_t id : carriers) cpts.push_back(g.point_of(id));

    GridFunction out(g);
    for (int64_t id = 0; id < g.total; ++id) {
        const Point p = g.point_of(id);
        double best = -std::numeric_limits<double>::infinity();
        for (size_t i = 0; i < carriers.size(); ++i) {
            const double cand = u[carriers[i]] - kappa(std::sqrt(dist2(p, cpts[i])));
            best = std::max(best, cand);
        }
        out[id] = best;
    }
    for (int64_t id : carriers) {
        if (out[id] > u[id] + tol) throw LabError("kappa insufficient");
        out[id] = u[id];
    }
    return out;
}

struct McConditionReport {
    bool satisfied = false;
    double witness_A = 0.0;
    double best_ratio = std::numeric_limits<double>::infinity();
};

// limsup_{t->0} kappa(A t)/(A kappa(t)) < 1/(2n), searched over dyadic A.
// The limsup is approximated by the max over the smallest sampled decade.
inline McConditionReport check_mc_condition(const ModulusOfContinuity& kappa, int n) {
    const double t_floor = 10.0 * std::sqrt(std::numeric_limits<double>::epsilon());
    if (kappa.form == KappaForm::tabulated && kappa.ts.front() > 100.0 * t_floor)
        throw LabError("insufficient resolution near zero");
    McConditionReport rep;
    const double bound = 1.0 / (2.0 * n);
    for (int e = 1; e <= 20; ++e) {
        const double A = std::pow(2.0, e);
        double worst = 0.0;
        for (int i = 0; i <= 16; ++i) {
            const double t = t_floor * std::pow(10.0, static_cast<double>(i) / 16.0);
            const double den = A * kappa(t);
            worst = std::max(worst, den > 0.0 ? kappa(A * t) / den : std::numeric_limits<double>::infinity());
        }
        if (worst < rep.best_ratio) rep.best_ratio = worst;
        if (worst < bound) {
            rep.satisfied = true;
            rep.witness_A = A;
            return rep;
        }
    }
    return rep;
}

struct SupMeanReport {
    double c1 = 0.0;  // sup over delta of hat-kappa_u(delta)/kappa(delta)
    double c2 = 0.0;  // sup over delta, z of (sup_{B(z,delta)} u - u(z))/kappa(delta)
    bool c1_finite = false;
    bool c2_finite = false;
};

// Numerical illustration of the sup-vs-mean equivalence for subharmonic u.
inline SupMeanReport sup_mean_equivalence_check(const GridFunction& u,
                                                const ModulusOfContinuity& kappa) {
    const Grid& g = *u.grid;
    const auto deltas = default_delta_ladder(g);
    SupMeanReport rep;
    const auto hat = hat_modulus(u, deltas);
    for (size_t i = 0; i < hat.deltas.size(); ++i) {
        const double kd = kappa(hat.deltas[i]);
        if (kd > 0.0) rep.c1 = std::max(rep.c1, std::max(hat.values[i], 0.0) / kd);
    }
    rep.c1_finite = std::isfinite(rep.c1);

    // sup over the delta-ball via per-delta offset scans on Omega_delta
    for (double delta : deltas) {
        const int R = static_cast<int>(std::floor(delta / g.h));
        const double kd = kappa(delta);
        if (kd <= 0.0) continue;
        const auto nodes = g.nodes_deeper_than(delta);
        if (nodes.empty()) break;
        std::array<int, kMaxRealDim> o{};
        o.fill(-R);
        std::vector<int64_t> offs;
        while (true) {
            double r2 = 0.0;
            for (int a = 0; a < g.dim(); ++a)
                r2 += static_cast<double>(o[static_cast<size_t>(a)]) * o[static_cast<size_t>(a)];
            if (g.h * std::sqrt(r2) <= delta + 1e-12) {
                int64_t flat = 0;
                for (int a = 0; a < g.dim(); ++a)
                    flat += static_cast<int64_t>(o[static_cast<size_t>(a)]) * g.stride[static_cast<size_t>(a)];
                offs.push_back(flat);
            }
            int a = 0;
            for (; a < g.dim(); ++a) {
                if (++o[static_cast<size_t>(a)] <= R) break;
                o[static_cast<size_t>(a)] = -R;
            }
            if (a == g.dim()) break;
        }
        for (int64_t id : nodes) {
            double sup = -std::numeric_limits<double>::infinity();
            for (int64_t off : offs) {
                const double v = u[id + off];
                if (!std::isnan(v)) sup = std::max(sup, v);
            }
            rep.c2 = std::max(rep.c2, (sup - u[id]) / kd);
        }
    }
    rep.c2_finite = std::isfinite(rep.c2);
    return rep;
}

struct PoissonJensenReport {
    double lhs = 0.0;        // integral over Omega_delta of (mean_u - u)
    double rhs_ratio = 0.0;  // lhs / (delta^2 integral of sigma_1(u))
};

inline PoissonJensenReport poisson_jensen_check(const GridFunction& u, double delta) {
    const Grid& g = *u.grid;
    const GridFunction m = mean_value(u, delta);
    const HessianDensity s1 = hessian_measure(u, 1, 1e-6);
    const double pref = static_cast<double>(binomial(g.spec.n, 1));  // back to sigma_1 itself
    std::vector<double> lhs_parts, den_parts;
    for (int64_t id : g.interior_nodes) {
        if (std::isnan(m[id])) continue;
        lhs_parts.push_back((m[id] - u[id]) * g.cell_volume());
        den_parts.push_back(pref * s1.ac_at(id) * g.cell_volume());
    }
    PoissonJensenReport rep;
    rep.lhs = pairwise_sum(lhs_parts);
    const double den = delta * delta * pairwise_sum(den_parts);
    rep.rhs_ratio = den != 0.0 ? rep.lhs / den : 0.0;
    return rep;
}

}  // namespace hesslab

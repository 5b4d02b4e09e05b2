#pragma once

#include "hesslab/mollify.hpp"
#include "hesslab/sweep.hpp"

namespace hesslab {

struct EnvelopeOptions {
    double tol = 1e-9;
    int max_iters = 40000;
    double omega = 1.7;  // projected SOR relaxation
    double contact_factor = 10.0;
};

struct EnvelopeResult {
    GridFunction envelope;
    std::vector<uint8_t> contact_set;  // node mask, size grid.total
    int iterations = 0;
    double residual = 0.0;
    double contact_tol = 0.0;
};

// Largest discretely m-sh function below the obstacle with pinned boundary
// band values: pointwise Gauss-Seidel lowering (projected SOR). Each node
// solves the 1-D problem "largest center value keeping every sigma_k >= 0
// with neighbors frozen", then clamps at the obstacle.
inline EnvelopeResult msh_envelope(const GridFunction& obstacle, int m, const GridFunction& boundary,
                                   EnvelopeOptions opts = {}) {
    const Grid& g = *obstacle.grid;
    for (int64_t id : g.band_nodes)
        if (boundary[id] > obstacle[id] + 1e-12) throw LabError("boundary exceeds obstacle on band");

    EnvelopeResult res;
    res.envelope = GridFunction(g);
    GridFunction& u = res.envelope;
    for (int64_t id : g.interior_nodes) u[id] = obstacle[id];
    for (int64_t id : g.band_nodes) u[id] = boundary[id];

    const SweepPlan plan = build_sweep_plan(g);
    double omega = opts.omega;
    double prev_change = std::numeric_limits<double>::infinity();
    int it = 0;
    for (; it < opts.max_iters; ++it) {
        double max_change = 0.0;
        for (size_t s = 0; s < g.interior_nodes.size(); ++s) {
            const int64_t id = g.interior_nodes[s];
            const double vstar = plan.plain[s]
                                     ? plain_root(g, u.values.data(), id, m, 0.0)
                                     : admissible_center(g, u.values.data(), id, m, 0.0, u[id]);
            double vnew;
            if (vstar >= u[id]) {
                vnew = std::min(obstacle[id], vstar);
            } else {
                vnew = std::min(obstacle[id], u[id] + omega * (vstar - u[id]));
            }
            max_change = std::max(max_change, std::abs(vnew - u[id]));
            u[id] = vnew;
        }
        if (max_change < opts.tol) {
            res.residual = max_change;
            break;
        }
        if (max_change > 4.0 * prev_change && omega > 1.0) omega = 0.5 * (1.0 + omega);
        prev_change = max_change;
        res.residual = max_change;
    }
    res.iterations = it + 1;
    if (res.residual >= opts.tol && it >= opts.max_iters) {
        char buf[96];
        std::snprintf(buf, sizeof(buf), "envelope not converged (residual=%.3e)", res.residual);
        throw LabError(buf);
    }
    res.contact_tol = opts.contact_factor * opts.tol;
    res.contact_set.assign(static_cast<size_t>(g.total), 0);
    for (int64_t id : g.interior_nodes)
        if (u[id] >= obstacle[id] - res.contact_tol) res.contact_set[static_cast<size_t>(id)] = 1;
    return res;
}

using NodeMask = std::vector<uint8_t>;

// Nearest-cell rounding of the radius: nodes within r + h/2 belong to the
// discrete ball, which keeps the staircase radius unbiased.
inline NodeMask ball_mask(const Grid& g, const Point& center, double radius) {
    NodeMask mask(static_cast<size_t>(g.total), 0);
    const double r = radius + 0.5 * g.h;
    for (int64_t id : g.interior_nodes)
        if (dist2(g.point_of(id), center) <= r * r) mask[static_cast<size_t>(id)] = 1;
    return mask;
}

struct CapacityReport {
    NodeMask K;
    GridFunction extremal;
    double capacity = 0.0;
    int iterations = 0;
    double residual = 0.0;
    std::string method = "projected_sor";
};

// Relative extremal function of (K, Omega): envelope with obstacle 0 off K,
// -1 on K, boundary 0; clamped to [-1, 0].
inline GridFunction relative_extremal(const Grid& g, const NodeMask& K, int m,
                                      EnvelopeOptions opts = {}, EnvelopeResult* details = nullptr) {
    bool nonempty = false;
    for (int64_t id : g.interior_nodes)
        if (K[static_cast<size_t>(id)]) {
            nonempty = true;
            break;
        }
    if (!nonempty) throw LabError("K empty");
    GridFunction obstacle(g), boundary(g, 0.0);
    for (int64_t id : g.interior_nodes)
        obstacle[id] = K[static_cast<size_t>(id)] ? -1.0 : 0.0;
    for (int64_t id : g.band_nodes) {
        obstacle[id] = 0.0;
        boundary[id] = 0.0;
    }
    EnvelopeResult res = msh_envelope(obstacle, m, boundary, opts);
    for (int64_t id : g.interior_nodes) res.envelope[id] = std::clamp(res.envelope[id], -1.0, 0.0);
    if (details) *details = res;
    GridFunction out = res.envelope;
    return out;
}

// c_m(K, Omega) = I_m(u_K*): the Hessian mass of the relative extremal.
inline CapacityReport capacity(const Grid& g, const NodeMask& K, int m, EnvelopeOptions opts = {}) {
    CapacityReport rep;
    rep.K = K;
    EnvelopeResult details;
    rep.extremal = relative_extremal(g, K, m, opts, &details);
    rep.iterations = details.iterations;
    rep.residual = details.residual;
    rep.capacity = energy_I_m(rep.extremal, m, 1e-6);
    return rep;
}

struct BoundaryMassReport {
    double lhs = 0.0;        // Hessian mass of phi on K
    double rhs = 0.0;        // (sup_Omega phi - min_K phi)^m c_m(K)
    double rhs_kappa = 0.0;  // kappa(delta_K)^m c_m(K), when phi = 0 on the band
    double capacity = 0.0;
    double osc = 0.0;        // the boundary-referenced oscillation used in rhs
    double osc_K = 0.0;      // classic max_K - min_K, reported for comparison
    double delta_K = 0.0;    // sup over K of dist(z, boundary)
    bool phi_vanishes_on_boundary = false;
    bool holds = false;
};

// Boundary mass estimate: mass_K(phi) <= osc^m c_m(K, Omega) with the
// boundary-referenced oscillation osc = sup_Omega phi - min_K phi (the
// normalization (phi - sup)/osc lies in [-1, 0] on K and is <= 0 globally,
// which is what the comparison argument needs; the literal max_K - min_K
// fails for potentials that keep growing between K and the boundary). When
// phi vanishes on the band the kappa(delta_K)^m refinement is also checked.
// kappa may be supplied; otherwise the full modulus of phi is measured.
inline BoundaryMassReport boundary_mass_check(const GridFunction& phi, const NodeMask& K, int m,
                                              double tol = 1e-6,
                                              const ModulusOfContinuity* kappa_phi = nullptr,
                                              EnvelopeOptions opts = {}) {
    const Grid& g = *phi.grid;
    const HessianDensity d = hessian_measure(phi, m, 1e-6);
    BoundaryMassReport rep;
    std::vector<double> parts;
    double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
    double sup_all = -std::numeric_limits<double>::infinity();
    for (int64_t id : g.interior_nodes) {
        sup_all = std::max(sup_all, phi[id]);
        if (!K[static_cast<size_t>(id)]) continue;
        parts.push_back(d.cell_mass(id));
        pmin = std::min(pmin, phi[id]);
        pmax = std::max(pmax, phi[id]);
        rep.delta_K = std::max(rep.delta_K, -g.spec.signed_distance(g.point_of(id)));
    }
    for (int64_t id : g.band_nodes) sup_all = std::max(sup_all, phi[id]);
    rep.lhs = pairwise_sum(parts);
    rep.osc_K = pmax - pmin;
    rep.osc = sup_all - pmin;
    const CapacityReport cap = capacity(g, K, m, opts);
    rep.capacity = cap.capacity;
    rep.rhs = std::pow(rep.osc, m) * rep.capacity;
    rep.holds = rep.lhs <= rep.rhs * (1.0 + tol) + tol;

    // Band nodes sit up to h inside, so a Lipschitz zero-boundary potential
    // carries O(h) values there.
    double band_max = 0.0;
    for (int64_t id : g.band_nodes) band_max = std::max(band_max, std::abs(phi[id]));
    rep.phi_vanishes_on_boundary = band_max <= 4.0 * g.h * (1.0 + rep.osc) + 1e-9;
    if (rep.phi_vanishes_on_boundary) {
        ModulusOfContinuity kap =
            kappa_phi ? *kappa_phi : full_modulus(phi, default_delta_ladder(g));
        rep.rhs_kappa = std::pow(kap(rep.delta_K), m) * rep.capacity;
        rep.holds = rep.holds && rep.lhs <= rep.rhs_kappa * (1.0 + tol) + tol;
    }
    return rep;
}

struct MocFunctionalReport {
    double lhs = 0.0;       // integral |u-v|^m against the phi-Hessian density
    double rhs = 0.0;       // Chat kappa_phi(theta_m(||u-v||_m^m))
    double um_norm_m = 0.0; // ||u-v||_m^m (Lebesgue)
    bool holds = false;
};

// Functional continuity estimate for the Hessian measure of phi acting on
// pairs with equal boundary values and energy at most R. Chat is fitted once
// per family by the caller.
inline MocFunctionalReport moc_functional_check(const GridFunction& phi, const GridFunction& u,
                                                const GridFunction& v, int m,
                                                const ModulusOfContinuity& kappa_phi, double R,
                                                double Chat) {
    const Grid& g = *phi.grid;
    for (int64_t id : g.band_nodes)
        if (std::abs(u[id] - v[id]) > 1e-9)
            throw LabError("boundary values differ");
    if (energy_I_m(u, m, 1e-6) > R * (1.0 + 1e-9) || energy_I_m(v, m, 1e-6) > R * (1.0 + 1e-9))
        throw LabError("energy exceeds R");
    const HessianDensity dphi = hessian_measure(phi, m, 1e-6);
    std::vector<double> lhs_parts, norm_parts;
    const double vol = g.cell_volume();
    for (int64_t id : g.interior_nodes) {
        const double diff = std::pow(std::abs(u[id] - v[id]), m);
        lhs_parts.push_back(diff * dphi.ac_at(id) * vol);
        norm_parts.push_back(diff * vol);
    }
    MocFunctionalReport rep;
    rep.lhs = pairwise_sum(lhs_parts);
    rep.um_norm_m = pairwise_sum(norm_parts);
    const MonotoneMap th = theta_m(kappa_phi, m);
    rep.rhs = Chat * kappa_phi(th(rep.um_norm_m));
    rep.holds = rep.lhs <= rep.rhs;
    return rep;
}

}  // namespace hesslab

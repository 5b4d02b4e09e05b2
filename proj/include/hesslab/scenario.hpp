#pragma once

#include <chrono>
#include <random>

#include "hesslab/io.hpp"
#include "hesslab/solver.hpp"

namespace hesslab {

struct ConfigError : LabError {
    explicit ConfigError(const std::string& what) : LabError(what) {}
};

// Exit codes of the scenario runner.
inline constexpr int kExitOk = 0;
inline constexpr int kExitAssertion = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

struct ScenarioConfig {
    std::string scenario;
    json raw;
    std::string output = "out";
    uint64_t seed = 1;

    static ScenarioConfig parse(const json& j) {
        ScenarioConfig c;
        c.raw = j;
        if (!j.contains("scenario") || !j.at("scenario").is_string())
            throw ConfigError("config needs a scenario string");
        c.scenario = j.at("scenario").get<std::string>();
        static const std::vector<std::string> known = {
            "solve",      "capacity_scaling", "theorem2_verify",  "stability",
            "moc_verify", "example_singular", "dini_check",       "iteration_lemma"};
        if (std::find(known.begin(), known.end(), c.scenario) == known.end())
            throw ConfigError("unknown scenario: " + c.scenario);
        c.output = j.value("output", std::string("out/") + c.scenario);
        c.seed = j.value("seed", 1ull);
        return c;
    }

    std::string digest() const { return digest64(raw.dump()); }
};

namespace scenario_detail {

inline DomainSpec domain_from(const json& j) {
    if (!j.is_object()) throw ConfigError("domain must be an object");
    const std::string kind = j.value("kind", std::string("ball"));
    const int n = j.value("n", 1);
    const int m = j.value("m", 1);
    if (n < 1 || n > kMaxComplexDim) throw ConfigError("complex dimension outside [1,3]");
    if (m < 1 || m > n) throw ConfigError("hessian order outside [1,n]");
    Point c = make_point(2 * n);
    if (j.contains("center")) {
        const auto& arr = j.at("center");
        if (!arr.is_array() || static_cast<int>(arr.size()) != 2 * n)
            throw ConfigError("center must have 2n entries");
        for (int a = 0; a < 2 * n; ++a) c[a] = arr[static_cast<size_t>(a)].get<double>();
    }
    if (kind == "ball") return DomainSpec::ball(n, m, c, j.value("radius", 1.0));
    if (kind == "polydisc") {
        std::vector<double> r = j.value("radii", std::vector<double>(static_cast<size_t>(n), 1.0));
        return DomainSpec::polydisc(n, m, c, r);
    }
    if (kind == "custom") {
        const std::string path = j.value("rho_csv", std::string());
        if (path.empty()) throw ConfigError("custom domain needs rho_csv");
        if (!std::filesystem::exists(path)) throw ConfigError("rho_csv not found: " + path);
        auto rho = load_rho_csv(path, n);
        auto spec = DomainSpec::custom(n, m, [rho](const Point& p) { return rho(p); });
        spec.radii[0] = j.value("radius", 1.0);
        spec.m = m;
        return spec;
    }
    throw ConfigError("unknown domain kind: " + kind);
}

inline std::function<double(const Point&)> boundary_from(const json& j) {
    const std::string type = j.is_object() ? j.value("type", std::string("zero")) : "zero";
    if (type == "zero") return [](const Point&) { return 0.0; };
    if (type == "constant") {
        const double v = j.value("value", 0.0);
        return [v](const Point&) { return v; };
    }
    if (type == "re_z1") {
        const double s = j.value("scale", 1.0);
        return [s](const Point& p) { return s * p[0]; };
    }
    throw ConfigError("unknown boundary type: " + type);
}

inline HessianDensity measure_from(const Grid& g, const json& j, int m) {
    const std::string type = j.is_object() ? j.value("type", std::string("constant")) : "constant";
    if (type == "constant") {
        const double v = j.value("value", 1.0);
        if (v < 0.0) throw LabError("invalid measure");
        return density_measure(g, [v](const Point&) { return v; });
    }
    if (type == "radial4") {
        const double s = j.value("scale", 1.0);
        return density_measure(g, [s](const Point& p) { return 4.0 * s * norm2(p); });
    }
    if (type == "affine_x1") {
        const double base = j.value("base", 1.0), coeff = j.value("coeff", 0.0);
        return density_measure(g, [base, coeff](const Point& p) { return base + coeff * p[0]; });
    }
    if (type == "singular_example") {
        // mu = lambda_m x lambda_(2n-2m) on {Re z_j = 0, j <= m}, normalized so
        // the model kink potential has unit density against it.
        const double scale = j.value("scale", 1.0);
        HessianDensity mu;
        mu.grid = &g;
        mu.ac.assign(static_cast<size_t>(g.total), 0.0);
        SliceMeasure sl;
        for (int jx = 0; jx < m; ++jx) {
            sl.axes.push_back(2 * jx);
            sl.offsets.push_back(0.0);
        }
        sl.surface_density = scale * std::pow(0.25, m) / binomial(g.spec.n, m);
        mu.slices.push_back(sl);
        return mu;
    }
    throw ConfigError("unknown measure type: " + type);
}

inline ModulusOfContinuity kappa_from(const json& j) {
    const std::string type = j.is_object() ? j.value("type", std::string("power")) : "power";
    if (type == "power")
        return ModulusOfContinuity::power(j.value("alpha", 1.0), j.value("c", 1.0),
                                          j.value("L", 1.0));
    if (type == "logpower")
        return ModulusOfContinuity::logpower(j.value("alpha", 0.0), j.value("nu", -1.0),
                                             j.value("c", 1.0), j.value("L", 0.3));
    throw ConfigError("unknown kappa type: " + type);
}

inline SolveOptions solver_from(const json& j) {
    SolveOptions o;
    if (!j.is_object()) return o;
    o.tol_residual = j.value("tol_residual", o.tol_residual);
    o.max_iters = j.value("max_iters", o.max_iters);
    o.damping = j.value("damping", o.damping);
    const std::string scheme = j.value("scheme", std::string("gauss_seidel_root"));
    if (scheme == "gauss_seidel_root")
        o.scheme = SolveScheme::gauss_seidel_root;
    else if (scheme == "pseudo_time")
        o.scheme = SolveScheme::pseudo_time;
    else
        throw ConfigError("unknown scheme: " + scheme);
    o.validate();
    return o;
}

struct Assertion {
    std::string name;
    bool pass = false;
    double value = 0.0;
    double bound = 0.0;
};

inline json assertions_json(const std::vector<Assertion>& as, bool* all_pass) {
    json arr = json::array();
    bool ok = true;
    for (const auto& a : as) {
        arr.push_back(json{{"name", a.name}, {"pass", a.pass}, {"value", a.value}, {"bound", a.bound}});
        ok = ok && a.pass;
    }
    if (all_pass) *all_pass = ok;
    return arr;
}

inline double oracle_error(const GridFunction& u, const std::string& oracle, const Grid& g) {
    std::function<double(const Point&)> exact;
    if (oracle == "quadratic") {
        Point c = g.spec.center;
        c.dim = g.dim();
        const double R = g.spec.radii[0];
        exact = [c, R](const Point& p) { return dist2(p, c) - R * R; };
    } else if (oracle == "maximal_re_z1") {
        exact = [](const Point& p) { return p[0]; };
    } else if (oracle == "radial4") {
        exact = [](const Point& p) { return norm2(p) * norm2(p) - 1.0; };
    } else {
        throw ConfigError("unknown oracle: " + oracle);
    }
    double e = 0.0;
    for (int64_t id : g.interior_nodes) e = std::max(e, std::abs(u[id] - exact(g.point_of(id))));
    return e;
}

}  // namespace scenario_detail

// ---------------------------------------------------------------------------
// Scenario runners. Each returns the summary json (with "pass") and writes
// its CSV artifacts under cfg.output.
// ---------------------------------------------------------------------------

inline json run_solve(const ScenarioConfig& cfg) {
    using namespace scenario_detail;
    const auto& j = cfg.raw;
    const DomainSpec spec = domain_from(j.value("domain", json::object()));
    const int res = j.value("resolution", 65);
    const Grid g = build_grid(spec, res);
    const auto mu = measure_from(g, j.value("measure", json::object()), spec.m);
    const auto bdata = boundary_from(j.value("boundary", json::object()));
    const SolveOptions opts = solver_from(j.value("solver", json::object()));

    const auto t0 = std::chrono::steady_clock::now();
    const SolutionReport rep = solve_dirichlet(mu, bdata, spec.m, opts);
    const double elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

    std::vector<Assertion> as;
    as.push_back({"converged", rep.converged, rep.residual_L1, opts.tol_residual});
    const std::string oracle = j.value("oracle", std::string());
    double max_error = std::numeric_limits<double>::quiet_NaN();
    if (!oracle.empty() && oracle != "none") {
        max_error = oracle_error(rep.u, oracle, g);
        const double bound = j.value("max_error", 5e-3);
        as.push_back({"max_error", max_error <= bound, max_error, bound});
    }
    bool pass = false;
    const json asj = assertions_json(as, &pass);

    write_grid_function_csv(rep.u, cfg.output + "/solution.csv");
    json summary{{"scenario", cfg.scenario},
                 {"inputs_digest", cfg.digest()},
                 {"key_metrics",
                  {{"max_error", max_error},
                   {"residual_L1", rep.residual_L1},
                   {"boundary_err", rep.boundary_err},
                   {"msh_violation", rep.msh_violation},
                   {"iterations", rep.iterations},
                   {"elapsed_seconds", elapsed}}},
                 {"assertions", asj},
                 {"pass", pass},
                 {"converged", rep.converged}};
    write_text(cfg.output + "/summary.json", summary.dump(2) + "\n");
    return summary;
}

// Richardson convergence order on the radial quartic oracle, n = 1.
inline json run_convergence_order(const ScenarioConfig& cfg) {
    using namespace scenario_detail;
    const auto& j = cfg.raw;
    const int res = j.value("resolution", 33);
    auto err_at = [&](int r) {
        const DomainSpec spec = DomainSpec::ball(1, 1, 1.0);
        const Grid g = build_grid(spec, r);
        const auto mu = density_measure(g, [](const Point& p) { return 4.0 * norm2(p); });
        const auto rep = solve_dirichlet(mu, [](const Point&) { return 0.0; }, 1,
                                         solver_from(j.value("solver", json::object())));
        if (!rep.converged) throw LabError("solver did not converge");
        return oracle_error(rep.u, "radial4", g);
    };
    const double e1 = err_at(res), e2 = err_at(2 * res - 1);
    const double ratio = e1 / e2;
    std::vector<Assertion> as;
    as.push_back({"richardson_ratio", ratio >= 3.0 && ratio <= 5.0, ratio, 4.0});
    bool pass = false;
    const json asj = assertions_json(as, &pass);
    json summary{{"scenario", "solve"},
                 {"inputs_digest", cfg.digest()},
                 {"key_metrics", {{"err_coarse", e1}, {"err_fine", e2}, {"ratio", ratio}}},
                 {"assertions", asj},
                 {"pass", pass}};
    write_text(cfg.output + "/summary.json", summary.dump(2) + "\n");
    return summary;
}

inline json run_capacity_scaling(const ScenarioConfig& cfg) {
    using namespace scenario_detail;
    const auto& j = cfg.raw;
    const DomainSpec spec = domain_from(j.value("domain", json::object()));
    const int res = j.value("resolution", spec.n == 1 ? 129 : 41);
    const Grid g = build_grid(spec, res);
    std::vector<double> radii = j.value("radii", std::vector<double>{0.15, 0.2, 0.3, 0.4});
    Point c = spec.center;
    c.dim = g.dim();

    std::vector<double> caps, logs_r, logs_c;
    for (double r : radii) {
        const auto rep = capacity(g, ball_mask(g, c, r), spec.m);
        caps.push_back(rep.capacity);
        logs_r.push_back(std::log(r));
        logs_c.push_back(std::log(rep.capacity));
    }
    write_table_csv(cfg.output + "/capacity_scaling.csv", {"r", "capacity", "log_r", "log_cap"},
                    {radii, caps, logs_r, logs_c});

    std::vector<Assertion> as;
    double slope = 0.0;
    if (spec.n == 1 && spec.m == 1) {
        // analytic log-extremal energy of the disc-in-disc pair
        for (size_t i = 0; i < radii.size(); ++i) {
            const double want = M_PI / (2.0 * std::log(1.0 / radii[i]));
            const double rel = std::abs(caps[i] - want) / want;
            as.push_back({"analytic_r" + std::to_string(i), rel <= j.value("analytic_rtol", 0.10),
                          rel, j.value("analytic_rtol", 0.10)});
        }
    } else {
        slope = fit_loglog(radii, caps).slope;
        const double lo = j.value("slope_min", 1.8), hi = j.value("slope_max", 2.2);
        as.push_back({"slope", slope >= lo && slope <= hi, slope, 2.0 * (spec.n - spec.m)});
        for (size_t i = 1; i < caps.size(); ++i)
            as.push_back({"monotone_" + std::to_string(i), caps[i] >= caps[i - 1] * (1.0 - 1e-9),
                          caps[i], caps[i - 1]});
    }
    bool pass = false;
    const json asj = assertions_json(as, &pass);
    json summary{{"scenario", cfg.scenario},
                 {"inputs_digest", cfg.digest()},
                 {"key_metrics", {{"fitted_slope", slope}, {"capacities", caps}}},
                 {"assertions", asj},
                 {"pass", pass}};
    write_text(cfg.output + "/summary.json", summary.dump(2) + "\n");
    return summary;
}

inline json run_dini_check(const ScenarioConfig& cfg) {
    using namespace scenario_detail;
    const auto& j = cfg.raw;
    json cases = j.value("cases", json::array());
    if (cases.empty()) {
        // default single-case form
        cases.push_back(json{{"kappa", j.value("kappa", json::object())},
                             {"m", j.value("m", 1)},
                             {"eps", j.value("eps", 0)},
                             {"expected", j.value("expected", std::string())}});
    }
    std::vector<Assertion> as;
    json table = json::array();
    int idx = 0;
    for (const auto& cj : cases) {
        const auto kap = kappa_from(cj.value("kappa", json::object()));
        const int m = cj.value("m", 1), eps = cj.value("eps", 0);
        const auto rep = dini_integral(kap, m, eps);
        const std::string verdict = rep.verdict == DiniVerdict::convergent ? "convergent"
                                    : rep.verdict == DiniVerdict::diverged ? "diverged"
                                                                           : "inconclusive";
        const std::string expected = cj.value("expected", std::string());
        table.push_back(json{{"case", idx},
                             {"verdict", verdict},
                             {"value", rep.value},
                             {"tail_estimate", rep.tail_estimate}});
        if (!expected.empty())
            as.push_back({"case_" + std::to_string(idx), verdict == expected, rep.value, 0.0});
        ++idx;
    }
    bool pass = false;
    const json asj = assertions_json(as, &pass);
    json summary{{"scenario", cfg.scenario},
                 {"inputs_digest", cfg.digest()},
                 {"key_metrics", {{"cases", table}}},
                 {"assertions", asj},
                 {"pass", pass}};
    write_text(cfg.output + "/summary.json", summary.dump(2) + "\n");
    return summary;
}

// Greedy construction of the largest admissible f for the iteration lemma.
inline MonotoneMap greedy_admissible_f(double f0, const MonotoneMap& eta, double ds, double smax) {
    const int N = static_cast<int>(std::ceil(smax / ds)) + 1;
    std::vector<double> s(static_cast<size_t>(N)), f(static_cast<size_t>(N));
    const int window = static_cast<int>(std::floor(1.0 / ds));
    f[0] = f0;
    for (int i = 1; i < N; ++i) {
        s[static_cast<size_t>(i)] = i * ds;
        double best = f[static_cast<size_t>(i - 1)];
        const int j0 = std::max(0, i - window);
        for (int jj = j0; jj < i; ++jj) {
            const double t = (i - jj) * ds;
            best = std::min(best, f[static_cast<size_t>(jj)] * eta(f[static_cast<size_t>(jj)]) / t);
        }
        f[static_cast<size_t>(i)] = best < 1e-16 ? 0.0 : best;
    }
    return MonotoneMap::from_samples(std::move(s), std::move(f), false, MapInterp::linear);
}

inline json run_iteration_lemma(const ScenarioConfig& cfg) {
    using namespace scenario_detail;
    const auto& j = cfg.raw;
    const int instances = j.value("instances", 100);
    std::mt19937_64 rng(cfg.seed);
    std::uniform_real_distribution<double> uf0(1e-3, 0.03), uc(0.5, 1.5), up(0.45, 1.0);

    std::vector<double> col_f0, col_c, col_p, col_S, col_tail;
    int failures = 0;
    for (int t = 0; t < instances; ++t) {
        const double f0 = uf0(rng), c = uc(rng), p = up(rng);
        const auto eta = MonotoneMap::power_map(c, p);
        const double S_est = std::exp(1.0) * c * std::pow(std::exp(1.0) * f0, p) / p + 0.5;
        const auto fm = greedy_admissible_f(f0, eta, 1e-3, 2.0 * S_est + 1.0);
        const auto res = kolodziej_iteration(fm, eta, t % 10 == 0);
        double tail = 0.0;
        for (size_t i = 0; i < fm.xs.size(); ++i)
            if (fm.xs[i] >= res.S_infinity) tail = std::max(tail, fm.ys[i]);
        if (tail > 1e-10) ++failures;
        col_f0.push_back(f0);
        col_c.push_back(c);
        col_p.push_back(p);
        col_S.push_back(res.S_infinity);
        col_tail.push_back(tail);
    }
    // a hypothesis-violating input must be rejected with the violating pair
    bool rejected = false;
    std::string rejection;
    {
        const auto eta = MonotoneMap::power_map(1.0, 0.5);
        auto fm = greedy_admissible_f(0.01, eta, 1e-2, 3.0);
        fm.ys[150] = fm.ys[10] * 10.0;
        for (size_t i = 151; i < fm.ys.size(); ++i) fm.ys[i] = std::min(fm.ys[i], fm.ys[150]);
        try {
            kolodziej_iteration(fm, eta);
        } catch (const LabError& e) {
            rejection = e.what();
            rejected = rejection.find("hypothesis violated at (s,t)=") != std::string::npos;
        }
    }
    write_table_csv(cfg.output + "/iteration_lemma.csv", {"f0", "eta_c", "eta_p", "S_inf", "tail_max"},
                    {col_f0, col_c, col_p, col_S, col_tail});
    std::vector<Assertion> as;
    as.push_back({"all_vanish_past_S", failures == 0, static_cast<double>(failures), 0.0});
    as.push_back({"violations_rejected", rejected, rejected ? 1.0 : 0.0, 1.0});
    bool pass = false;
    const json asj = assertions_json(as, &pass);
    json summary{{"scenario", cfg.scenario},
                 {"inputs_digest", cfg.digest()},
                 {"key_metrics", {{"instances", instances}, {"failures", failures}, {"rejection", rejection}}},
                 {"assertions", asj},
                 {"pass", pass}};
    write_text(cfg.output + "/summary.json", summary.dump(2) + "\n");
    return summary;
}

// Mass of a Hessian density restricted to a node mask.
inline double mass_on(const HessianDensity& d, const NodeMask& K) {
    std::vector<double> parts;
    for (int64_t id : d.grid->interior_nodes)
        if (K[static_cast<size_t>(id)]) parts.push_back(d.cell_mass(id));
    return pairwise_sum(parts);
}

inline json run_theorem2_verify(const ScenarioConfig& cfg) {
    using namespace scenario_detail;
    const auto& j = cfg.raw;
    const int n = j.value("n", 2), m = j.value("m", 1);
    const int res = j.value("resolution", 33);
    const double r_param = j.value("r", 0.9);
    const std::vector<double> alphas = j.value("alphas", std::vector<double>{0.5, 1.0});
    const std::vector<double> radii = j.value("radii", std::vector<double>{0.2, 0.3, 0.4, 0.5});
    const double margin = j.value("uniformity_margin", 3.0);

    const DomainSpec spec = DomainSpec::ball(n, m, 1.0);
    const Grid g = build_grid(spec, res);
    Point c = make_point(2 * n);

    // capacities shared across the alpha families
    std::vector<double> caps;
    for (double r : radii) caps.push_back(capacity(g, ball_mask(g, c, r), m).capacity);

    std::vector<double> col_alpha, col_r, col_mass, col_cap, col_ratio;
    std::vector<double> ratios_fit, ratios_all;
    std::vector<Assertion> as;
    for (size_t ai = 0; ai < alphas.size(); ++ai) {
        const double alpha = alphas[ai];
        const GridFunction phi = GridFunction::sample(g, [alpha](const Point& p) {
            return -std::pow(std::max(0.0, 1.0 - norm2(p)), alpha);
        });
        const HessianDensity dphi = hessian_measure(phi, m, 1e-5);
        // closed-form modulus of -(1-|z|^2)^alpha: (2t - t^2)^alpha, tabulated
        std::vector<double> ts, ks;
        for (int i = 0; i <= 400; ++i) {
            const double t = std::pow(10.0, -8.0 + 8.0 * i / 400.0);
            ts.push_back(t);
            ks.push_back(std::pow(std::max(2.0 * t - t * t, 0.0), alpha));
        }
        const auto kap = ModulusOfContinuity::tabulated(ts, ks);
        std::vector<double> masses;
        for (size_t ri = 0; ri < radii.size(); ++ri) {
            const double mass = mass_on(dphi, ball_mask(g, c, radii[ri]));
            masses.push_back(mass);
            const double vt = vartheta_m(kap, m, n, r_param, 0.0)(caps[ri]);
            const double denom = (vt + std::pow(vt, m)) * caps[ri];
            const double ratio = mass / std::max(denom, 1e-300);
            col_alpha.push_back(alpha);
            col_r.push_back(radii[ri]);
            col_mass.push_back(mass);
            col_cap.push_back(caps[ri]);
            col_ratio.push_back(ratio);
            ratios_all.push_back(ratio);
            if (ai == 0) ratios_fit.push_back(ratio);  // fit the constant on the first family
        }
        // measured mass-vs-capacity exponent against the corollary bound
        const double slope = fit_loglog(caps, masses).slope;
        const double m_tilde = 2.0 * m + alpha * (1.0 - m);
        const double want = 1.0 + 0.8 * (alpha * r_param / m_tilde);
        as.push_back({"exponent_alpha_" + format_double(alpha), slope >= want, slope, want});
    }
    double Bhat = 0.0;
    for (double r : ratios_fit) Bhat = std::max(Bhat, r);
    bool uniform = true;
    for (double r : ratios_all) uniform = uniform && r <= Bhat * margin;
    as.push_back({"single_constant_uniform", uniform && Bhat > 0.0, Bhat, margin});

    write_table_csv(cfg.output + "/theorem2.csv", {"alpha", "r", "mass", "capacity", "ratio"},
                    {col_alpha, col_r, col_mass, col_cap, col_ratio});
    bool pass = false;
    const json asj = assertions_json(as, &pass);
    json summary{{"scenario", cfg.scenario},
                 {"inputs_digest", cfg.digest()},
                 {"key_metrics", {{"Bhat", Bhat}, {"capacities", caps}}},
                 {"assertions", asj},
                 {"pass", pass}};
    write_text(cfg.output + "/summary.json", summary.dump(2) + "\n");
    return summary;
}

inline json run_stability(const ScenarioConfig& cfg) {
    using namespace scenario_detail;
    const auto& j = cfg.raw;
    const int res = j.value("resolution", 65);
    const DomainSpec spec = DomainSpec::ball(1, 1, 1.0);
    const Grid g = build_grid(spec, res);
    const double density = j.value("density", 4.0);
    const auto mu = density_measure(g, [density](const Point&) { return density; });
    const auto rep = solve_dirichlet(mu, [](const Point&) { return 0.0; }, 1);
    if (!rep.converged) throw LabError("solver did not converge");

    // empirical Gamma of mu from a capacity ladder, gamma = Gamma/t majorant
    Point c = make_point(2);
    std::vector<CapacitySample> samples;
    for (double r : {0.15, 0.3, 0.5, 0.7}) {
        const auto cap = capacity(g, ball_mask(g, c, r), 1);
        samples.push_back({cap.capacity, mass_on(mu, ball_mask(g, c, r))});
    }
    auto Gamma = gamma_from_measure(samples);
    std::vector<double> xs = Gamma.xs, ys = Gamma.ys;
    for (size_t i = 0; i < xs.size(); ++i) ys[i] /= xs[i];
    const auto gamma =
        MonotoneMap::from_samples(xs, ys, true, MapInterp::loglog).least_nondecreasing_majorant();

    // v-family: u plus a paraboloid cap vanishing at radius r0
    const std::vector<double> eps = j.value("eps", std::vector<double>{0.05, 0.1, 0.2, 0.4});
    const double r0 = 0.7;
    std::vector<double> col_eps, col_sup, col_norm, col_bound;
    double Bhat = 0.0;
    for (double e : eps) {
        GridFunction v = rep.u;
        for (int64_t id : g.interior_nodes)
            v[id] += e * std::max(r0 * r0 - norm2(g.point_of(id)), 0.0) / (r0 * r0);
        double sup = 0.0;
        std::vector<double> parts;
        for (int64_t id : g.interior_nodes) {
            const double d = std::max(v[id] - rep.u[id], 0.0);
            sup = std::max(sup, d);
            parts.push_back(d * mu.cell_mass(id));  // m = 1
        }
        const double norm = pairwise_sum(parts);
        const double bound = stability_bound(norm, gamma, 1);
        col_eps.push_back(e);
        col_sup.push_back(sup);
        col_norm.push_back(norm);
        col_bound.push_back(bound);
        if (bound > 0.0) Bhat = std::max(Bhat, sup / bound);
    }
    const double margin = j.value("uniformity_margin", 2.0);
    std::vector<Assertion> as;
    bool uniform = true;
    for (size_t i = 0; i < eps.size(); ++i)
        uniform = uniform && col_sup[i] <= Bhat * margin * col_bound[i] + 1e-12;
    as.push_back({"single_constant_uniform", uniform && Bhat > 0.0, Bhat, margin});
    // monotonicity of the bound in the norm
    bool mono = true;
    for (size_t i = 1; i < eps.size(); ++i) mono = mono && col_bound[i] >= col_bound[i - 1] - 1e-12;
    as.push_back({"bound_monotone", mono, 0.0, 0.0});

    write_table_csv(cfg.output + "/stability.csv", {"eps", "sup_diff", "norm_m_mu", "bound"},
                    {col_eps, col_sup, col_norm, col_bound});
    bool pass = false;
    const json asj = assertions_json(as, &pass);
    json summary{{"scenario", cfg.scenario},
                 {"inputs_digest", cfg.digest()},
                 {"key_metrics", {{"Bhat", Bhat}}},
                 {"assertions", asj},
                 {"pass", pass}};
    write_text(cfg.output + "/summary.json", summary.dump(2) + "\n");
    return summary;
}

inline json run_moc_verify(const ScenarioConfig& cfg) {
    using namespace scenario_detail;
    const auto& j = cfg.raw;
    const int res = j.value("resolution", 129);
    const DomainSpec spec = DomainSpec::ball(1, 1, 1.0);
    const Grid g = build_grid(spec, res);
    const std::vector<double> densities = j.value("densities", std::vector<double>{1.0, 1.2, 1.5});
    const double b_param = j.value("b", 1.0);
    const double margin = j.value("uniformity_margin", 2.0);

    EstimateConstants consts;
    consts.set("C_m", j.value("C_m", 1.0), "configured");
    consts.set("D", j.value("D", 1.0), "configured");

    std::vector<double> col_density, col_delta, col_measured, col_predicted, col_ratio;
    std::vector<double> ratios_fit, ratios_all;
    double quad_exponent = 0.0;
    for (size_t di = 0; di < densities.size(); ++di) {
        const double f = densities[di];
        const auto mu = density_measure(g, [f](const Point&) { return f; });
        const auto rep = solve_dirichlet(mu, [](const Point&) { return 0.0; }, 1);
        if (!rep.converged) throw LabError("solver did not converge");
        const auto hat = hat_modulus(rep.u, default_delta_ladder(g));
        if (di == 0) quad_exponent = hat.holder_fit().slope;
        // subsolution phi = sqrt(f_max) paraboloid: kappa_phi Lipschitz
        const auto kphi = ModulusOfContinuity::power(1.0, 2.0 * std::sqrt(f), 2.0);
        const auto kg = ModulusOfContinuity::power(1.0, 0.0, 2.0);  // g = 0
        const auto pred = predicted_modulus(kphi, kg, 1, 1, 0.0, b_param, consts);
        for (size_t i = 0; i < hat.deltas.size(); ++i) {
            const double p = pred(hat.deltas[i]);
            const double ratio = std::max(hat.values[i], 0.0) / std::max(p, 1e-300);
            col_density.push_back(f);
            col_delta.push_back(hat.deltas[i]);
            col_measured.push_back(hat.values[i]);
            col_predicted.push_back(p);
            col_ratio.push_back(ratio);
            ratios_all.push_back(ratio);
            if (di == 0) ratios_fit.push_back(ratio);
        }
    }
    double Bhat = 0.0;
    for (double r : ratios_fit) Bhat = std::max(Bhat, r);
    bool uniform = true;
    for (double r : ratios_all) uniform = uniform && r <= Bhat * margin;

    std::vector<Assertion> as;
    as.push_back({"single_constant_uniform", uniform && Bhat > 0.0, Bhat, margin});
    as.push_back({"quadratic_exponent_2",
                  std::abs(quad_exponent - 2.0) <= 0.05 * 2.0, quad_exponent, 2.0});
    write_table_csv(cfg.output + "/moc_verify.csv",
                    {"density", "delta", "measured_hat", "predicted_hat", "ratio"},
                    {col_density, col_delta, col_measured, col_predicted, col_ratio});
    bool pass = false;
    const json asj = assertions_json(as, &pass);
    json summary{{"scenario", cfg.scenario},
                 {"inputs_digest", cfg.digest()},
                 {"key_metrics", {{"Bhat", Bhat}, {"quad_exponent", quad_exponent}}},
                 {"assertions", asj},
                 {"pass", pass}};
    write_text(cfg.output + "/summary.json", summary.dump(2) + "\n");
    return summary;
}

inline json run_example_singular(const ScenarioConfig& cfg) {
    using namespace scenario_detail;
    const auto& j = cfg.raw;
    const int n = j.value("n", 1), m = j.value("m", 1);
    if (n > 2 || m > n) throw ConfigError("singular example supports n in {1,2}, m <= n");
    // the kink solution has hat-modulus ~ 0.21 delta, so the 1e-3 gate at
    // delta = 4h needs h <= 1.2e-3; the linear m=1 case affords it via multigrid
    const int res = j.value("resolution", (n == 1 && m == 1) ? 2049 : 33);
    const DomainSpec spec = DomainSpec::ball(n, m, 1.0);
    const Grid g = build_grid(spec, res);

    // model potential: sum of kinks plus the smooth tail
    const GridFunction psi = GridFunction::sample(g, [n, m](const Point& p) {
        double v = -2.0;
        for (int jx = 0; jx < m; ++jx) v += std::max(p[2 * jx], 0.0);
        for (int jx = m; jx < n; ++jx) v += abs2_complex(p, jx);
        return v;
    });
    const auto mu = measure_from(g, json{{"type", "singular_example"}}, m);
    const auto sub = subsolution_check(psi, mu, m, j.value("subsolution_tol", 0.2));

    SolveOptions opts = solver_from(j.value("solver", json::object()));
    const auto rep = solve_dirichlet(mu, [](const Point&) { return 0.0; }, m, opts);
    SolutionModulus sm;
    sm.hat_curve = hat_modulus(rep.u, {4.0 * g.h, 8.0 * g.h, 16.0 * g.h});
    const auto hfit = sm.hat_curve.holder_fit();
    sm.holder_alpha = hfit.slope;
    sm.holder_r2 = hfit.r2;

    // predicted exponent: the alpha = 1/2 reduction of the no-boundary-values
    // theorem; for m = n the Monge-Ampere branch applies
    double predicted = 0.0;
    if (m < n) {
        const double alpha = 0.5;
        const double r_t = static_cast<double>(m) / (n - m);
        const double m_t = 2.0 * m + (1.0 - m) * alpha;
        predicted = r_t / (2.0 * m_t * (m * m_t + r_t));
    } else {
        predicted = holder_exponent(0.5, m, n).ma_exponent;
    }
    const double slack = j.value("holder_slack", 0.8);

    std::vector<Assertion> as;
    as.push_back({"subsolution_A",
                  sub.holds || (sub.measured_A >= 0.8 && sub.measured_A <= 1.2), sub.measured_A,
                  1.0});
    as.push_back({"solution_converged", rep.converged, rep.residual_L1, opts.tol_residual});
    const double hat_small = sm.hat_curve.values.empty() ? 1.0 : sm.hat_curve.values.front();
    as.push_back({"continuity_hat_small", hat_small <= j.value("hat_tol", 1e-3), hat_small,
                  j.value("hat_tol", 1e-3)});
    as.push_back({"holder_exponent", sm.holder_alpha >= slack * predicted, sm.holder_alpha,
                  slack * predicted});

    write_grid_function_csv(rep.u, cfg.output + "/solution.csv");
    write_table_csv(cfg.output + "/hat_modulus.csv", {"delta", "hat"},
                    {sm.hat_curve.deltas, sm.hat_curve.values});
    bool pass = false;
    const json asj = assertions_json(as, &pass);
    json summary{{"scenario", cfg.scenario},
                 {"inputs_digest", cfg.digest()},
                 {"key_metrics",
                  {{"measured_A", sub.measured_A},
                   {"holder_alpha", sm.holder_alpha},
                   {"predicted_alpha", predicted},
                   {"residual_L1", rep.residual_L1}}},
                 {"assertions", asj},
                 {"pass", pass},
                 {"converged", rep.converged}};
    write_text(cfg.output + "/summary.json", summary.dump(2) + "\n");
    return summary;
}

// Dispatch. Returns the process exit code and (optionally) the summary.
inline int run_scenario(const ScenarioConfig& cfg, json* summary_out = nullptr) {
    json summary;
    try {
        if (cfg.scenario == "solve") {
            summary = cfg.raw.value("richardson", false) ? run_convergence_order(cfg) : run_solve(cfg);
        } else if (cfg.scenario == "capacity_scaling") {
            summary = run_capacity_scaling(cfg);
        } else if (cfg.scenario == "dini_check") {
            summary = run_dini_check(cfg);
        } else if (cfg.scenario == "iteration_lemma") {
            summary = run_iteration_lemma(cfg);
        } else if (cfg.scenario == "theorem2_verify") {
            summary = run_theorem2_verify(cfg);
        } else if (cfg.scenario == "stability") {
            summary = run_stability(cfg);
        } else if (cfg.scenario == "moc_verify") {
            summary = run_moc_verify(cfg);
        } else if (cfg.scenario == "example_singular") {
            summary = run_example_singular(cfg);
        } else {
            throw ConfigError("unknown scenario: " + cfg.scenario);
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const LabError& e) {
        if (summary_out) *summary_out = json{{"error", e.what()}};
        return kExitNumerical;
    }
    if (summary_out) *summary_out = summary;
    if (summary.contains("converged") && !summary.at("converged").get<bool>()) return kExitNumerical;
    return summary.value("pass", false) ? kExitOk : kExitAssertion;
}

}  // namespace hesslab

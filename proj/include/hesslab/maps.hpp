#pragma once

#include <map>
#include <memory>
#include <optional>

#include "hesslab/core.hpp"

namespace hesslab {

// ---------------------------------------------------------------------------
// Modulus of continuity: increasing, subadditive, kappa(0) = 0 on [0, L].
// Closed forms: power c*t^alpha and log-power c*t^alpha*(-log t)^nu; anything
// else is tabulated and interpolated as a power law per segment.
// ---------------------------------------------------------------------------

enum class KappaForm { tabulated, power, logpower };

struct ModulusOfContinuity {
    KappaForm form = KappaForm::power;
    double c = 1.0;
    double alpha = 1.0;
    double nu = 0.0;
    double L = 1.0;
    std::vector<double> ts, ks;  // strictly increasing ts > 0

    static ModulusOfContinuity power(double alpha, double c = 1.0, double L = 1.0) {
        if (alpha <= 0.0) throw LabError("power modulus needs alpha > 0");
        ModulusOfContinuity k;
        k.form = KappaForm::power;
        k.alpha = alpha;
        k.c = c;
        k.L = L;
        return k;
    }

    // c * t^alpha * (-log t)^nu for t < 1; alpha = 0 requires nu < 0.
    static ModulusOfContinuity logpower(double alpha, double nu, double c = 1.0, double L = 0.3) {
        if (alpha < 0.0 || (alpha == 0.0 && nu >= 0.0)) throw LabError("invalid logpower modulus");
        ModulusOfContinuity k;
        k.form = KappaForm::logpower;
        k.alpha = alpha;
        k.nu = nu;
        k.c = c;
        k.L = L;
        return k;
    }

    static ModulusOfContinuity tabulated(std::vector<double> t, std::vector<double> kap) {
        if (t.size() != kap.size() || t.size() < 2) throw LabError("modulus table too small");
        ModulusOfContinuity k;
        k.form = KappaForm::tabulated;
        k.ts = std::move(t);
        k.ks = std::move(kap);
        k.L = k.ts.back();
        for (size_t i = 0; i + 1 < k.ts.size(); ++i)
            if (!(k.ts[i] > 0.0) || k.ts[i + 1] <= k.ts[i]) throw LabError("modulus samples not increasing");
        return k;
    }

    double operator()(double t) const {
        if (t <= 0.0) return 0.0;
        switch (form) {
            case KappaForm::power:
                return c * std::pow(t, alpha);
            case KappaForm::logpower: {
                const double tt = std::min(t, 0.999);
                return c * std::pow(tt, alpha) * std::pow(-std::log(tt), nu);
            }
            case KappaForm::tabulated: {
                // per-segment power interpolation, power tails at both ends
                const auto& X = ts;
                const auto& Y = ks;
                size_t i;
                if (t <= X.front())
                    i = 0;
                else if (t >= X.back())
                    i = X.size() - 2;
                else
                    i = static_cast<size_t>(std::upper_bound(X.begin(), X.end(), t) - X.begin()) - 1;
                const double x1 = X[i], x2 = X[i + 1];
                double y1 = std::max(Y[i], 0.0), y2 = std::max(Y[i + 1], 0.0);
                if (y1 <= 0.0 || y2 <= 0.0) {  // linear fallback near zero values
                    const double w = (t - x1) / (x2 - x1);
                    return std::max(y1 + w * (y2 - y1), 0.0);
                }
                const double p = std::log(y2 / y1) / std::log(x2 / x1);
                return y1 * std::pow(t / x1, p);
            }
        }
        return 0.0;
    }

    // Subadditivity on the sample lattice within a relative tolerance.
    bool is_subadditive(double tol = 1e-6) const {
        std::vector<double> probe;
        if (form == KappaForm::tabulated)
            probe = ts;
        else
            for (int i = 1; i <= 32; ++i) probe.push_back(L * i / 32.0);
        for (double s : probe)
            for (double t : probe) {
                if (s + t > (probe.back())) continue;
                const double lhs = (*this)(s + t), rhs = (*this)(s) + (*this)(t);
                if (lhs > rhs * (1.0 + tol) + 1e-14) return false;
            }
        return true;
    }

    bool is_nondecreasing(double tol = 1e-12) const {
        double prev = 0.0;
        std::vector<double> probe;
        if (form == KappaForm::tabulated)
            probe = ts;
        else
            for (int i = 1; i <= 64; ++i) probe.push_back(L * i / 64.0);
        for (double t : probe) {
            const double v = (*this)(t);
            if (v < prev - tol) return false;
            prev = v;
        }
        return true;
    }
};

// ---------------------------------------------------------------------------
// Tabulated monotone one-variable maps. Interpolation is a power law per
// segment (linear in log-log space), which composition and inversion
// preserve; integrals against dt/t then have closed forms per segment.
// ---------------------------------------------------------------------------

enum class MapInterp { loglog, linear, step_right };

struct MonotoneMap {
    bool nondecreasing = true;
    MapInterp interp = MapInterp::loglog;
    std::vector<double> xs, ys;
    std::function<double(double)> fn;            // optional exact evaluator
    std::optional<std::array<double, 2>> power;  // {c, p}: y = c x^p exactly

    static MonotoneMap power_map(double c, double p) {
        MonotoneMap m;
        m.power = {{c, p}};
        m.nondecreasing = p >= 0.0;
        m.fn = [c, p](double x) { return x <= 0.0 ? (p > 0.0 ? 0.0 : c) : c * std::pow(x, p); };
        m.xs = {1e-6, 1.0};
        m.ys = {m.fn(1e-6), m.fn(1.0)};
        return m;
    }

    static MonotoneMap from_function(std::function<double(double)> f, double x_min, double x_max,
                                     int per_decade = 256, bool nondecr = true) {
        MonotoneMap m;
        m.nondecreasing = nondecr;
        m.fn = f;
        const double decades = std::log10(x_max / x_min);
        const int npts = std::max(2, static_cast<int>(std::ceil(decades * per_decade)) + 1);
        m.xs.resize(static_cast<size_t>(npts));
        m.ys.resize(static_cast<size_t>(npts));
        for (int i = 0; i < npts; ++i) {
            const double lx = std::log10(x_min) + decades * i / (npts - 1);
            m.xs[static_cast<size_t>(i)] = std::pow(10.0, lx);
            m.ys[static_cast<size_t>(i)] = f(m.xs[static_cast<size_t>(i)]);
        }
        return m;
    }

    static MonotoneMap from_samples(std::vector<double> x, std::vector<double> y,
                                    bool nondecr = true, MapInterp interp = MapInterp::loglog) {
        if (x.size() != y.size() || x.size() < 2) throw LabError("map table too small");
        MonotoneMap m;
        m.nondecreasing = nondecr;
        m.interp = interp;
        m.xs = std::move(x);
        m.ys = std::move(y);
        return m;
    }

    double x_min() const { return xs.front(); }
    double x_max() const { return xs.back(); }

    double operator()(double x) const {
        if (fn) return fn(x);
        const auto& X = xs;
        const auto& Y = ys;
        if (interp == MapInterp::step_right) {
            if (x < X.front()) return nondecreasing ? 0.0 : Y.front();
            const size_t i =
                static_cast<size_t>(std::upper_bound(X.begin(), X.end(), x) - X.begin()) - 1;
            return Y[i];
        }
        size_t i;
        if (x <= X.front())
            i = 0;
        else if (x >= X.back())
            i = X.size() - 2;
        else
            i = static_cast<size_t>(std::upper_bound(X.begin(), X.end(), x) - X.begin()) - 1;
        const double x1 = X[i], x2 = X[i + 1], y1 = Y[i], y2 = Y[i + 1];
        if (interp == MapInterp::linear || x <= 0.0 || y1 <= 0.0 || y2 <= 0.0) {
            const double w = (x - x1) / (x2 - x1);
            return y1 + w * (y2 - y1);
        }
        const double p = std::log(y2 / y1) / std::log(x2 / x1);
        return y1 * std::pow(x / x1, p);
    }

    // Lower inverse: inf{x : f(x) = y} by monotone bisection on the evaluator,
    // with log-log tail extension beyond the tabulated range.
    double inverse(double y, double lo = 0.0, double hi = 0.0) const {
        if (power) {
            const double c = (*power)[0], p = (*power)[1];
            if (p == 0.0) throw LabError("constant map is not invertible");
            return std::pow(y / c, 1.0 / p);
        }
        double a = lo > 0.0 ? lo : x_min(), b = hi > 0.0 ? hi : x_max();
        auto above = [&](double x) { return nondecreasing ? (*this)(x) >= y : (*this)(x) <= y; };
        int guard = 0;
        while (!above(b)) {
            b *= 4.0;
            if (!std::isfinite(b)) {
                if (above(std::numeric_limits<double>::max())) {
                    b = std::numeric_limits<double>::max();
                    break;
                }
                throw LabError("inverse target out of range");
            }
            if (++guard > 600) throw LabError("inverse target out of range");
        }
        guard = 0;
        while (above(a)) {
            a *= 0.25;
            if (a < 1e-300 || ++guard > 400) return 0.0;
        }
        for (int it = 0; it < 200; ++it) {
            const double mid = std::sqrt(a * b);
            if (above(mid))
                b = mid;
            else
                a = mid;
            if (b - a <= 1e-15 * b) break;
        }
        return b;
    }

    bool check_monotone(double tol = 1e-9) const {
        for (size_t i = 0; i + 1 < xs.size(); ++i) {
            const double d = ys[i + 1] - ys[i];
            if (nondecreasing ? d < -tol : d > tol) return false;
        }
        return true;
    }

    // Least nondecreasing majorant (running max), per the iteration lemma's
    // remark for non-monotone empirical data.
    MonotoneMap least_nondecreasing_majorant() const {
        MonotoneMap m = *this;
        m.fn = nullptr;
        m.power.reset();
        m.nondecreasing = true;
        double run = -std::numeric_limits<double>::infinity();
        for (double& v : m.ys) {
            run = std::max(run, v);
            v = run;
        }
        return m;
    }
};

// ---------------------------------------------------------------------------
// Exact segment integration of y(t)^(1/m) / t dt treating y as a power law
// per tabulated segment, with a power tail below the first sample.
// ---------------------------------------------------------------------------

namespace detail {

inline double power_segment_integral(double x1, double y1, double x2, double y2, double a, double b,
                                     double inv_m) {
    // integral over [a,b] of (y(t))^(inv_m) dt / t with y = y1 (t/x1)^p,
    // evaluated as (y(b)^(1/m) - y(a)^(1/m)) / (p/m) in log space so that
    // near-vertical segments (underflow cliffs of exponential-type maps)
    // stay finite.
    if (y1 <= 0.0 || y2 <= 0.0) return 0.0;
    const double ly1 = std::log(y1);
    const double p = (std::log(y2) - ly1) / std::log(x2 / x1);
    const double q = p * inv_m;
    if (std::abs(q) < 1e-14) return std::exp(inv_m * ly1) * std::log(b / a);
    const double yim_a = std::exp(inv_m * ly1 + q * std::log(a / x1));
    const double yim_b = std::exp(inv_m * ly1 + q * std::log(b / x1));
    return (yim_b - yim_a) / q;
}

}  // namespace detail

// integral over (0, tau] of gamma(t)^(1/m)/t dt; throws when the head
// diverges (nonpositive power slope at 0).
inline double dini_weighted_integral(const MonotoneMap& gamma, double tau, int m) {
    const double inv_m = 1.0 / static_cast<double>(m);
    if (gamma.power) {
        const double c = (*gamma.power)[0], p = (*gamma.power)[1];
        if (p <= 0.0) throw LabError("Dini condition fails");
        const double q = p * inv_m;
        return std::pow(c, inv_m) / q * std::pow(tau, q);
    }
    const auto& X = gamma.xs;
    double total = 0.0;
    // head below the first sample: power-tail model from the first segment
    const double head_x = std::min(tau, X.front());
    {
        const double y0 = gamma(X[0]), y1 = gamma(X[1]);
        if (!(y0 >= 0.0) || !(y1 >= 0.0)) throw LabError("gamma must be nonnegative");
        if (y0 > 0.0) {
            const double p = std::log(std::max(y1, 1e-300) / y0) / std::log(X[1] / X[0]);
            if (p <= 1e-12) throw LabError("Dini condition fails");
            const double q = p * inv_m;
            const double c = std::pow(y0, inv_m) / std::pow(X[0], q);
            total += c / q * std::pow(head_x, q);
        }
    }
    if (tau <= X.front()) return total;
    for (size_t i = 0; i + 1 < X.size(); ++i) {
        const double a = X[i], b = std::min(X[i + 1], tau);
        if (b <= a) break;
        total += detail::power_segment_integral(X[i], gamma(X[i]), X[i + 1], gamma(X[i + 1]), a, b, inv_m);
        if (b >= tau) break;
    }
    if (tau > X.back()) {
        const size_t k = X.size();
        total += detail::power_segment_integral(X[k - 2], gamma(X[k - 2]), X[k - 1], gamma(X[k - 1]),
                                                X.back(), tau, inv_m);
    }
    return total;
}

// ---------------------------------------------------------------------------
// Dini integral classifier.
// ---------------------------------------------------------------------------

enum class DiniVerdict { convergent, diverged, inconclusive };

struct DiniReport {
    DiniVerdict verdict = DiniVerdict::inconclusive;
    double value = 0.0;          // integral over (0, t_hi] when convergent
    double tail_estimate = 0.0;  // extrapolated contribution of (0, t_min]
};

// integral of kappa(t)^(1/m) / (t |log t|^eps) near zero, classified by
// dyadic tail sums. With eps >= 1 the upper limit is 1/e (the weight is
// singular at t = 1); with eps = 0 it is min(1, L).
inline DiniReport dini_integral(const ModulusOfContinuity& kappa, int m, int log_weight_eps,
                                double t_min = 1e-12) {
    const double inv_m = 1.0 / static_cast<double>(m);
    const double t_hi = (log_weight_eps >= 1) ? std::exp(-1.0) : std::min(1.0, kappa.L);
    if (kappa(t_min * 0.5) < 0.0) throw LabError("kappa must be nonnegative");

    // Dyadic sums S_j ~ integral over (2^-(j+1), 2^-j], evaluated at midpoints.
    const int J = 120;
    std::vector<double> S(static_cast<size_t>(J + 1), 0.0);
    const double ln2 = std::log(2.0);
    for (int j = 1; j <= J; ++j) {
        const double t = std::pow(2.0, -(j + 0.5));
        const double w = (log_weight_eps >= 1) ? std::pow(-std::log(t), -log_weight_eps) : 1.0;
        S[static_cast<size_t>(j)] = std::pow(std::max(kappa(t), 0.0), inv_m) * w * ln2;
    }

    DiniReport rep;
    // classify from the last decades
    bool all_zero = true;
    for (int j = J / 2; j <= J; ++j) all_zero = all_zero && S[static_cast<size_t>(j)] == 0.0;
    if (all_zero) {
        rep.verdict = DiniVerdict::convergent;
    } else {
        double max_ratio = 0.0;
        bool ratio_ok = true;
        for (int j = J - 40; j < J; ++j) {
            const double s0 = S[static_cast<size_t>(j)], s1 = S[static_cast<size_t>(j + 1)];
            if (s0 <= 0.0) {
                ratio_ok = false;
                break;
            }
            max_ratio = std::max(max_ratio, s1 / s0);
        }
        if (ratio_ok && max_ratio < 0.98) {
            rep.verdict = DiniVerdict::convergent;  // geometric decay
        } else {
            // polynomial regime: decay exponent of S_j against j
            std::vector<double> js, ss;
            for (int j = J / 2; j <= J; ++j)
                if (S[static_cast<size_t>(j)] > 0.0) {
                    js.push_back(static_cast<double>(j));
                    ss.push_back(S[static_cast<size_t>(j)]);
                }
            if (js.size() < 8) {
                rep.verdict = DiniVerdict::inconclusive;
            } else {
                const double p_hat = -fit_loglog(js, ss).slope;
                if (p_hat >= 1.15)
                    rep.verdict = DiniVerdict::convergent;
                else if (p_hat <= 1.02)
                    rep.verdict = DiniVerdict::diverged;
                else
                    rep.verdict = DiniVerdict::inconclusive;
            }
        }
    }

    if (rep.verdict != DiniVerdict::diverged) {
        // adaptive Simpson in s = -log t on [t_min, t_hi]
        auto g = [&](double s) {
            const double t = std::exp(-s);
            const double w = (log_weight_eps >= 1) ? std::pow(s, -log_weight_eps) : 1.0;
            return std::pow(std::max(kappa(t), 0.0), inv_m) * w;
        };
        std::function<double(double, double, double, double, double, int)> simpson =
            [&](double a, double b, double fa, double fb, double fm, int depth) -> double {
            const double mid = 0.5 * (a + b);
            const double lm = 0.5 * (a + mid), rm = 0.5 * (mid + b);
            const double flm = g(lm), frm = g(rm);
            const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
            const double left = (mid - a) / 6.0 * (fa + 4.0 * flm + fm);
            const double right = (b - mid) / 6.0 * (fm + 4.0 * frm + fb);
            if (depth > 48 || std::abs(left + right - whole) < 1e-10 * (1.0 + std::abs(whole)))
                return left + right + (left + right - whole) / 15.0;
            return simpson(a, mid, fa, fm, flm, depth + 1) + simpson(mid, b, fm, fb, frm, depth + 1);
        };
        const double a = -std::log(t_hi), b = -std::log(t_min);
        rep.value = simpson(a, b, g(a), g(b), g(0.5 * (a + b)), 0);
        // tail below t_min under a power model fitted at the small end
        const double k1 = kappa(t_min), k2 = kappa(2.0 * t_min);
        if (k1 > 0.0 && k2 > k1) {
            const double p = std::log(k2 / k1) / std::log(2.0);
            const double q = p * inv_m;
            if (q > 1e-12 && log_weight_eps == 0)
                rep.tail_estimate = std::pow(k1, inv_m) / q;
            else if (q > 1e-12)
                rep.tail_estimate = std::pow(k1, inv_m) / q * std::pow(-std::log(t_min), -log_weight_eps);
            rep.value += rep.tail_estimate;
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// The paper's estimate functions.
// ---------------------------------------------------------------------------

// Volume-capacity comparison profile: t^r for m < n (0 < r < m/(n-m)),
// exp(-b t^(-1/n)) for m = n (0 < b < 2n).
inline MonotoneMap ell_m(int m, int n, double r, double b) {
    if (m < n) {
        if (!(r > 0.0) || !(r < static_cast<double>(m) / static_cast<double>(n - m)))
            throw LabError("parameter outside paper range");
        return MonotoneMap::power_map(1.0, r);
    }
    if (!(b > 0.0) || !(b < 2.0 * n)) throw LabError("parameter outside paper range");
    const double bn = b, nn = static_cast<double>(n);
    return MonotoneMap::from_function(
        [bn, nn](double t) { return t <= 0.0 ? 0.0 : std::exp(-bn * std::pow(t, -1.0 / nn)); }, 1e-9,
        10.0, 256, true);
}

// Lower inverse of x -> x^(2m) kappa(x)^(1-m); exact for power kappa.
inline MonotoneMap theta_m(const ModulusOfContinuity& kappa, int m) {
    const double mm = static_cast<double>(m);
    if (kappa.form == KappaForm::power) {
        const double expo = 2.0 * mm + kappa.alpha * (1.0 - mm);
        const double scale = std::pow(kappa.c, 1.0 - mm);
        // y = scale * x^expo  =>  x = (y/scale)^(1/expo)
        return MonotoneMap::power_map(std::pow(1.0 / scale, 1.0 / expo), 1.0 / expo);
    }
    auto forward = [kappa, mm](double x) {
        return x <= 0.0 ? 0.0 : std::pow(x, 2.0 * mm) * std::pow(std::max(kappa(x), 1e-300), 1.0 - mm);
    };
    auto inv = [forward](double y) {
        if (y <= 0.0) return 0.0;
        double a = 1e-12, b = 10.0;
        int guard = 0;
        while (forward(b) < y && ++guard < 200) b *= 4.0;
        guard = 0;
        while (forward(a) > y && ++guard < 400) a *= 0.25;
        for (int it = 0; it < 200; ++it) {
            const double mid = std::sqrt(a * b);
            if (forward(mid) >= y)
                b = mid;
            else
                a = mid;
            if (b - a < 1e-15 * b) break;
        }
        return b;
    };
    return MonotoneMap::from_function(inv, 1e-9, forward(2.0), 256, true);
}

// vartheta_m = kappa o theta_m o ell_m.
inline MonotoneMap vartheta_m(const ModulusOfContinuity& kappa, int m, int n, double r, double b) {
    const MonotoneMap ell = ell_m(m, n, r, b);
    const MonotoneMap th = theta_m(kappa, m);
    auto f = [kappa, ell, th](double t) { return t <= 0.0 ? 0.0 : kappa(th(ell(t))); };
    return MonotoneMap::from_function(f, 1e-9, 1.0, 256, true);
}

// Empirical Gamma from capacity/mass samples: running max of mass over
// capacities <= t, a right-continuous step map.
struct CapacitySample {
    double capacity = 0.0;
    double mass = 0.0;
};

inline MonotoneMap gamma_from_measure(std::vector<CapacitySample> samples) {
    if (samples.size() < 3) throw LabError("family too small");
    std::sort(samples.begin(), samples.end(),
              [](const CapacitySample& a, const CapacitySample& b) { return a.capacity < b.capacity; });
    std::vector<double> x, y;
    double run = 0.0;
    for (const auto& s : samples) {
        run = std::max(run, s.mass);
        x.push_back(s.capacity);
        y.push_back(run);
    }
    return MonotoneMap::from_samples(std::move(x), std::move(y), true, MapInterp::step_right);
}

// J_Gamma(tau) = integral over (0, tau] of gamma(t)^(1/m)/t dt. Tabulated
// input is integrated segment-exactly with prefix sums, so evaluation is
// O(log segments).
inline MonotoneMap J_Gamma(const MonotoneMap& gamma, int m) {
    if (gamma.power) {
        const double c = (*gamma.power)[0], p = (*gamma.power)[1];
        if (p <= 0.0) throw LabError("Dini condition fails");
        if (c == 0.0) return MonotoneMap::power_map(0.0, 1.0);
        const double q = p / static_cast<double>(m);
        return MonotoneMap::power_map(std::pow(c, 1.0 / static_cast<double>(m)) / q, q);
    }
    const double inv_m = 1.0 / static_cast<double>(m);
    auto X = std::make_shared<std::vector<double>>(gamma.xs);
    auto Y = std::make_shared<std::vector<double>>();
    Y->reserve(X->size());
    for (double x : *X) Y->push_back(std::max(gamma(x), 0.0));
    // head below the first sample under a power-tail model
    double head = 0.0;
    if ((*Y)[0] > 0.0) {
        const double p =
            std::log(std::max((*Y)[1], 1e-300) / (*Y)[0]) / std::log((*X)[1] / (*X)[0]);
        if (p <= 1e-12) throw LabError("Dini condition fails");
        const double q = p * inv_m;
        head = std::pow((*Y)[0], inv_m) / q;
    }
    auto prefix = std::make_shared<std::vector<double>>(X->size(), 0.0);
    (*prefix)[0] = head;
    for (size_t i = 0; i + 1 < X->size(); ++i)
        (*prefix)[i + 1] = (*prefix)[i] + detail::power_segment_integral((*X)[i], (*Y)[i], (*X)[i + 1],
                                                                         (*Y)[i + 1], (*X)[i],
                                                                         (*X)[i + 1], inv_m);
    const double hx0 = (*X)[0], hy0 = (*Y)[0], hx1 = (*X)[1], hy1 = (*Y)[1];
    auto eval = [X, Y, prefix, inv_m, hx0, hy0, hx1, hy1](double tau) {
        if (tau <= 0.0) return 0.0;
        if (tau <= hx0) {
            if (hy0 <= 0.0) return 0.0;
            const double p = std::log(std::max(hy1, 1e-300) / hy0) / std::log(hx1 / hx0);
            const double q = p * inv_m;
            const double c = std::pow(hy0, inv_m) / std::pow(hx0, q);
            return c / q * std::pow(tau, q);
        }
        size_t i;
        if (tau >= X->back())
            i = X->size() - 2;
        else
            i = static_cast<size_t>(std::upper_bound(X->begin(), X->end(), tau) - X->begin()) - 1;
        return (*prefix)[i] + detail::power_segment_integral((*X)[i], (*Y)[i], (*X)[i + 1],
                                                             (*Y)[i + 1], (*X)[i], tau, inv_m);
    };
    MonotoneMap J;
    J.nondecreasing = true;
    J.xs = *X;
    J.ys = *prefix;
    J.fn = eval;
    return J;
}

// h_Gamma: reciprocal of s -> s^(2m) J_Gamma^{-1}(s).
inline MonotoneMap h_Gamma(const MonotoneMap& gamma, int m) {
    const MonotoneMap J = J_Gamma(gamma, m);
    if (J.power) {
        const double cj = (*J.power)[0], pj = (*J.power)[1];
        // J^{-1}(s) = (s/cj)^(1/pj); H(s) = s^(2m) (s/cj)^(1/pj) = c s^(2m+1/pj)
        const double pe = 2.0 * m + 1.0 / pj;
        const double ce = std::pow(1.0 / cj, 1.0 / pj);
        // h = H^{-1}
        return MonotoneMap::power_map(std::pow(1.0 / ce, 1.0 / pe), 1.0 / pe);
    }
    const double mm = static_cast<double>(m);
    auto H = [J, mm](double s) { return s <= 0.0 ? 0.0 : std::pow(s, 2.0 * mm) * J.inverse(s); };
    // J^{-1} grows violently past the tabulated range for exponential-type
    // gamma, so bracket from the known range cap and expand sparingly.
    const double smax = J(J.x_max());
    auto h = [H, smax](double t) {
        if (t <= 0.0) return 0.0;
        double a = 1e-14 * smax, b = smax;
        int guard = 0;
        while (H(b) < t && ++guard < 60) b *= 2.0;
        guard = 0;
        while (H(a) > t && ++guard < 300) a *= 0.25;
        for (int it = 0; it < 120; ++it) {
            const double mid = std::sqrt(a * b);
            if (H(mid) >= t)
                b = mid;
            else
                a = mid;
            if (b - a < 1e-14 * b) break;
        }
        return b;
    };
    return MonotoneMap::from_function(h, 1e-9 * H(smax), H(smax), 48, true);
}

// ---------------------------------------------------------------------------
// Kolodziej-type iteration: if t f(s+t) <= f(s) eta(f(s)) for t in [0,1] and
// eta satisfies the Dini condition, then f vanishes past
//   S_inf = s0 + e * integral_0^{e f(s0)} eta(t)/t dt,   eta(f(s0)) <= 1/e.
// ---------------------------------------------------------------------------

struct IterationResult {
    double S_infinity = 0.0;
    double s0 = 0.0;
    std::vector<double> trace;  // the s_j cascade of the proof
};

inline IterationResult kolodziej_iteration(const MonotoneMap& f, const MonotoneMap& eta,
                                           bool verify_hypothesis = true) {
    if (f.nondecreasing) throw LabError("f must be nonincreasing");
    if (!eta.nondecreasing) throw LabError("eta must be nondecreasing");
    const auto& S = f.xs;

    if (verify_hypothesis) {
        for (size_t i = 0; i < S.size(); ++i) {
            const double s = S[i];
            const double rhs = f(s) * eta(f(s));
            for (size_t j = i + 1; j < S.size(); ++j) {
                const double t = S[j] - s;
                if (t > 1.0) break;
                if (t * f(S[j]) > rhs * (1.0 + 1e-9) + 1e-18) {
                    char buf[128];
                    std::snprintf(buf, sizeof(buf), "hypothesis violated at (s,t)=(%.6g,%.6g)", s, t);
                    throw LabError(buf);
                }
            }
        }
    }

    IterationResult res;
    // first lattice point with eta(f(s0)) <= 1/e
    const double inv_e = std::exp(-1.0);
    bool found = false;
    for (double s : S) {
        if (eta(f(s)) <= inv_e) {
            res.s0 = s;
            found = true;
            break;
        }
    }
    if (!found) throw LabError("no admissible s0: eta(f) never reaches 1/e");

    const double f0 = f(res.s0);
    const double upper = std::exp(1.0) * f0;
    const double integral = upper > 0.0 ? dini_weighted_integral(eta, upper, 1) : 0.0;
    res.S_infinity = res.s0 + std::exp(1.0) * integral;

    // proof cascade
    double sj = res.s0;
    res.trace.push_back(sj);
    for (int j = 0; j < 300; ++j) {
        const double target = f(sj) * inv_e;
        if (f(sj) <= 0.0) break;
        double next = -1.0;
        for (double s : S)
            if (s > sj && f(s) < target) {
                next = s;
                break;
            }
        if (next < 0.0) break;
        sj = next;
        res.trace.push_back(sj);
    }
    return res;
}

// ---------------------------------------------------------------------------
// Uniform and stability bounds.
// ---------------------------------------------------------------------------

struct UniformBound {
    double lower = 0.0;
    double upper = 0.0;
    double a = 0.0;
};

// lower = min g - 2e (mu(Omega)/a)^(1/m) - integral_0^a gamma^(1/m)/t dt,
// with a = e^m gamma^{-1}(e^-m).
inline UniformBound uniform_bound(double g_min, double g_max, double mu_mass,
                                  const MonotoneMap& gamma, int m) {
    UniformBound ub;
    ub.upper = g_max;
    const double em = std::exp(static_cast<double>(m));
    double ginv;
    try {
        ginv = gamma.inverse(1.0 / em);
    } catch (const LabError&) {
        throw LabError("gamma range insufficient");
    }
    if (!(ginv > 0.0)) throw LabError("gamma range insufficient");
    ub.a = em * ginv;
    const double integral = dini_weighted_integral(gamma, ub.a, m);
    ub.lower = g_min - 2.0 * std::exp(1.0) * std::pow(mu_mass / ub.a, 1.0 / static_cast<double>(m)) -
               integral;
    return ub;
}

// sup (v-u)+ <= Bhat * h_Gamma(2^m e^m ||(v-u)+||_{m,mu}^m).
inline double stability_bound(double Lm_norm, const MonotoneMap& gamma, int m, double Bhat = 1.0) {
    const MonotoneMap h = h_Gamma(gamma, m);
    const double arg = std::pow(2.0 * std::exp(1.0), m) * std::pow(Lm_norm, m);
    return Bhat * h(arg);
}

// Named constants fitted per experiment family, with provenance notes. The
// source text never pins numeric values for these; every entry is measured.
struct EstimateConstants {
    std::map<std::string, double> values;
    std::map<std::string, std::string> provenance;

    void set(const std::string& name, double v, const std::string& how) {
        if (!(v > 0.0)) throw LabError("fitted constant must be positive: " + name);
        values[name] = v;
        provenance[name] = how;
    }
    double get(const std::string& name, double fallback = 1.0) const {
        auto it = values.find(name);
        return it == values.end() ? fallback : it->second;
    }
};

// Predicted modulus of the solution:
//   kappa_hat_m(d) = h_m[C κ_phi(θ_m(D d^2))] + κ_phi(d) + κ_g(sqrt d) + d,
// where h_m is built from gamma_m = κ_phi o θ_m o ell_m.
inline MonotoneMap predicted_modulus(const ModulusOfContinuity& kappa_phi,
                                     const ModulusOfContinuity& kappa_g, int m, int n, double r,
                                     double b, const EstimateConstants& constants) {
    const MonotoneMap gm = vartheta_m(kappa_phi, m, n, r, b);
    const MonotoneMap h = h_Gamma(gm, m);
    const MonotoneMap th = theta_m(kappa_phi, m);
    const double C = constants.get("C_m", 1.0);
    const double D = constants.get("D", 1.0);
    auto f = [kappa_phi, kappa_g, h, th, C, D](double d) {
        if (d <= 0.0) return 0.0;
        return h(C * kappa_phi(th(D * d * d))) + kappa_phi(d) + kappa_g(std::sqrt(d)) + d;
    };
    return MonotoneMap::from_function(f, 1e-8, 1.0, 64, true);
}

struct HolderExponents {
    double hessian = 0.0;       // Cor: 2 r~ a^2 / (m m~ (m~ + 2 a r~)), m < n
    double ma_exponent = 0.0;   // Monge-Ampere branch: a / (n n~)
    double ma_log_power = 0.5;  // the (-log d)^(1/2) factor
};

inline HolderExponents holder_exponent(double alpha, int m, int n) {
    if (!(alpha > 0.0) || alpha > 1.0) throw LabError("alpha outside (0,1]");
    HolderExponents he;
    const double nn = static_cast<double>(n);
    const double n_tilde = (2.0 - alpha) * nn + alpha;
    he.ma_exponent = alpha / (nn * n_tilde);
    if (m == n) {
        he.hessian = std::numeric_limits<double>::quiet_NaN();
        return he;  // hessian branch callers must use ma_log ("use ma_log branch")
    }
    const double mm = static_cast<double>(m);
    const double r_tilde = mm / (nn - mm);
    const double m_tilde = 2.0 * mm + alpha * (1.0 - mm);
    he.hessian = 2.0 * r_tilde * alpha * alpha / (mm * m_tilde * (m_tilde + 2.0 * alpha * r_tilde));
    return he;
}

inline double holder_exponent_hessian(double alpha, int m, int n) {
    if (m == n) throw LabError("use ma_log branch");
    return holder_exponent(alpha, m, n).hessian;
}

// Theorem-2 style bound: Bhat (vtheta(c) + vtheta(c)^m) c.
inline double theorem2_bound(const ModulusOfContinuity& kappa_phi, int m, int n, double r, double b,
                             double capacity, double Bhat = 1.0) {
    const MonotoneMap vt = vartheta_m(kappa_phi, m, n, r, b);
    const double v = vt(capacity);
    return Bhat * (v + std::pow(v, m)) * capacity;
}

}  // namespace hesslab

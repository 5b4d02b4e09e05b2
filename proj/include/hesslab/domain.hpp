#pragma once

#include <cstdio>
#include <fstream>
#include <limits>
#include <optional>
#include <sstream>

#include "hesslab/core.hpp"

namespace hesslab {

enum class DomainKind { ball, polydisc, custom };

// Computational domain Omega in C^n given by a defining function rho < 0
// inside, = 0 on the boundary. Presets carry closed forms; custom domains a
// callable or sampled rho.
struct DomainSpec {
    DomainKind kind = DomainKind::ball;
    int n = 1;  // complex dimension
    int m = 1;  // Hessian order, 1 <= m <= n
    Point center{};
    std::array<double, kMaxComplexDim> radii{};         // polydisc radii (ball uses radii[0])
    std::function<double(const Point&)> custom_rho;     // custom defining function
    std::function<double(const Point&)> custom_sd;      // optional signed distance override

    static DomainSpec ball(int n, int m, Point c, double R) {
        if (m < 1 || m > n) throw LabError("invalid hessian order");
        if (R <= 0.0) throw LabError("radius must be positive");
        DomainSpec s;
        s.kind = DomainKind::ball;
        s.n = n;
        s.m = m;
        s.center = c;
        s.radii[0] = R;
        return s;
    }
    static DomainSpec ball(int n, int m, double R = 1.0) { return ball(n, m, make_point(2 * n), R); }

    static DomainSpec polydisc(int n, int m, Point c, std::vector<double> r) {
        if (m < 1 || m > n) throw LabError("invalid hessian order");
        if (static_cast<int>(r.size()) != n) throw LabError("polydisc needs n radii");
        for (double ri : r)
            if (ri <= 0.0) throw LabError("radius must be positive");
        DomainSpec s;
        s.kind = DomainKind::polydisc;
        s.n = n;
        s.m = m;
        s.center = c;
        for (int j = 0; j < n; ++j) s.radii[static_cast<size_t>(j)] = r[static_cast<size_t>(j)];
        return s;
    }

    static DomainSpec custom(int n, int m, std::function<double(const Point&)> rho) {
        if (m < 1 || m > n) throw LabError("invalid hessian order");
        DomainSpec s;
        s.kind = DomainKind::custom;
        s.n = n;
        s.m = m;
        s.custom_rho = std::move(rho);
        return s;
    }

    int real_dim() const { return 2 * n; }

    // Signed Euclidean distance to the boundary: negative inside. Exact for
    // ball; exact for polydisc points whose nearest face is axis-aligned
    // (always the case inside). Custom domains fall back to rho itself unless
    // a signed-distance override is given.
    double signed_distance(const Point& p) const {
        switch (kind) {
            case DomainKind::ball:
                return std::sqrt(dist2(p, center)) - radii[0];
            case DomainKind::polydisc: {
                double sd = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < n; ++j) {
                    const double dx = p[2 * j] - center[2 * j];
                    const double dy = p[2 * j + 1] - center[2 * j + 1];
                    sd = std::max(sd, std::sqrt(dx * dx + dy * dy) - radii[static_cast<size_t>(j)]);
                }
                return sd;
            }
            case DomainKind::custom:
                return custom_sd ? custom_sd(p) : custom_rho(p);
        }
        return 0.0;
    }

    double rho(const Point& p) const {
        switch (kind) {
            case DomainKind::ball:
                return dist2(p, center) - radii[0] * radii[0];
            case DomainKind::polydisc: {
                double r = -std::numeric_limits<double>::infinity();
                for (int j = 0; j < n; ++j) {
                    const double dx = p[2 * j] - center[2 * j];
                    const double dy = p[2 * j + 1] - center[2 * j + 1];
                    r = std::max(r, std::sqrt(dx * dx + dy * dy) - radii[static_cast<size_t>(j)]);
                }
                return r;
            }
            case DomainKind::custom:
                return custom_rho(p);
        }
        return 0.0;
    }

    // Nearest boundary point (presets: closed form, custom: Newton-free
    // bisection along the gradient estimate is not attempted; callers use
    // boundary_crossing instead).
    Point project_to_boundary(const Point& p) const {
        Point q = p;
        if (kind == DomainKind::ball) {
            const double d = std::sqrt(dist2(p, center));
            if (d < 1e-14) {
                q = center;
                q[0] += radii[0];
                return q;
            }
            const double s = radii[0] / d;
            for (int i = 0; i < real_dim(); ++i) q[i] = center[i] + (p[i] - center[i]) * s;
            return q;
        }
        if (kind == DomainKind::polydisc) {
            // Scale the complex coordinate with the largest radial excess.
            int jb = 0;
            double best = -std::numeric_limits<double>::infinity();
            for (int j = 0; j < n; ++j) {
                const double dx = p[2 * j] - center[2 * j], dy = p[2 * j + 1] - center[2 * j + 1];
                const double e = std::sqrt(dx * dx + dy * dy) - radii[static_cast<size_t>(j)];
                if (e > best) best = e, jb = j;
            }
            const double dx = p[2 * jb] - center[2 * jb], dy = p[2 * jb + 1] - center[2 * jb + 1];
            const double d = std::sqrt(dx * dx + dy * dy);
            const double s = (d < 1e-14) ? 0.0 : radii[static_cast<size_t>(jb)] / d;
            q[2 * jb] = center[2 * jb] + dx * s;
            q[2 * jb + 1] = center[2 * jb + 1] + dy * s;
            return q;
        }
        return q;  // custom: identity fallback
    }
};

enum class NodeClass : uint8_t { exterior = 0, boundary_band = 1, interior = 2 };

// Uniform axis-aligned lattice over the bounding cube of Omega, spacing h in
// every real coordinate. Nodes are classified by signed distance:
//   interior       sd <= -h   (distance >= h to the exterior)
//   boundary_band  -h < sd <= 0
//   exterior       sd > 0
struct Grid {
    DomainSpec spec;
    int res = 0;     // nodes per real axis
    double h = 0.0;  // lattice spacing
    Point origin{};  // coordinates of node (0,...,0)
    std::array<int64_t, kMaxRealDim> stride{};
    int64_t total = 0;
    std::vector<NodeClass> node_class;
    std::vector<int64_t> interior_nodes;
    std::vector<int64_t> band_nodes;
    double delta0 = 0.0;  // diameter of the bounding box of classified nodes

    int dim() const { return spec.real_dim(); }

    Point point_of(int64_t idx) const {
        Point p = make_point(dim());
        for (int a = dim() - 1; a >= 0; --a) {
            const int64_t i = idx / stride[static_cast<size_t>(a)];
            idx -= i * stride[static_cast<size_t>(a)];
            p[a] = origin[a] + static_cast<double>(i) * h;
        }
        return p;
    }

    int64_t index_of(const std::array<int, kMaxRealDim>& c) const {
        int64_t idx = 0;
        for (int a = 0; a < dim(); ++a) idx += static_cast<int64_t>(c[static_cast<size_t>(a)]) * stride[static_cast<size_t>(a)];
        return idx;
    }

    std::array<int, kMaxRealDim> coords_of(int64_t idx) const {
        std::array<int, kMaxRealDim> c{};
        for (int a = dim() - 1; a >= 0; --a) {
            c[static_cast<size_t>(a)] = static_cast<int>(idx / stride[static_cast<size_t>(a)]);
            idx -= static_cast<int64_t>(c[static_cast<size_t>(a)]) * stride[static_cast<size_t>(a)];
        }
        return c;
    }

    NodeClass cls(int64_t idx) const { return node_class[static_cast<size_t>(idx)]; }
    bool carries_value(int64_t idx) const { return cls(idx) != NodeClass::exterior; }

    double cell_volume() const {
        double v = 1.0;
        for (int a = 0; a < dim(); ++a) v *= h;
        return v;
    }

    // Nodes of Omega_delta = {dist to boundary > delta}.
    std::vector<int64_t> nodes_deeper_than(double delta) const {
        std::vector<int64_t> out;
        for (int64_t id : interior_nodes)
            if (spec.signed_distance(point_of(id)) < -delta) out.push_back(id);
        return out;
    }
};

// Builds the grid over the bounding cube of the domain. resolution = node
// count per real axis (>= 9; the lattice must contain an interior node).
inline Grid build_grid(const DomainSpec& spec, int resolution) {
    Grid g;
    g.spec = spec;
    g.res = resolution;
    const int d = spec.real_dim();

    // Bounding cube: preset extents, padded cube side for custom domains must
    // be supplied through spec.center/radii[0] as a crude bound.
    double half = 0.0;
    Point c = spec.center;
    c.dim = d;
    if (spec.kind == DomainKind::ball || spec.kind == DomainKind::custom) {
        half = spec.radii[0] > 0 ? spec.radii[0] : 1.0;
    } else {
        for (int j = 0; j < spec.n; ++j) half = std::max(half, spec.radii[static_cast<size_t>(j)]);
    }
    if (resolution < 2) throw LabError("degenerate grid");
    g.h = 2.0 * half / static_cast<double>(resolution - 1);
    g.origin = make_point(d);
    for (int a = 0; a < d; ++a) g.origin[a] = c[a] - half;

    int64_t total = 1;
    for (int a = 0; a < d; ++a) {
        g.stride[static_cast<size_t>(a)] = total;
        total *= resolution;
    }
    g.total = total;
    if (total > (int64_t(1) << 26)) throw LabError("grid too large (resolution^(2n) exceeds cap)");

    g.node_class.assign(static_cast<size_t>(total), NodeClass::exterior);

    Point lo = make_point(d), hi = make_point(d);
    for (int a = 0; a < d; ++a) {
        lo[a] = std::numeric_limits<double>::infinity();
        hi[a] = -std::numeric_limits<double>::infinity();
    }
    for (int64_t idx = 0; idx < total; ++idx) {
        const Point p = g.point_of(idx);
        const double sd = spec.signed_distance(p);
        NodeClass nc = NodeClass::exterior;
        if (sd <= -g.h)
            nc = NodeClass::interior;
        else if (sd <= 0.0)
            nc = NodeClass::boundary_band;
        g.node_class[static_cast<size_t>(idx)] = nc;
        if (nc != NodeClass::exterior) {
            if (nc == NodeClass::interior)
                g.interior_nodes.push_back(idx);
            else
                g.band_nodes.push_back(idx);
            for (int a = 0; a < d; ++a) {
                lo[a] = std::min(lo[a], p[a]);
                hi[a] = std::max(hi[a], p[a]);
            }
        }
    }
    if (resolution < 9 || g.interior_nodes.empty()) throw LabError("degenerate grid");

    double diag = 0.0;
    for (int a = 0; a < d; ++a) diag += (hi[a] - lo[a]) * (hi[a] - lo[a]);
    g.delta0 = std::sqrt(diag);
    return g;
}

// Scalar samples on interior + boundary_band nodes. Exterior nodes hold the
// fill value (quiet NaN by default == undefined marker).
struct GridFunction {
    const Grid* grid = nullptr;
    std::vector<double> values;

    GridFunction() = default;
    explicit GridFunction(const Grid& g, double fill = std::numeric_limits<double>::quiet_NaN())
        : grid(&g), values(static_cast<size_t>(g.total), fill) {}

    double& operator[](int64_t idx) { return values[static_cast<size_t>(idx)]; }
    double operator[](int64_t idx) const { return values[static_cast<size_t>(idx)]; }

    static GridFunction sample(const Grid& g, const std::function<double(const Point&)>& f) {
        GridFunction u(g);
        for (int64_t id : g.interior_nodes) u[id] = f(g.point_of(id));
        for (int64_t id : g.band_nodes) u[id] = f(g.point_of(id));
        return u;
    }

    static GridFunction constant(const Grid& g, double c) {
        return sample(g, [c](const Point&) { return c; });
    }

    void check_finite() const {
        for (int64_t id : grid->interior_nodes)
            if (!std::isfinite(values[static_cast<size_t>(id)])) throw LabError("non-finite value on interior node");
        for (int64_t id : grid->band_nodes)
            if (!std::isfinite(values[static_cast<size_t>(id)])) throw LabError("non-finite value on boundary_band node");
    }

    double max_abs_diff(const GridFunction& o, bool include_band = true) const {
        double e = 0.0;
        for (int64_t id : grid->interior_nodes) e = std::max(e, std::abs((*this)[id] - o[id]));
        if (include_band)
            for (int64_t id : grid->band_nodes) e = std::max(e, std::abs((*this)[id] - o[id]));
        return e;
    }
};

// Custom rho sampled from CSV with header x1,y1,...,xn,yn,rho. Values are
// multilinearly interpolated between samples; samples must cover the grid box.
struct SampledRho {
    int dim = 0;
    Point lo{}, hi{};
    std::array<int, kMaxRealDim> counts{};
    std::vector<double> values;

    double operator()(const Point& p) const {
        // Multilinear interpolation with clamping at the sample box.
        std::array<double, kMaxRealDim> t{};
        std::array<int, kMaxRealDim> i0{};
        for (int a = 0; a < dim; ++a) {
            const int na = counts[static_cast<size_t>(a)];
            const double step = (hi[a] - lo[a]) / static_cast<double>(na - 1);
            double s = (p[a] - lo[a]) / step;
            s = std::clamp(s, 0.0, static_cast<double>(na - 1));
            i0[static_cast<size_t>(a)] = std::min(static_cast<int>(s), na - 2);
            t[static_cast<size_t>(a)] = s - static_cast<double>(i0[static_cast<size_t>(a)]);
        }
        double acc = 0.0;
        const int corners = 1 << dim;
        for (int c = 0; c < corners; ++c) {
            double w = 1.0;
            int64_t idx = 0;
            int64_t stride = 1;
            for (int a = 0; a < dim; ++a) {
                const int bit = (c >> a) & 1;
                w *= bit ? t[static_cast<size_t>(a)] : 1.0 - t[static_cast<size_t>(a)];
                idx += stride * (i0[static_cast<size_t>(a)] + bit);
                stride *= counts[static_cast<size_t>(a)];
            }
            acc += w * values[static_cast<size_t>(idx)];
        }
        return acc;
    }
};

// Loads `x1,y1,...,xn,yn,rho` rows; samples must form a full tensor grid in
// row-major order (first coordinate fastest).
inline SampledRho load_rho_csv(const std::string& path, int n) {
    std::ifstream in(path);
    if (!in) throw LabError("cannot open rho CSV: " + path);
    std::string line;
    if (!std::getline(in, line)) throw LabError("empty rho CSV");
    const int d = 2 * n;
    std::vector<std::array<double, kMaxRealDim + 1>> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::array<double, kMaxRealDim + 1> row{};
        std::stringstream ss(line);
        std::string tok;
        int col = 0;
        while (std::getline(ss, tok, ',') && col <= d) row[static_cast<size_t>(col++)] = std::stod(tok);
        if (col != d + 1) throw LabError("bad rho CSV row");
        rows.push_back(row);
    }
    if (rows.size() < 4) throw LabError("rho CSV too small");
    SampledRho s;
    s.dim = d;
    s.lo = make_point(d);
    s.hi = make_point(d);
    for (int a = 0; a < d; ++a) {
        double lo = rows.front()[static_cast<size_t>(a)], hi = lo;
        std::vector<double> uniq;
        for (auto& r : rows) {
            lo = std::min(lo, r[static_cast<size_t>(a)]);
            hi = std::max(hi, r[static_cast<size_t>(a)]);
        }
        s.lo[a] = lo;
        s.hi[a] = hi;
    }
    // Infer per-axis counts from the first axis period.
    int64_t expect = 1;
    for (int a = 0; a < d; ++a) {
        int cnt = 0;
        const double first = rows.front()[static_cast<size_t>(a)];
        // count entries until the coordinate repeats its first value after moving
        int64_t period = 1;
        for (int64_t i = 1; i < static_cast<int64_t>(rows.size()); ++i) {
            if (std::abs(rows[static_cast<size_t>(i)][static_cast<size_t>(a)] - first) < 1e-12 &&
                std::abs(rows[static_cast<size_t>(i - 1)][static_cast<size_t>(a)] - first) > 1e-12) {
                period = i;
                break;
            }
        }
        (void)period;
        (void)first;
        // fall back: counts = round((hi-lo)/step)+1 using sorted unique values
        std::vector<double> vals;
        for (auto& r : rows) vals.push_back(r[static_cast<size_t>(a)]);
        std::sort(vals.begin(), vals.end());
        vals.erase(std::unique(vals.begin(), vals.end(),
                               [](double x, double y) { return std::abs(x - y) < 1e-12; }),
                   vals.end());
        cnt = static_cast<int>(vals.size());
        if (cnt < 2) throw LabError("rho CSV axis with fewer than 2 samples");
        s.counts[static_cast<size_t>(a)] = cnt;
        expect *= cnt;
    }
    if (expect != static_cast<int64_t>(rows.size())) throw LabError("rho CSV is not a full tensor grid");
    s.values.resize(rows.size());
    for (size_t i = 0; i < rows.size(); ++i) s.values[i] = rows[i][static_cast<size_t>(d)];
    return s;
}

}  // namespace hesslab

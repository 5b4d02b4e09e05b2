#pragma once

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "hesslab/hessian.hpp"
#include "hesslab/maps.hpp"

namespace hesslab {

using json = nlohmann::json;

inline std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

// FNV-1a 64-bit digest of the resolved configuration text.
inline std::string digest64(const std::string& text) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

inline void write_text(const std::string& path, const std::string& text) {
    std::filesystem::path p(path);
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw LabError("cannot write " + path);
    out << text;
}

// CSV schema: x1,y1,...,xn,yn,value over interior + band nodes.
inline void write_grid_function_csv(const GridFunction& u, const std::string& path) {
    const Grid& g = *u.grid;
    std::string text;
    for (int j = 0; j < g.spec.n; ++j) {
        text += "x" + std::to_string(j + 1) + ",y" + std::to_string(j + 1) + ",";
    }
    text += "value\n";
    auto emit = [&](int64_t id) {
        const Point p = g.point_of(id);
        for (int a = 0; a < g.dim(); ++a) text += format_double(p[a]) + ",";
        text += format_double(u[id]) + "\n";
    };
    for (int64_t id : g.interior_nodes) emit(id);
    for (int64_t id : g.band_nodes) emit(id);
    write_text(path, text);
}

inline json density_summary(const HessianDensity& d, double violation_tol = 1e-8) {
    const Grid& g = *d.grid;
    double mn = std::numeric_limits<double>::infinity(), mx = -mn;
    int64_t violations = 0;
    for (int64_t id : g.interior_nodes) {
        const double v = d.ac_at(id);
        mn = std::min(mn, v);
        mx = std::max(mx, v);
        if (v < -violation_tol) ++violations;
    }
    return json{{"mass", d.total_mass()}, {"min", mn}, {"max", mx}, {"violations", violations},
                {"warning", d.warning}};
}

inline void write_density_csv(const HessianDensity& d, const std::string& path) {
    GridFunction f(*d.grid, 0.0);
    for (int64_t id : d.grid->interior_nodes) f[id] = d.ac_at(id);
    for (int64_t id : d.grid->band_nodes) f[id] = d.ac_at(id);
    write_grid_function_csv(f, path);
}

// CSV schema: t,kappa
inline void write_modulus_csv(const ModulusOfContinuity& k, const std::string& path,
                              const std::vector<double>& ts = {}) {
    std::string text = "t,kappa\n";
    if (k.form == KappaForm::tabulated && ts.empty()) {
        for (size_t i = 0; i < k.ts.size(); ++i)
            text += format_double(k.ts[i]) + "," + format_double(k.ks[i]) + "\n";
    } else {
        std::vector<double> grid = ts;
        if (grid.empty())
            for (int i = 0; i <= 64; ++i) grid.push_back(k.L * (i + 1) / 65.0);
        for (double t : grid) text += format_double(t) + "," + format_double(k(t)) + "\n";
    }
    write_text(path, text);
}

// CSV schema: x,y with the lattice carried verbatim for reproducibility.
inline void write_map_csv(const MonotoneMap& m, const std::string& path) {
    std::string text = "x,y\n";
    for (size_t i = 0; i < m.xs.size(); ++i)
        text += format_double(m.xs[i]) + "," + format_double(m.ys[i]) + "\n";
    write_text(path, text);
}

// CapacityReport: JSON metrics plus the extremal potential as CSV.
template <typename CapacityReportT>
void write_capacity_report(const CapacityReportT& rep, const std::string& dir) {
    json j{{"capacity", rep.capacity},
           {"iterations", rep.iterations},
           {"residual", rep.residual},
           {"method", rep.method}};
    write_text(dir + "/capacity.json", j.dump(2) + "\n");
    write_grid_function_csv(rep.extremal, dir + "/extremal.csv");
}

// Generic table writer: header row plus columns of equal length.
inline void write_table_csv(const std::string& path, const std::vector<std::string>& header,
                            const std::vector<std::vector<double>>& columns) {
    std::string text;
    for (size_t i = 0; i < header.size(); ++i) text += header[i] + (i + 1 < header.size() ? "," : "");
    text += "\n";
    const size_t rows = columns.empty() ? 0 : columns.front().size();
    for (size_t r = 0; r < rows; ++r) {
        for (size_t c = 0; c < columns.size(); ++c)
            text += format_double(columns[c][r]) + (c + 1 < columns.size() ? "," : "");
        text += "\n";
    }
    write_text(path, text);
}

}  // namespace hesslab

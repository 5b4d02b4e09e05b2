#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace hesslab {

// Hard cap: complex dimension n <= 3, i.e. 2n <= 6 real coordinates.
// Memory scales as resolution^(2n).
inline constexpr int kMaxComplexDim = 3;
inline constexpr int kMaxRealDim = 2 * kMaxComplexDim;

struct LabError : std::runtime_error {
    explicit LabError(const std::string& what) : std::runtime_error(what) {}
};

// Point in R^(2n) ~ C^n. Real coordinates ordered (x1, y1, ..., xn, yn).
struct Point {
    std::array<double, kMaxRealDim> x{};
    int dim = 0;

    double& operator[](int i) { return x[static_cast<size_t>(i)]; }
    double operator[](int i) const { return x[static_cast<size_t>(i)]; }
};

inline Point make_point(int dim) {
    Point p;
    p.dim = dim;
    return p;
}

inline double dist2(const Point& a, const Point& b) {
    double s = 0.0;
    for (int i = 0; i < a.dim; ++i) {
        const double d = a.x[static_cast<size_t>(i)] - b.x[static_cast<size_t>(i)];
        s += d * d;
    }
    return s;
}

inline double norm2(const Point& a) {
    double s = 0.0;
    for (int i = 0; i < a.dim; ++i) s += a.x[static_cast<size_t>(i)] * a.x[static_cast<size_t>(i)];
    return s;
}

// |z_j|^2 for the j-th complex coordinate (0-based).
inline double abs2_complex(const Point& p, int j) {
    const double re = p[2 * j], im = p[2 * j + 1];
    return re * re + im * im;
}

inline int binomial(int n, int k) {
    if (k < 0 || k > n) return 0;
    k = std::min(k, n - k);
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return static_cast<int>(r);
}

// Deterministic pairwise tree sum; reduction order independent of chunking so
// results are bit-reproducible run to run.
inline double pairwise_sum(const double* v, size_t n) {
    if (n == 0) return 0.0;
    if (n <= 16) {
        double s = 0.0;
        for (size_t i = 0; i < n; ++i) s += v[i];
        return s;
    }
    const size_t half = n / 2;
    return pairwise_sum(v, half) + pairwise_sum(v + half, n - half);
}

inline double pairwise_sum(const std::vector<double>& v) { return pairwise_sum(v.data(), v.size()); }

using cplx = std::complex<double>;

// Dense n x n complex Hermitian matrix, n <= 3. Row-major.
struct Herm {
    std::array<cplx, kMaxComplexDim * kMaxComplexDim> a{};
    int n = 0;

    cplx& at(int i, int j) { return a[static_cast<size_t>(i * n + j)]; }
    cplx at(int i, int j) const { return a[static_cast<size_t>(i * n + j)]; }

    static Herm zero(int n) {
        Herm h;
        h.n = n;
        return h;
    }
    static Herm identity(int n) {
        Herm h = zero(n);
        for (int i = 0; i < n; ++i) h.at(i, i) = 1.0;
        return h;
    }
    static Herm diag(std::initializer_list<double> d) {
        Herm h = zero(static_cast<int>(d.size()));
        int i = 0;
        for (double v : d) h.at(i, i) = v, ++i;
        return h;
    }

    void symmetrize() {
        for (int i = 0; i < n; ++i) {
            at(i, i) = cplx(at(i, i).real(), 0.0);
            for (int j = i + 1; j < n; ++j) {
                const cplx m = 0.5 * (at(i, j) + std::conj(at(j, i)));
                at(i, j) = m;
                at(j, i) = std::conj(m);
            }
        }
    }

    Herm& operator+=(const Herm& o) {
        for (int i = 0; i < n * n; ++i) a[static_cast<size_t>(i)] += o.a[static_cast<size_t>(i)];
        return *this;
    }
    Herm& operator*=(double c) {
        for (int i = 0; i < n * n; ++i) a[static_cast<size_t>(i)] *= c;
        return *this;
    }
    friend Herm operator+(Herm l, const Herm& r) { return l += r; }
    friend Herm operator*(double c, Herm h) { return h *= c; }
};

// sigma_k(H) = k-th elementary symmetric function of the eigenvalues
// = sum of k x k principal minors. Direct trace/minor formulas for n <= 3;
// exact and eigenvalue-free.
inline double sigma_of_matrix(const Herm& h, int k) {
    const int n = h.n;
    if (k == 0) return 1.0;
    if (k < 0 || k > n) return 0.0;
    if (k == 1) {
        double t = 0.0;
        for (int i = 0; i < n; ++i) t += h.at(i, i).real();
        return t;
    }
    if (k == 2) {
        double s = 0.0;
        for (int i = 0; i < n; ++i)
            for (int j = i + 1; j < n; ++j)
                s += h.at(i, i).real() * h.at(j, j).real() - std::norm(h.at(i, j));
        return s;
    }
    // k == 3, n == 3: determinant of a Hermitian 3x3 (real by symmetry).
    const cplx d = h.at(0, 0) * (h.at(1, 1) * h.at(2, 2) - h.at(1, 2) * h.at(2, 1)) -
                   h.at(0, 1) * (h.at(1, 0) * h.at(2, 2) - h.at(1, 2) * h.at(2, 0)) +
                   h.at(0, 2) * (h.at(1, 0) * h.at(2, 1) - h.at(1, 1) * h.at(2, 0));
    return d.real();
}

// Eigenvalues of a Hermitian matrix, ascending. Cyclic Jacobi; machine
// precision for n <= 3.
inline std::array<double, kMaxComplexDim> hermitian_eigenvalues(Herm h) {
    std::array<double, kMaxComplexDim> ev{};
    const int n = h.n;
    if (n == 1) {
        ev[0] = h.at(0, 0).real();
        return ev;
    }
    for (int sweep = 0; sweep < 60; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += std::norm(h.at(p, q));
        if (off < 1e-30) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const cplx apq = h.at(p, q);
                if (std::norm(apq) < 1e-60) continue;
                const double app = h.at(p, p).real(), aqq = h.at(q, q).real();
                // Unitary 2x2 rotation annihilating (p,q).
                const double absa = std::abs(apq);
                const cplx phase = apq / absa;
                const double theta = 0.5 * std::atan2(2.0 * absa, app - aqq);
                const double c = std::cos(theta), s = std::sin(theta);
                for (int r = 0; r < n; ++r) {
                    const cplx hrp = h.at(r, p), hrq = h.at(r, q);
                    h.at(r, p) = c * hrp + s * std::conj(phase) * hrq;
                    h.at(r, q) = -s * phase * hrp + c * hrq;
                }
                for (int r = 0; r < n; ++r) {
                    const cplx hpr = h.at(p, r), hqr = h.at(q, r);
                    h.at(p, r) = c * hpr + s * phase * hqr;
                    h.at(q, r) = -s * std::conj(phase) * hpr + c * hqr;
                }
            }
        }
    }
    for (int i = 0; i < n; ++i) ev[static_cast<size_t>(i)] = h.at(i, i).real();
    std::sort(ev.begin(), ev.begin() + n);
    return ev;
}

// Elementary symmetric functions of (lam_1..lam_n) by the incremental
// recursion e_k <- e_k + lam * e_{k-1}.
inline std::array<double, kMaxComplexDim + 1> elementary_symmetric(const double* lam, int n) {
    std::array<double, kMaxComplexDim + 1> e{};
    e[0] = 1.0;
    for (int j = 0; j < n; ++j)
        for (int k = std::min(j + 1, kMaxComplexDim); k >= 1; --k)
            e[static_cast<size_t>(k)] += lam[j] * e[static_cast<size_t>(k - 1)];
    return e;
}

// Garding cone test: H is m-positive iff sigma_k(H) >= -tol for k = 1..m.
inline bool in_m_cone(const Herm& h, int m, double tol = 0.0) {
    for (int k = 1; k <= m; ++k)
        if (sigma_of_matrix(h, k) < -tol) return false;
    return true;
}

// Least-squares slope of log(y) against log(x); returns {slope, r2}.
struct LogLogFit {
    double slope = 0.0;
    double intercept = 0.0;
    double r2 = 0.0;
};

inline LogLogFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
    std::vector<double> lx, ly;
    for (size_t i = 0; i < x.size(); ++i) {
        if (x[i] > 0.0 && y[i] > 0.0) {
            lx.push_back(std::log(x[i]));
            ly.push_back(std::log(y[i]));
        }
    }
    LogLogFit f;
    const size_t n = lx.size();
    if (n < 2) return f;
    double mx = 0, my = 0;
    for (size_t i = 0; i < n; ++i) mx += lx[i], my += ly[i];
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    double sxx = 0, sxy = 0, syy = 0;
    for (size_t i = 0; i < n; ++i) {
        sxx += (lx[i] - mx) * (lx[i] - mx);
        sxy += (lx[i] - mx) * (ly[i] - my);
        syy += (ly[i] - my) * (ly[i] - my);
    }
    if (sxx == 0.0) return f;
    f.slope = sxy / sxx;
    f.intercept = my - f.slope * mx;
    f.r2 = (syy == 0.0) ? 1.0 : (sxy * sxy) / (sxx * syy);
    return f;
}

}  // namespace hesslab

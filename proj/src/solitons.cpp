#include "imcf/solitons.hpp"

#include <cmath>
#include <stdexcept>
#include <vector>

namespace imcf::solitons {

SolitonParams SolitonParams::from_rate(double c) {
    if (!(c < 1.0) || c == 0.0)
        throw std::invalid_argument("homothetic soliton needs c < 1, c != 0");
    SolitonParams p;
    p.c = c;
    p.root = std::sqrt(1.0 - c);
    p.mu = 1.0 - p.root;
    p.k = (1.0 + p.root) / (1.0 - p.root);
    p.theta_max = M_PI / p.root;
    return p;
}

Vec2 cycloid(double th) {
    return {0.25 * (1.0 - std::cos(2.0 * th)), 0.25 * (2.0 * th - std::sin(2.0 * th))};
}

Vec2 cycloid_tangent(double th) { return {std::cos(th), std::sin(th)}; }
Vec2 cycloid_normal(double th) { return {std::sin(th), -std::cos(th)}; }
double cycloid_curvature(double th) { return 1.0 / std::sin(th); }

double cycloid_support(double th) {
    Vec2 g = cycloid(th), nu = cycloid_normal(th);
    return g.dot(nu);
}

double cycloid_support_d1(double th) {
    // dh/dth = <gamma, tau> since dnu/dth = tau and gamma' is parallel to tau
    Vec2 g = cycloid(th), tau = cycloid_tangent(th);
    return g.dot(tau);
}

std::optional<double> cycloid_arrival(double x, double y) {
    if (!(y > 0.0) || !(y < kCycloidStripHeight)) return std::nullopt;
    // invert y = (2 th - sin 2 th)/4, monotone on [0, pi]
    double lo = 0.0, hi = M_PI;
    for (int it = 0; it < 100; ++it) {
        double mid = 0.5 * (lo + hi);
        double ym = 0.25 * (2.0 * mid - std::sin(2.0 * mid));
        if (ym < y) lo = mid; else hi = mid;
    }
    double th = 0.5 * (lo + hi);
    return x - 0.25 * (1.0 - std::cos(2.0 * th));
}

Vec2 homothetic_curve(double c, double th) {
    auto p = SolitonParams::from_rate(c);
    double a1 = p.mu * th, a2 = p.k * p.mu * th;
    return {0.5 * p.mu * (p.k * std::cos(a1) - std::cos(a2)),
            0.5 * p.mu * (p.k * std::sin(a1) - std::sin(a2))};
}

Vec2 homothetic_curve_support_form(double c, double th) {
    auto p = SolitonParams::from_rate(c);
    double h = p.support(th), hp = p.support_d1(th);
    Vec2 nu{std::sin(th), -std::cos(th)}, tau{std::cos(th), std::sin(th)};
    return h * nu + hp * tau;
}

Vec2 homothetic_tangent(double, double th) { return {std::cos(th), std::sin(th)}; }
Vec2 homothetic_normal(double, double th) { return {std::sin(th), -std::cos(th)}; }

double homothetic_curvature(double c, double th) {
    auto p = SolitonParams::from_rate(c);
    return 1.0 / (c * p.support(th));
}

namespace {

// Unwrapped polar angle of gamma along th; strictly monotone since
// gamma x gamma' = c h^2.
struct PolarTable {
    std::vector<double> th, ang, rad;
};

PolarTable build_polar_table(double c) {
    auto p = SolitonParams::from_rate(c);
    const int N = 8192;
    PolarTable t;
    t.th.reserve(N + 1);
    t.ang.reserve(N + 1);
    t.rad.reserve(N + 1);
    double prev_raw = 0.0, acc = 0.0;
    for (int k = 0; k <= N; ++k) {
        double th = p.theta_max * (k + 0.5) / (N + 1.0);  // keep off the singular endpoints
        Vec2 g = homothetic_curve(c, th);
        double raw = std::atan2(g.y, g.x);
        if (k == 0) acc = raw;
        else {
            double d = raw - prev_raw;
            while (d > M_PI) d -= 2.0 * M_PI;
            while (d < -M_PI) d += 2.0 * M_PI;
            acc += d;
        }
        prev_raw = raw;
        t.th.push_back(th);
        t.ang.push_back(acc);
        t.rad.push_back(g.norm());
    }
    return t;
}

}  // namespace

std::optional<double> homothetic_arrival(double c, Vec2 x) {
    auto p = SolitonParams::from_rate(c);
    double r = x.norm();
    if (r <= 0.0) return std::nullopt;
    static thread_local double cached_c = 2.0;
    static thread_local PolarTable table;
    if (cached_c != c) { table = build_polar_table(c); cached_c = c; }

    double ang_lo = std::min(table.ang.front(), table.ang.back());
    double ang_hi = std::max(table.ang.front(), table.ang.back());
    double raw = std::atan2(x.y, x.x);
    // choose the representative of raw mod 2pi lying in the swept range
    double phi = raw;
    while (phi < ang_lo - 1e-12) phi += 2.0 * M_PI;
    while (phi > ang_hi + 1e-12) phi -= 2.0 * M_PI;
    if (!(phi > ang_lo && phi < ang_hi)) return std::nullopt;

    // binary search the monotone angle table, then interpolate the radius
    const auto& A = table.ang;
    bool inc = A.back() > A.front();
    size_t lo = 0, hi = A.size() - 1;
    while (hi - lo > 1) {
        size_t mid = (lo + hi) / 2;
        bool left = inc ? (A[mid] < phi) : (A[mid] > phi);
        if (left) lo = mid; else hi = mid;
    }
    double w = (phi - A[lo]) / (A[hi] - A[lo]);
    double th_guess = table.th[lo] + w * (table.th[hi] - table.th[lo]);

    // polish with bisection on the local bracket
    double tlo = table.th[lo], thi = table.th[hi];
    for (int it = 0; it < 80; ++it) {
        double mid = 0.5 * (tlo + thi);
        Vec2 g = homothetic_curve(c, mid);
        double am = std::atan2(g.y, g.x);
        // compare within the bracket: shift to the nearest representative of phi
        double target = phi;
        while (target - am > M_PI) target -= 2.0 * M_PI;
        while (target - am < -M_PI) target += 2.0 * M_PI;
        bool left = inc ? (am < target) : (am > target);
        if (left) tlo = mid; else thi = mid;
    }
    double th = 0.5 * (tlo + thi);
    (void)th_guess;
    double rc = homothetic_curve(c, th).norm();
    if (rc <= 0.0) return std::nullopt;
    return std::log(r / rc) / c;
}

std::function<double(double)> radial_reference(std::function<double(double)> f, double r0, int n,
                                               std::optional<double> t_cap) {
    double f0 = f(r0);
    if (!(f0 > 0.0)) throw std::invalid_argument("radial_reference: f(r0) must be positive");
    return [f = std::move(f), f0, n, t_cap](double r) {
        double u = (n - 1) * std::log(f(r) / f0);
        if (t_cap) u = std::min(u, *t_cap);
        return u;
    };
}

ReferenceArrivalTime cycloid_reference(double x0, double x1) {
    ReferenceArrivalTime ref;
    ref.kind = "cycloid";
    ref.supporting_domain = geometry::make_strip(0.0, kCycloidStripHeight, x0, x1, "strip");
    ref.eval = [](Vec2 x) { return cycloid_arrival(x.x, x.y); };
    return ref;
}

ReferenceArrivalTime homothetic_reference(double c, double extent) {
    ReferenceArrivalTime ref;
    ref.kind = c > 0.0 ? "epicycloid" : "hypocycloid";
    auto p = SolitonParams::from_rate(c);
    double angle = p.cone_angle();

    geometry::DomainSpec cone;
    cone.name = "cone";
    double phi_lo = c > 0.0 ? 0.0 : -angle;
    double phi_hi = c > 0.0 ? angle : 0.0;
    // intersection of two half planes through the origin (exact for angle <= pi)
    Vec2 n_lo{std::sin(phi_lo), -std::cos(phi_lo)};
    Vec2 n_hi{-std::sin(phi_hi), std::cos(phi_hi)};
    cone.signed_distance = [n_lo, n_hi](Vec2 x) { return std::max(x.dot(n_lo), x.dot(n_hi)); };
    cone.normal = [n_lo, n_hi](Vec2 x) { return x.dot(n_lo) > x.dot(n_hi) ? n_lo : n_hi; };
    cone.regular_radius = 0.1 * extent;
    cone.boundary_point = [phi_lo, phi_hi, extent](double s) {
        if (s < 0.5)
            return Vec2{2.0 * s * extent * std::cos(phi_lo), 2.0 * s * extent * std::sin(phi_lo)};
        return Vec2{(2.0 * s - 1.0) * extent * std::cos(phi_hi),
                    (2.0 * s - 1.0) * extent * std::sin(phi_hi)};
    };
    cone.bbox_min = {-extent, -extent};
    cone.bbox_max = {extent, extent};
    ref.supporting_domain = cone;
    ref.eval = [c](Vec2 x) { return homothetic_arrival(c, x); };
    return ref;
}

ReferenceArrivalTime radial_field_reference(std::function<double(double)> f, double r0, int n,
                                            double extent) {
    ReferenceArrivalTime ref;
    ref.kind = "radial";
    ref.supporting_domain = geometry::make_disk({0.0, 0.0}, extent, "disk");
    auto u = radial_reference(std::move(f), r0, n);
    ref.eval = [u = std::move(u)](Vec2 x) -> std::optional<double> {
        double r = x.norm();
        if (r < 1e-12) return std::nullopt;
        return u(r);
    };
    return ref;
}

geometry::ScalarField rasterize(const ReferenceArrivalTime& ref, const geometry::Grid& g) {
    return geometry::sample_field(g, ref.eval);
}

}  // namespace imcf::solitons

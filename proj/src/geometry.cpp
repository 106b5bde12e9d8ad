#include "imcf/geometry.hpp"

#include <algorithm>
#include <array>
#include <cassert>
#include <map>
#include <sstream>
#include <stdexcept>

namespace imcf::geometry {

DomainSpec make_disk(Vec2 c, double R, std::string name) {
    DomainSpec d;
    d.name = std::move(name);
    d.signed_distance = [c, R](Vec2 x) { return (x - c).norm() - R; };
    d.normal = [c](Vec2 x) {
        Vec2 v = x - c;
        double n = v.norm();
        if (n == 0.0) return Vec2{1.0, 0.0};
        return v * (1.0 / n);
    };
    d.regular_radius = R;
    d.boundary_point = [c, R](double s) {
        double a = 2.0 * M_PI * s;
        return Vec2{c.x + R * std::cos(a), c.y + R * std::sin(a)};
    };
    d.bbox_min = {c.x - R, c.y - R};
    d.bbox_max = {c.x + R, c.y + R};
    return d;
}

DomainSpec make_annulus(Vec2 c, double r_in, double r_out, std::string name) {
    DomainSpec d;
    d.name = std::move(name);
    d.signed_distance = [c, r_in, r_out](Vec2 x) {
        double r = (x - c).norm();
        return std::max(r_in - r, r - r_out);
    };
    d.normal = [c, r_in, r_out](Vec2 x) {
        Vec2 v = x - c;
        double r = v.norm();
        if (r == 0.0) return Vec2{1.0, 0.0};
        Vec2 rad = v * (1.0 / r);
        // outward normal of the annulus: radial near the outer circle,
        // anti-radial near the inner one
        return (r_in - r > r - r_out) ? rad * -1.0 : rad;
    };
    d.regular_radius = 0.5 * (r_out - r_in);
    d.boundary_point = [c, r_in, r_out](double s) {
        if (s < 0.5) {
            double a = 4.0 * M_PI * s;
            return Vec2{c.x + r_out * std::cos(a), c.y + r_out * std::sin(a)};
        }
        double a = 4.0 * M_PI * (s - 0.5);
        return Vec2{c.x + r_in * std::cos(a), c.y + r_in * std::sin(a)};
    };
    d.bbox_min = {c.x - r_out, c.y - r_out};
    d.bbox_max = {c.x + r_out, c.y + r_out};
    return d;
}

DomainSpec make_strip(double y0, double y1, double x0, double x1, std::string name) {
    DomainSpec d;
    d.name = std::move(name);
    d.signed_distance = [y0, y1](Vec2 x) { return std::max(y0 - x.y, x.y - y1); };
    d.normal = [y0, y1](Vec2 x) {
        return (x.y - y0 < y1 - x.y) ? Vec2{0.0, -1.0} : Vec2{0.0, 1.0};
    };
    d.regular_radius = 0.5 * (y1 - y0);
    d.boundary_point = [y0, y1, x0, x1](double s) {
        if (s < 0.5) return Vec2{x0 + (x1 - x0) * (2.0 * s), y0};
        return Vec2{x0 + (x1 - x0) * (2.0 * s - 1.0), y1};
    };
    d.bbox_min = {x0, y0};
    d.bbox_max = {x1, y1};
    return d;
}

DomainSpec make_halfplane_upper(double x0, double x1, double y1, std::string name) {
    DomainSpec d;
    d.name = std::move(name);
    d.signed_distance = [](Vec2 x) { return -x.y; };
    d.normal = [](Vec2) { return Vec2{0.0, -1.0}; };
    d.regular_radius = y1;
    d.boundary_point = [x0, x1](double s) { return Vec2{x0 + (x1 - x0) * s, 0.0}; };
    d.bbox_min = {x0, 0.0};
    d.bbox_max = {x1, y1};
    return d;
}

namespace {

Vec2 superellipse_point(double a, double b, double p, double th) {
    double c = std::cos(th), s = std::sin(th);
    double e = 2.0 / p;
    auto pw = [e](double v) { return (v == 0.0) ? 0.0 : std::copysign(std::pow(std::abs(v), e), v); };
    return {a * pw(c), b * pw(s)};
}

// Closest boundary point by coarse scan + ternary refinement; deterministic.
double superellipse_closest(double a, double b, double p, Vec2 x) {
    const int N = 720;
    double best_th = 0.0, best_d = 1e300;
    for (int k = 0; k < N; ++k) {
        double th = 2.0 * M_PI * k / N;
        double dd = (superellipse_point(a, b, p, th) - x).norm();
        if (dd < best_d) { best_d = dd; best_th = th; }
    }
    double lo = best_th - 2.0 * M_PI / N, hi = best_th + 2.0 * M_PI / N;
    for (int it = 0; it < 200; ++it) {
        double m1 = lo + (hi - lo) / 3.0, m2 = hi - (hi - lo) / 3.0;
        double d1 = (superellipse_point(a, b, p, m1) - x).norm();
        double d2 = (superellipse_point(a, b, p, m2) - x).norm();
        if (d1 < d2) hi = m2; else lo = m1;
    }
    return (superellipse_point(a, b, p, 0.5 * (lo + hi)) - x).norm();
}

}  // namespace

DomainSpec make_superellipse(double a, double b, double p, std::string name) {
    DomainSpec d;
    d.name = std::move(name);
    auto level = [a, b, p](Vec2 x) {
        return std::pow(std::abs(x.x / a), p) + std::pow(std::abs(x.y / b), p) - 1.0;
    };
    d.signed_distance = [a, b, p, level](Vec2 x) {
        double dist = superellipse_closest(a, b, p, x);
        return level(x) < 0.0 ? -dist : dist;
    };
    d.normal = [a, b, p](Vec2 x) {
        auto gc = [p](double v, double scale) {
            double t = std::abs(v / scale);
            return (p / scale) * std::copysign(std::pow(t, p - 1.0), v);
        };
        Vec2 g{gc(x.x, a), gc(x.y, b)};
        double n = g.norm();
        if (n == 0.0) return Vec2{1.0, 0.0};
        return g * (1.0 / n);
    };
    // smallest radius of curvature along the boundary, sampled
    double min_roc = 1e300;
    const int M = 2000;
    for (int k = 0; k < M; ++k) {
        double th = 2.0 * M_PI * k / M, dt = 1e-5;
        Vec2 c0 = superellipse_point(a, b, p, th - dt);
        Vec2 c1 = superellipse_point(a, b, p, th);
        Vec2 c2 = superellipse_point(a, b, p, th + dt);
        Vec2 d1{(c2.x - c0.x) / (2 * dt), (c2.y - c0.y) / (2 * dt)};
        Vec2 d2{(c2.x - 2 * c1.x + c0.x) / (dt * dt), (c2.y - 2 * c1.y + c0.y) / (dt * dt)};
        double sp = d1.norm();
        if (sp < 1e-12) continue;
        double kappa = std::abs(d1.x * d2.y - d1.y * d2.x) / (sp * sp * sp);
        if (kappa > 1e-12) min_roc = std::min(min_roc, 1.0 / kappa);
    }
    d.regular_radius = 0.9 * std::min(min_roc, std::min(a, b));
    d.boundary_point = [a, b, p](double s) { return superellipse_point(a, b, p, 2.0 * M_PI * s); };
    d.bbox_min = {-a, -b};
    d.bbox_max = {a, b};
    return d;
}

Grid build_grid(const DomainSpec& domain, const DomainSpec& initial, double h,
                double outer_cutoff, double outer_margin, const GridBuildOptions& opts) {
    if (h <= 0.0) throw GridError("build_grid: h must be positive");

    Grid g;
    g.h = h;
    double pad = outer_margin;
    g.origin = {domain.bbox_min.x - pad, domain.bbox_min.y - pad};
    g.nx = static_cast<int>(std::ceil((domain.bbox_max.x + pad - g.origin.x) / h)) + 1;
    g.ny = static_cast<int>(std::ceil((domain.bbox_max.y + pad - g.origin.y) / h)) + 1;
    int n = g.nx * g.ny;
    g.node_class.assign(n, NodeClass::OUTSIDE);
    g.r_domain.resize(n);
    g.r_initial.resize(n);

    double worst_re0 = -1e300, worst_rd = -1e300;
    bool containment_violated = false;
    double min_sep = 1e300;

    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            Vec2 x = g.point(i, j);
            double re0 = initial.signed_distance(x);
            double rd = domain.signed_distance(x);
            g.r_initial[k] = re0;
            g.r_domain[k] = rd;
            if (re0 < 0.0 && rd > 0.0) {
                containment_violated = true;
                worst_re0 = std::max(worst_re0, -re0);
                worst_rd = std::max(worst_rd, rd);
            }
            if (std::abs(re0) <= h) min_sep = std::min(min_sep, std::abs(rd));
        }
    }
    if (containment_violated) {
        std::ostringstream os;
        os << "build_grid: E0 is not strictly contained in the domain (depth inside E0 "
           << worst_re0 << ", outside domain " << worst_rd << ")";
        throw GridError(os.str());
    }
    if (!opts.allow_tangential_contact && min_sep <= 3.0 * h) {
        std::ostringstream os;
        os << "build_grid: d(boundary of E0, boundary of domain) = " << min_sep
           << " <= 3h = " << 3.0 * h;
        throw GridError(os.str());
    }

    // first pass: E0 nodes and interior band
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            if (g.r_initial[k] <= 0.0) {
                g.node_class[k] = NodeClass::DIRICHLET_E0;
            } else if (g.r_domain[k] < outer_cutoff) {
                bool complete = i > 0 && i + 1 < g.nx && j > 0 && j + 1 < g.ny;
                if (complete)
                    g.node_class[k] = NodeClass::INTERIOR_PDE;
                else
                    g.node_class[k] = opts.tag_incomplete_as_outer ? NodeClass::DIRICHLET_OUTER
                                                                   : NodeClass::OUTSIDE;
            }
        }
    }
    // second pass: the Dirichlet ring beyond the cutoff, where some stencil
    // reaches it
    int ring = 0;
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            int k = g.idx(i, j);
            if (g.node_class[k] != NodeClass::OUTSIDE || g.r_domain[k] < outer_cutoff) continue;
            bool touches = false;
            for (int dj = -1; dj <= 1 && !touches; ++dj)
                for (int di = -1; di <= 1 && !touches; ++di) {
                    if (di == 0 && dj == 0) continue;
                    if (g.in_bounds(i + di, j + dj) &&
                        g.cls(i + di, j + dj) == NodeClass::INTERIOR_PDE)
                        touches = true;
                }
            if (touches) { g.node_class[k] = NodeClass::DIRICHLET_OUTER; ++ring; }
        }
    }
    if (ring == 0 && !opts.tag_incomplete_as_outer)
        throw GridError("build_grid: empty outer Dirichlet ring (cutoff outside grid?)");
    return g;
}

ScalarField sample_field(const Grid& g, const std::function<std::optional<double>(Vec2)>& fn) {
    ScalarField f(g);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            auto v = fn(g.point(i, j));
            int k = g.idx(i, j);
            if (v) { f.values[k] = *v; f.defined[k] = 1; }
        }
    return f;
}

VectorField gradient(const ScalarField& f) {
    const Grid& g = *f.grid;
    VectorField out;
    out.grid = &g;
    out.values.assign(g.num_nodes(), Vec2{});
    out.defined.assign(g.num_nodes(), 0);
    auto def = [&](int i, int j) { return g.in_bounds(i, j) && f.is_defined(i, j); };
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            if (!f.is_defined(i, j)) continue;
            double gx, gy;
            bool e = def(i + 1, j), w = def(i - 1, j);
            if (e && w) gx = (f.at(i + 1, j) - f.at(i - 1, j)) / (2.0 * g.h);
            else if (e) gx = (f.at(i + 1, j) - f.at(i, j)) / g.h;
            else if (w) gx = (f.at(i, j) - f.at(i - 1, j)) / g.h;
            else continue;
            bool nn = def(i, j + 1), ss = def(i, j - 1);
            if (nn && ss) gy = (f.at(i, j + 1) - f.at(i, j - 1)) / (2.0 * g.h);
            else if (nn) gy = (f.at(i, j + 1) - f.at(i, j)) / g.h;
            else if (ss) gy = (f.at(i, j) - f.at(i, j - 1)) / g.h;
            else continue;
            int k = g.idx(i, j);
            out.values[k] = {gx, gy};
            out.defined[k] = 1;
        }
    }
    return out;
}

namespace {

// Edge ids: horizontal edge (i,j)-(i+1,j) -> 2*(j*nx+i); vertical edge
// (i,j)-(i,j+1) -> 2*(j*nx+i)+1.
long edge_id_h(const Grid& g, int i, int j) { return 2L * (static_cast<long>(j) * g.nx + i); }
long edge_id_v(const Grid& g, int i, int j) { return 2L * (static_cast<long>(j) * g.nx + i) + 1; }

Vec2 interp(const Grid& g, int i0, int j0, int i1, int j1, double v0, double v1, double t) {
    double s = (v1 == v0) ? 0.5 : (t - v0) / (v1 - v0);
    s = std::clamp(s, 0.0, 1.0);
    Vec2 a = g.point(i0, j0), b = g.point(i1, j1);
    return {a.x + s * (b.x - a.x), a.y + s * (b.y - a.y)};
}

}  // namespace

Contour extract_contour(const ScalarField& f, double t) {
    const Grid& g = *f.grid;
    Contour out;
    out.threshold = t;

    double vmin = 1e300, vmax = -1e300;
    for (int k = 0; k < g.num_nodes(); ++k)
        if (f.defined[k]) { vmin = std::min(vmin, f.values[k]); vmax = std::max(vmax, f.values[k]); }
    if (vmin > vmax || t < vmin || t > vmax) {
        out.out_of_range = true;
        return out;
    }

    std::map<long, Vec2> cross;                       // edge id -> crossing point
    std::vector<std::pair<long, long>> segs;          // pairs of edge ids
    auto below = [&](int i, int j) { return f.at(i, j) < t; };

    for (int j = 0; j + 1 < g.ny; ++j) {
        for (int i = 0; i + 1 < g.nx; ++i) {
            if (!(f.is_defined(i, j) && f.is_defined(i + 1, j) && f.is_defined(i, j + 1) &&
                  f.is_defined(i + 1, j + 1)))
                continue;
            int code = (below(i, j) ? 1 : 0) | (below(i + 1, j) ? 2 : 0) |
                       (below(i + 1, j + 1) ? 4 : 0) | (below(i, j + 1) ? 8 : 0);
            if (code == 0 || code == 15) continue;

            long eb = edge_id_h(g, i, j), et = edge_id_h(g, i, j + 1);
            long el = edge_id_v(g, i, j), er = edge_id_v(g, i + 1, j);
            auto put = [&](long id, int i0, int j0, int i1, int j1) {
                if (!cross.count(id))
                    cross[id] = interp(g, i0, j0, i1, j1, f.at(i0, j0), f.at(i1, j1), t);
            };
            auto on_b = [&] { put(eb, i, j, i + 1, j); };
            auto on_t = [&] { put(et, i, j + 1, i + 1, j + 1); };
            auto on_l = [&] { put(el, i, j, i, j + 1); };
            auto on_r = [&] { put(er, i + 1, j, i + 1, j + 1); };
            auto seg = [&](long a, long b2) { segs.emplace_back(a, b2); };

            switch (code) {
                case 1: case 14: on_l(); on_b(); seg(el, eb); break;
                case 2: case 13: on_b(); on_r(); seg(eb, er); break;
                case 4: case 11: on_r(); on_t(); seg(er, et); break;
                case 8: case 7:  on_t(); on_l(); seg(et, el); break;
                case 3: case 12: on_l(); on_r(); seg(el, er); break;
                case 6: case 9:  on_b(); on_t(); seg(eb, et); break;
                case 5: case 10: {
                    // saddle: resolve by the cell-center average
                    double c = 0.25 * (f.at(i, j) + f.at(i + 1, j) + f.at(i, j + 1) +
                                       f.at(i + 1, j + 1));
                    bool center_below = c < t;
                    on_b(); on_t(); on_l(); on_r();
                    // pairing A hugs the BL/TR corners: (l,b) and (r,t);
                    // pairing B hugs BR/TL: (b,r) and (t,l)
                    bool pairing_a = (code == 5) ? !center_below : center_below;
                    if (pairing_a) { seg(el, eb); seg(er, et); }
                    else { seg(eb, er); seg(et, el); }
                    break;
                }
            }
        }
    }

    // chain segments into polylines
    std::multimap<long, int> by_edge;
    for (int s = 0; s < static_cast<int>(segs.size()); ++s) {
        by_edge.emplace(segs[s].first, s);
        by_edge.emplace(segs[s].second, s);
    }
    std::vector<bool> used(segs.size(), false);
    for (int s0 = 0; s0 < static_cast<int>(segs.size()); ++s0) {
        if (used[s0]) continue;
        std::vector<long> chain{segs[s0].first, segs[s0].second};
        used[s0] = true;
        for (int dir = 0; dir < 2; ++dir) {
            for (;;) {
                long tip = dir == 0 ? chain.back() : chain.front();
                int next = -1;
                auto [lo, hi] = by_edge.equal_range(tip);
                for (auto it = lo; it != hi; ++it)
                    if (!used[it->second]) { next = it->second; break; }
                if (next < 0) break;
                used[next] = true;
                long other = segs[next].first == tip ? segs[next].second : segs[next].first;
                if (dir == 0) chain.push_back(other);
                else chain.insert(chain.begin(), other);
            }
        }
        std::vector<Vec2> pl;
        pl.reserve(chain.size());
        for (long e : chain) pl.push_back(cross.at(e));
        out.polylines.push_back(std::move(pl));
    }
    return out;
}

double contour_length(const Contour& c) {
    double L = 0.0;
    for (const auto& pl : c.polylines)
        for (size_t k = 1; k < pl.size(); ++k) L += (pl[k] - pl[k - 1]).norm();
    return L;
}

int PixelSet::count() const {
    int c = 0;
    for (auto v : membership) c += v != 0;
    return c;
}

PixelSet sublevel_pixelset(const ScalarField& f, double t) {
    const Grid& g = *f.grid;
    PixelSet ps(g);
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i) {
            if (!(f.is_defined(i, j) && f.is_defined(i + 1, j) && f.is_defined(i, j + 1) &&
                  f.is_defined(i + 1, j + 1)))
                continue;
            double c = 0.25 * (f.at(i, j) + f.at(i + 1, j) + f.at(i, j + 1) + f.at(i + 1, j + 1));
            if (c < t) ps.set(i, j, true);
        }
    return ps;
}

PixelSet masked_cells(const ScalarField& f) {
    const Grid& g = *f.grid;
    PixelSet ps(g);
    for (int j = 0; j + 1 < g.ny; ++j)
        for (int i = 0; i + 1 < g.nx; ++i)
            if (f.is_defined(i, j) && f.is_defined(i + 1, j) && f.is_defined(i, j + 1) &&
                f.is_defined(i + 1, j + 1))
                ps.set(i, j, true);
    return ps;
}

double discrete_perimeter(const PixelSet& set, const PixelSet& window) {
    const Grid& g = *set.grid;
    assert(window.grid == set.grid);
    double edges = 0.0;
    int cnx = set.cnx(), cny = set.cny();
    for (int j = 0; j < cny; ++j)
        for (int i = 0; i < cnx; ++i) {
            if (!window.contains(i, j)) continue;
            if (i + 1 < cnx && window.contains(i + 1, j) &&
                set.contains(i, j) != set.contains(i + 1, j))
                edges += 1.0;
            if (j + 1 < cny && window.contains(i, j + 1) &&
                set.contains(i, j) != set.contains(i, j + 1))
                edges += 1.0;
        }
    return edges * g.h;
}

}  // namespace imcf::geometry

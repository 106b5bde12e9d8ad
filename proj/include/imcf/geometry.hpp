#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace imcf::geometry {

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::hypot(x, y); }
};

inline Vec2 operator*(double s, const Vec2& v) { return v * s; }

/// Planar domain described by its signed distance function (negative inside),
/// the outward unit normal on a tubular neighborhood of the boundary, and the
/// radius r_I of that neighborhood. Built-ins also carry a boundary
/// parametrization used by the diagnostic samplers.
struct DomainSpec {
    std::string name;
    std::function<double(Vec2)> signed_distance;
    std::function<Vec2(Vec2)> normal;       // outward unit normal, valid where |r| < regular_radius
    double regular_radius = 0.0;            // r_I
    std::function<Vec2(double)> boundary_point;  // s in [0,1) -> point on boundary (built-ins only)
    Vec2 bbox_min, bbox_max;                // bounding box of the closed domain
};

DomainSpec make_disk(Vec2 center, double radius, std::string name = "disk");
DomainSpec make_annulus(Vec2 center, double r_inner, double r_outer, std::string name = "annulus");
// Horizontal strip y in (y0, y1), truncated for grid purposes to x in [x0, x1].
DomainSpec make_strip(double y0, double y1, double x0, double x1, std::string name = "strip");
// |x/a|^p + |y/b|^p < 1
DomainSpec make_superellipse(double a, double b, double p, std::string name = "superellipse");
DomainSpec make_halfplane_upper(double x0, double x1, double y1, std::string name = "halfplane");

enum class NodeClass : std::uint8_t {
    INTERIOR_PDE = 0,
    DIRICHLET_E0 = 1,
    DIRICHLET_OUTER = 2,
    OUTSIDE = 3,
};

struct Grid {
    Vec2 origin;
    double h = 0.0;
    int nx = 0, ny = 0;  // node counts per axis
    std::vector<NodeClass> node_class;
    // signed distances cached at build time; r_domain is relative to the outer
    // domain, r_initial to E_0
    std::vector<double> r_domain;
    std::vector<double> r_initial;

    int idx(int i, int j) const { return j * nx + i; }
    bool in_bounds(int i, int j) const { return i >= 0 && i < nx && j >= 0 && j < ny; }
    Vec2 point(int i, int j) const { return {origin.x + i * h, origin.y + j * h}; }
    NodeClass cls(int i, int j) const { return node_class[idx(i, j)]; }
    int num_nodes() const { return nx * ny; }
};

struct GridBuildOptions {
    // Tangentially contacting E_0 (soliton-generated initial sets) are allowed
    // only when this is set; otherwise separation below 3h is an error.
    bool allow_tangential_contact = false;
    // Tag stencil-incomplete nodes inside the band (grid truncation edges) as
    // DIRICHLET_OUTER instead of OUTSIDE; used by truncated-strip runs where a
    // side datum is supplied.
    bool tag_incomplete_as_outer = false;
};

struct GridError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Discretizes the band  Omega_{lambda*delta} \ E0_closure.  Nodes with
/// r_E0 <= 0 are DIRICHLET_E0, nodes with r_domain >= outer_cutoff are
/// DIRICHLET_OUTER (when a stencil touches them) or OUTSIDE, and every
/// stencil-complete node in between is INTERIOR_PDE.
Grid build_grid(const DomainSpec& domain, const DomainSpec& initial, double h,
                double outer_cutoff, double outer_margin,
                const GridBuildOptions& opts = {});

struct ScalarField {
    const Grid* grid = nullptr;
    std::vector<double> values;
    std::vector<std::uint8_t> defined;

    explicit ScalarField(const Grid& g)
        : grid(&g), values(g.num_nodes(), 0.0), defined(g.num_nodes(), 0) {}
    ScalarField() = default;

    double& at(int i, int j) { return values[grid->idx(i, j)]; }
    double at(int i, int j) const { return values[grid->idx(i, j)]; }
    bool is_defined(int i, int j) const { return defined[grid->idx(i, j)] != 0; }
};

/// Samples fn at every node; nodes where fn returns nullopt stay undefined.
ScalarField sample_field(const Grid& g, const std::function<std::optional<double>(Vec2)>& fn);

struct VectorField {
    const Grid* grid = nullptr;
    std::vector<Vec2> values;
    std::vector<std::uint8_t> defined;
};

/// Central differences at interior nodes, one-sided at band edges, undefined
/// where no neighbor data exists. Exact for affine fields.
VectorField gradient(const ScalarField& f);

struct Contour {
    std::vector<std::vector<Vec2>> polylines;
    double threshold = 0.0;
    bool out_of_range = false;
};

/// Marching squares at level t with linear interpolation on edges; saddle
/// cells are resolved by the cell-center average.
Contour extract_contour(const ScalarField& f, double t);

double contour_length(const Contour& c);

struct PixelSet {
    const Grid* grid = nullptr;  // cells are (nx-1) x (ny-1)
    std::vector<std::uint8_t> membership;

    explicit PixelSet(const Grid& g)
        : grid(&g), membership((g.nx - 1) * (g.ny - 1), 0) {}
    PixelSet() = default;

    int cnx() const { return grid->nx - 1; }
    int cny() const { return grid->ny - 1; }
    int cidx(int i, int j) const { return j * cnx() + i; }
    bool contains(int i, int j) const { return membership[cidx(i, j)] != 0; }
    void set(int i, int j, bool v) { membership[cidx(i, j)] = v ? 1 : 0; }
    int count() const;
};

/// Cell included iff the bilinear value at the cell center (mean of the four
/// corner nodes) is < t. Cells with an undefined corner are excluded.
PixelSet sublevel_pixelset(const ScalarField& f, double t);

/// Cells whose four corner nodes are all defined (the usable mask of a field).
PixelSet masked_cells(const ScalarField& f);

/// l1 (edge-count) perimeter of `set` counted over edges with both cells in
/// `window`, times h. Anisotropic by design; exact within the discrete model.
double discrete_perimeter(const PixelSet& set, const PixelSet& window);

}  // namespace imcf::geometry

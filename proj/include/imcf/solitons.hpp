#pragma once

#include <functional>
#include <optional>

#include "imcf/geometry.hpp"

namespace imcf::solitons {

using geometry::Vec2;

// Coordinate conventions shared with the geometry module:
//  - the cycloid translates in the +x direction with unit speed inside the
//    horizontal strip  R x (0, pi/2);
//  - homothetic solitons are anchored at the cone vertex = origin; the curve
//    starts on the positive x-axis at angle 0 and sweeps counterclockwise
//    (c > 0) or clockwise (c < 0);
//  - tangent tau = (cos th, sin th), normal nu = (sin th, -cos th), support
//    h = <gamma, nu>, curvature kappa = d(th)/ds.
inline constexpr double kCycloidStripHeight = M_PI / 2.0;

struct SolitonParams {
    double c = 0.0;       // homothetic rate, c < 1, c != 0
    double root = 0.0;    // sqrt(1-c)
    double mu = 0.0;      // 1 - sqrt(1-c)
    double k = 0.0;       // (1+sqrt(1-c)) / (1-sqrt(1-c))
    double theta_max = 0.0;  // period pi/sqrt(1-c)

    static SolitonParams from_rate(double c);
    double support(double th) const { return std::sin(root * th); }
    double support_d1(double th) const { return root * std::cos(root * th); }
    double support_d2(double th) const { return -root * root * std::sin(root * th); }
    /// cone angle of the supporting cone: (1 - 1/sqrt(1-c))pi for c<0,
    /// (1/sqrt(1-c) - 1)pi for c>0
    double cone_angle() const { return std::abs(1.0 / root - 1.0) * M_PI; }
};

// --- translating cycloid ---------------------------------------------------

/// gamma(th) = (1/4) * (1 - cos 2th, 2th - sin 2th), th in (0, pi)
Vec2 cycloid(double th);
Vec2 cycloid_tangent(double th);   // unit
Vec2 cycloid_normal(double th);    // unit, (sin th, -cos th)
double cycloid_curvature(double th);  // 1/sin th
double cycloid_support(double th);
double cycloid_support_d1(double th);

/// Arrival time of the translating cycloid through (x,y): the horizontal
/// offset placing the curve through the point. Empty outside the open strip.
std::optional<double> cycloid_arrival(double x, double y);

// --- homothetic solitons (hypocycloids / epicycloids / nephroid) -----------

/// Closed form (A.6): gamma(th) = (mu/2) (k e^{i mu th} - e^{i k mu th}).
Vec2 homothetic_curve(double c, double th);
/// Equivalent support-function form (A.5).
Vec2 homothetic_curve_support_form(double c, double th);
Vec2 homothetic_tangent(double c, double th);
Vec2 homothetic_normal(double c, double th);
double homothetic_curvature(double c, double th);  // 1/(c h)

/// Arrival time: t with x on the boundary of e^{ct} gamma; radial root-find
/// in polar form. Empty off the swept cone.
std::optional<double> homothetic_arrival(double c, Vec2 x);

// --- radial warped-product references ---------------------------------------

/// u(r) = min{ (n-1) log[f(r)/f(r0)], t_cap }; the maximal branch when t_cap
/// is absent.
std::function<double(double)> radial_reference(std::function<double(double)> f, double r0, int n,
                                               std::optional<double> t_cap = std::nullopt);

// --- reference arrival-time fields ------------------------------------------

struct ReferenceArrivalTime {
    std::function<std::optional<double>(Vec2)> eval;
    geometry::DomainSpec supporting_domain;
    std::string kind;
};

ReferenceArrivalTime cycloid_reference(double x0, double x1);
ReferenceArrivalTime homothetic_reference(double c, double extent);
/// Radial field |x| -> reference(|x|) centered at the origin.
ReferenceArrivalTime radial_field_reference(std::function<double(double)> f, double r0, int n,
                                            double extent);

geometry::ScalarField rasterize(const ReferenceArrivalTime& ref, const geometry::Grid& g);

}  // namespace imcf::solitons

#include "imcf/weights.hpp"

#include <cmath>

namespace imcf::weights {

namespace {

// log-derivative pieces of A*exp(-s/x)*(1-x)^(-q):
//   g  = s/x^2 + q/(1-x)
//   g' = -2s/x^3 + q/(1-x)^2
//   g''=  6s/x^4 + 2q/(1-x)^3
double g0(double x, double s, double q) { return s / (x * x) + q / (1.0 - x); }
double g1(double x, double s, double q) {
    return -2.0 * s / (x * x * x) + q / ((1.0 - x) * (1.0 - x));
}
double g2(double x, double s, double q) {
    double om = 1.0 - x;
    return 6.0 * s / (x * x * x * x) + 2.0 * q / (om * om * om);
}

}  // namespace

double WeightProfile::eval(double x) const {
    if (x <= 0.0) return 0.0;
    return A * std::exp(-s / x) * std::pow(1.0 - x, -q);
}

double WeightProfile::deriv1(double x) const {
    if (x <= 0.0) return 0.0;
    return eval(x) * g0(x, s, q);
}

double WeightProfile::deriv2(double x) const {
    if (x <= 0.0) return 0.0;
    double g = g0(x, s, q);
    return eval(x) * (g * g + g1(x, s, q));
}

double WeightProfile::deriv3(double x) const {
    if (x <= 0.0) return 0.0;
    double g = g0(x, s, q), gp = g1(x, s, q);
    return eval(x) * (g * g * g + 3.0 * g * gp + g2(x, s, q));
}

WeightProfile make_profile(double A, double q, double s) {
    if (!(A > 0.0) || !(q >= 1.0) || !(s > 0.0))
        throw std::invalid_argument("make_profile: need A>0, q>=1, s>0");
    WeightProfile p;
    p.A = A;
    p.q = q;
    p.s = s;
    return p;
}

ConditionReport check_conditions(const WeightProfile& p, int n) {
    ConditionReport rep;
    rep.pass = true;
    auto fail = [&](const std::string& cond, double x, double v) {
        if (rep.pass || rep.violations.empty()) rep.violations.push_back({cond, x, v});
        rep.pass = false;
    };

    // geometric grid clustered at both endpoints
    const int N = 10000;
    std::vector<double> xs;
    xs.reserve(N);
    const double lo = 1e-9;
    for (int k = 0; k < N / 2; ++k) {
        double t = static_cast<double>(k) / (N / 2 - 1);
        xs.push_back(std::exp(std::log(lo) + t * (std::log(0.5) - std::log(lo))));
    }
    for (int k = 0; k < N / 2; ++k) {
        double t = static_cast<double>(k) / (N / 2 - 1);
        xs.push_back(1.0 - std::exp(std::log(0.5) + t * (std::log(lo) - std::log(0.5))));
    }

    for (double x : {-1.0, -0.3, -1e-12, 0.0})
        if (p.eval(x) != 0.0) fail("eval == 0 on (-inf,0]", x, p.eval(x));

    for (double x : xs) {
        if (!(p.eval(x) > 0.0)) fail("eval > 0 on (0,1)", x, p.eval(x));
        if (!(p.deriv1(x) > 0.0)) fail("deriv1 > 0 on (0,1)", x, p.deriv1(x));
        if (!(p.deriv2(x) > 0.0)) fail("deriv2 > 0 on (0,1)", x, p.deriv2(x));
        if (!(p.deriv3(x) > 0.0)) fail("deriv3 > 0 on (0,1)", x, p.deriv3(x));
    }

    if (!(p.eval(1.0 - 1e-6) > 1e3)) fail("eval(1-1e-6) > 1e3", 1.0 - 1e-6, p.eval(1.0 - 1e-6));

    double half = p.eval(0.5);
    if (!(half > 0.5)) fail("eval(1/2) > 1/2", 0.5, half);

    for (double x : xs) {
        if (x >= 0.5 && x < 1.0) {
            if (!(p.deriv1(x) > 1.0)) fail("deriv1 > 1 on [1/2,1)", x, p.deriv1(x));
            double lb = (n - 1) * std::log(1.0 / (1.0 - x));
            if (!(p.eval(x) >= lb)) fail("eval >= (n-1)log(1/(1-x)) on [1/2,1)", x, p.eval(x));
        }
        if (x >= 0.75 && x < 1.0) {
            if (!(p.eval(x) > half + 3.0)) fail("eval > eval(1/2)+3 on [3/4,1)", x, p.eval(x));
        }
    }
    return rep;
}

WeightEval weight_at(const WeightField& wf, geometry::Vec2 x) {
    double r = wf.domain->signed_distance(x);
    if (r >= wf.delta)
        throw OutOfSupportError("weight_at: point at or beyond the delta collar");
    if (r <= 0.0) return {0.0, false};
    double v = wf.profile.eval(r / wf.delta);
    if (v > wf.psi_max) return {wf.psi_max, true};
    return {v, false};
}

double conformal_factor(const WeightField& wf, geometry::Vec2 x) {
    return std::exp(2.0 * weight_at(wf, x).value / (wf.n - 1));
}

}  // namespace imcf::weights

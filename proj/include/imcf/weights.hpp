#pragma once

#include <string>
#include <vector>

#include "imcf/geometry.hpp"

namespace imcf::weights {

/// Soft-obstacle profile psi_0 on (-inf,1): zero on (-inf,0], smooth, with
/// psi_0, psi_0', psi_0'', psi_0''' all positive on (0,1) and a pole at 1.
/// Concrete family  psi_0(x) = A * exp(-s/x) * (1-x)^(-q);  the checker, not
/// the formula, decides whether a parameter tuple is admissible.
struct WeightProfile {
    double A = 5.2;
    double q = 1.0;
    double s = 1.2;

    double eval(double x) const;
    double deriv1(double x) const;
    double deriv2(double x) const;
    double deriv3(double x) const;
};

WeightProfile make_profile(double A, double q, double s);

struct ConditionViolation {
    std::string condition;
    double x = 0.0;
    double value = 0.0;
};

struct ConditionReport {
    bool pass = false;
    std::vector<ConditionViolation> violations;
};

/// Samples every profile inequality on a 10^4-point geometric grid clustered
/// at 0 and 1: positivity of eval/deriv1/deriv2/deriv3 on (0,1), flatness on
/// (-inf,0], the pole at 1, eval(1/2) > 1/2, deriv1 > 1 on [1/2,1),
/// eval > eval(1/2)+3 on [3/4,1), and eval >= (n-1)*log(1/(1-x)) on [1/2,1).
ConditionReport check_conditions(const WeightProfile& p, int n);

/// psi_delta = psi_0(r(x)/delta), zero inside the domain, with a hard cap
/// psi_max applied on evaluation (solver robustness; the cap is a config
/// knob, default 40).
struct WeightField {
    WeightProfile profile;
    double delta = 0.0;
    const geometry::DomainSpec* domain = nullptr;
    double psi_max = 40.0;
    int n = 2;
};

struct WeightEval {
    double value = 0.0;
    bool capped = false;
};

struct OutOfSupportError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Capped psi_delta at x. Throws OutOfSupportError when r(x) >= delta.
WeightEval weight_at(const WeightField& wf, geometry::Vec2 x);

/// exp(2*psi_delta/(n-1)), consistent with the capped value; equals 1 inside
/// the domain.
double conformal_factor(const WeightField& wf, geometry::Vec2 x);

}  // namespace imcf::weights

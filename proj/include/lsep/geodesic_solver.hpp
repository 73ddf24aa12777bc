#pragma once

#include <vector>

#include "lsep/conformal_metric.hpp"
#include "lsep/hyperbolic.hpp"
#include "lsep/surface_group.hpp"

namespace lsep {

struct SolverOptions {
    double spacing = 0.01;
    double grad_tol = 1e-10;
    double residual_tol = 1e-7;
    int max_iters = 100000;
};

// A bump center in the Fermi chart of a curve: s taken modulo the period.
struct BumpLift {
    int bump;
    double s, u, r0, a;
};

// Nodes live on a fixed grid of axis parameters s_i in [0, period); the unknowns are
// the normal offsets u_i.  Node i + N is twist(node i), i.e. (s_i + period, u_i).
struct DiscreteClosedCurve {
    int class_id = -1;
    Frame frame;         // Fermi frame of the twist's axis
    Mat2 twist;          // class representative lift
    double period = 0.0; // base translation length of the twist
    double spacing = 0.0;
    std::vector<double> s, u;

    std::size_t size() const { return s.size(); }
    Vec3 node(std::size_t i) const { return frame.point(s[i], u[i]); }
    // cyclic successor in the lift: node(N) = twist node(0)
    double s_next(std::size_t i) const { return i + 1 < s.size() ? s[i + 1] : s[0] + period; }
    double u_next(std::size_t i) const { return u[(i + 1) % u.size()]; }
};

struct ClosedGeodesicNumeric {
    DiscreteClosedCurve curve;
    double length = 0.0;      // of the class (power times the primitive length)
    int power = 1;
    double residual = 0.0;
    double quad_error = 0.0;  // |L(h) - L(2h)|/3 on the primitive curve
    int iterations = 0;
    std::vector<Vec3> tangents;
};

// Frame along the axis of m with s = 0 at the start of the period centred on the
// foot of the perpendicular from the origin.
Frame axis_frame(const Mat2& m);

DiscreteClosedCurve initial_curve(const ConjugacyClass& c, const ConformalMetric& g, double spacing);
// Same, from a bare element (tests and tools).
DiscreteClosedCurve initial_curve(const Mat2& twist, const ConformalMetric& g, double spacing);

std::vector<BumpLift> bump_lifts(const DiscreteClosedCurve& c, const ConformalMetric& g);

ClosedGeodesicNumeric relax(DiscreteClosedCurve c, const ConformalMetric& g, const SolverOptions& opt = {});
// Relaxes the primitive root of `cls` and scales the length by the power.
ClosedGeodesicNumeric relax_class(const BaseSpectrum& spec, int cls, const ConformalMetric& g,
                                  const SolverOptions& opt = {});

double curve_length(const DiscreteClosedCurve& c, const ConformalMetric& g);
double geodesic_residual(const DiscreteClosedCurve& c, const ConformalMetric& g);
std::vector<Vec3> unit_tangents(const DiscreteClosedCurve& c, const ConformalMetric& g);

// Sasaki-type distance between unit tangent vectors (X, V) and (Y, W) of the base
// surface: sqrt(d^2 + theta^2), theta measured after transporting W to X.
struct SasakiGap {
    double value, d, theta;
};
SasakiGap sasaki_surrogate(Vec3 X, Vec3 V, Vec3 Y, Vec3 W);

struct ExpansionAudit {
    std::size_t pairs = 0, checks = 0, violations = 0;
    double worst_ratio = 0.0;  // max of separation / (kappa0 e^{kappa|t|} initial)
    double kappa = 1.0, kappa0 = std::sqrt(2.0), slack = 1.05;
};
// Sampled pairs of nearby unit tangents flowed for |t| <= tmax under the base flow.
ExpansionAudit expansion_audit(std::size_t pairs, double tmax, unsigned seed);

}  // namespace lsep

#pragma once

#include <cstdint>
#include <vector>

#include "lsep/geodesic_solver.hpp"
#include "lsep/hyperbolic.hpp"

namespace lsep {

// A closed geodesic prepared for proximity queries.  Nodes live in the chart of the
// lift; every node is also reduced into the octagon and copied to the neighbouring
// tiles that reach within `reach` of the octagon, in chunks with bounding balls.
class Track {
public:
    Track() = default;
    Track(const ClosedGeodesicNumeric& g, int id, double reach);

    int id() const { return id_; }
    std::size_t size() const { return P_.size(); }
    double length() const { return length_; }  // base length of the polyline
    double max_spacing() const { return max_spacing_; }
    double reach() const { return reach_; }
    const Vec3& node(std::size_t i) const { return P_[i]; }
    double arc(std::size_t i) const { return arc_[i]; }
    const Vec3& tangent(std::size_t i) const { return T_[i]; }

    // Point and unit base tangent at arclength x (any real; wraps through the twist).
    Vec3 point_at(double x) const;
    Vec3 tangent_at(double x) const;
    std::size_t segment_of(double x) const;  // node index i with arc_i <= x mod length < arc_{i+1}
    // Node k for any integer k: node(k mod N) moved through the twist floor(k/N) times.
    Vec3 lifted(long k) const;
    double lifted_arc(long k) const;
    const Mat3& twist() const { return twist_; }

    struct Chunk {
        std::uint32_t off, count;  // into the point arrays
        std::uint32_t xform;       // into xforms()
        bool own;                  // identity tile (reduced copy)
        Vec3 center;
        double radius;
    };
    const std::vector<Chunk>& chunks() const { return chunks_; }
    const std::vector<Mat3>& xforms() const { return xforms_; }  // lift chart -> octagon neighbourhood
    const double* x0() const { return x0_.data(); }
    const double* x1() const { return x1_.data(); }
    const double* x2() const { return x2_.data(); }
    std::uint32_t node_of(std::uint32_t p) const { return node_of_[p]; }

private:
    int id_ = -1;
    std::vector<Vec3> P_, T_;
    std::vector<double> arc_;  // N + 1 entries, arc_[N] = length_
    double length_ = 0.0, max_spacing_ = 0.0, reach_ = 0.0;
    Mat3 twist_, twist_inv_;
    std::vector<Chunk> chunks_;
    std::vector<Mat3> xforms_;
    std::vector<double> x0_, x1_, x2_;
    std::vector<std::uint32_t> node_of_;
};

struct ProximityConstants {
    double kappa = 1.0, kappa0 = std::sqrt(2.0);
    double r_m = 0.0;
    double eps0_phase = 0.0;
    double C1 = 0.0, C2 = 0.0, C3 = 0.0;
    double alpha = 0.0;  // clearance exponent in force
    double T = 0.0;      // working cutoff
};
ProximityConstants make_constants(double kappa, double r_m, double eps0_phase, double alpha, double T);

struct SasakiBounds {
    double value, lower, upper;  // sqrt(d^2+theta^2), max(d,theta), d+theta
    double d, theta;
};
SasakiBounds sasaki_gap(Vec3 X, Vec3 V, Vec3 Y, Vec3 W);

struct AlmostIntersection {
    double s = 0.0, t = 0.0;  // arclength on beta, gamma
    Vec3 x, y;                // both in beta's lift chart
    double distance = 0.0;
    double sasaki_gap = 0.0;
    Mat3 K;                   // gamma lift chart -> beta lift chart
};

struct Arc {
    double lo, hi;  // arclength on beta; may extend past [0, length)
    double length() const { return hi - lo; }
};

struct SegmentCover {
    std::vector<Arc> arcs;
    std::size_t count = 0;
    double max_arc = 0.0;
    std::size_t pairs = 0;  // almost-intersections behind the arcs
};

std::vector<AlmostIntersection> almost_intersections(const Track& beta, const Track& gamma, double eps,
                                                     double count_bound = 0.0);
SegmentCover covering_segments(const Track& beta, const Track& gamma, double eps, const ProximityConstants& k,
                               const std::vector<AlmostIntersection>& ai);
// Self almost-intersections (s < t), away from the band |s - t| <= r_m/2.
std::vector<AlmostIntersection> self_intersections(const Track& beta, double eps, double r_m,
                                                   double count_bound = 0.0);
SegmentCover self_cover(const Track& beta, double eps, const ProximityConstants& k);

// Distance from X (beta's lift chart of `from`) to the closest point of g on the surface,
// scanning all tiles; `skip` excludes g's own arc within that arclength of `skip_at`.
double surface_distance(const Track& from, Vec3 X, const Track& g, double skip = -1.0, double skip_at = 0.0);

struct CoverCheck {
    std::size_t samples = 0, near = 0, escaped = 0;
};
CoverCheck cover_completeness(const Track& beta, const Track& gamma, double eps, const SegmentCover& cover,
                              std::size_t samples, unsigned seed, double r_m = 0.0);

struct SafePoint {
    int geodesic = -1;
    double s = 0.0;
    Vec3 z;          // beta's lift chart
    Vec3 z_reduced;  // in the octagon
    double clearance = 0.0;    // verified distance to every other geodesic and to beta's far part
    double free_length = 0.0;  // of the segment z sits in
    double eps = 0.0;
    Arc host;                  // I_z
};

SafePoint safe_point(const Track& beta, const std::vector<const Track*>& others, double eps,
                     const ProximityConstants& k);

struct PairGap {
    int a, b;
    double gap, weight;
};
struct PhaseReport {
    double T = 0.0;
    double eps0_phase = 0.0;  // min over pairs of gap e^{2 kappa max(l_a, l_b)}
    double min_gap = 0.0;
    int arg_a = -1, arg_b = -1;
    std::size_t pairs = 0, pairs_scanned = 0;
};
// Tracks of primitive classes only; lengths are the class lengths.
PhaseReport phase_audit(const std::vector<const Track*>& tracks, const std::vector<double>& lengths, double T,
                        double kappa = 1.0);

struct DivergenceAudit {
    std::size_t checks = 0, violations = 0;
    double worst_margin = 1e300;  // min over samples of distance - bound
    std::size_t arc_checks = 0, arc_violations = 0;
};
void divergence_audit(const Track& beta, const Track& gamma, const std::vector<AlmostIntersection>& ai,
                      const SegmentCover& cover, const ProximityConstants& k, DivergenceAudit& out);

}  // namespace lsep

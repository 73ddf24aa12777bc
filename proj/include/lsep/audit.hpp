#pragma once

#include <cstddef>
#include <vector>

#include "lsep/geodesic_solver.hpp"
#include "lsep/proximity.hpp"

namespace lsep {

struct AuditOptions {
    double T = 6.0;              // proximity audit cutoff
    double phase_T_max = 8.0;    // phase audit runs T, T + step, ..., phase_T_max
    double phase_T_step = 1.0;
    double alpha = 0.5;          // tube eps = e^{-alpha T}
    double kappa = 1.0;
    double r_m = 0.0;            // 0: 0.9 r_inj / sqrt(1 + eps0)
    double eps0 = 0.1;
    std::size_t expansion_pairs = 1000;
    double expansion_tmax = 3.0;
    std::size_t cover_samples = 400;  // per ordered pair
    unsigned seed = 1;
    int threads = 1;
};

struct ProximityAudit {
    double T = 0.0, eps = 0.0, r_m = 0.0;
    double eps0_phase = 0.0;
    std::size_t tracks = 0, pairs = 0;
    std::size_t almost_intersections = 0, max_count = 0;
    double count_bound = 0.0;
    std::size_t count_violations = 0;
    std::size_t cover_mismatches = 0;  // cover count differs from the almost-intersection count
    std::size_t self_pairs = 0;
    DivergenceAudit divergence;
    CoverCheck cover;
};

struct AuditReport {
    ProximityAudit proximity;
    std::vector<PhaseReport> phase;
    bool phase_positive = false, phase_monotone = false;
    ExpansionAudit expansion;
    bool ok() const;
};

ProximityAudit proximity_audit(const AuditOptions& o);
std::vector<PhaseReport> phase_series(const AuditOptions& o);
AuditReport run_audit(const AuditOptions& o);

}  // namespace lsep

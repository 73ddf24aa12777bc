#include "lsep/audit.hpp"

#include <cmath>
#include <memory>

#include "lsep/parallel.hpp"
#include "lsep/surface_group.hpp"

namespace lsep {

namespace {

struct TrackSet {
    std::vector<std::unique_ptr<Track>> owned;
    std::vector<const Track*> tracks;
    std::vector<double> lengths;
};

TrackSet base_tracks(double T, int threads) {
    auto spec = enumerate_classes(bolza_group(), T);
    std::vector<int> prim;
    for (int i = 0; i < static_cast<int>(spec.classes.size()); ++i)
        if (spec.classes[i].primitive) prim.push_back(i);
    TrackSet s;
    s.owned.resize(prim.size());
    parallel_for(prim.size(), threads, [&](std::size_t k) {
        auto g = relax_class(spec, prim[k], ConformalMetric{});
        s.owned[k] = std::make_unique<Track>(g, prim[k], injectivity_radius());
    });
    for (std::size_t k = 0; k < prim.size(); ++k) {
        s.tracks.push_back(s.owned[k].get());
        s.lengths.push_back(spec.classes[prim[k]].base_length);
    }
    return s;
}

double margin_radius(const AuditOptions& o) {
    return o.r_m > 0.0 ? o.r_m : 0.9 * injectivity_radius() / std::sqrt(1.0 + o.eps0);
}

}  // namespace

bool AuditReport::ok() const {
    return proximity.count_violations == 0 && proximity.cover_mismatches == 0 && proximity.divergence.violations == 0 &&
           proximity.divergence.arc_violations == 0 && proximity.cover.escaped == 0 && phase_positive &&
           phase_monotone && expansion.violations == 0;
}

ProximityAudit proximity_audit(const AuditOptions& o) {
    ProximityAudit r;
    r.T = o.T;
    r.eps = std::exp(-o.alpha * o.T);
    r.r_m = margin_radius(o);
    r.count_bound = 4.0 * (o.T / r.r_m) * (o.T / r.r_m);
    auto set = base_tracks(o.T, o.threads);
    const auto& tp = set.tracks;
    r.tracks = tp.size();
    // divergence constants are fitted from the phase gap of this very set
    r.eps0_phase = phase_audit(tp, set.lengths, o.T, o.kappa).eps0_phase;
    auto K = make_constants(o.kappa, r.r_m, r.eps0_phase, o.alpha, o.T);

    struct Row {
        std::size_t pairs = 0, ai = 0, max_count = 0, viol = 0, mismatch = 0, self = 0;
        DivergenceAudit div;
        CoverCheck cover;
    };
    std::vector<Row> rows(tp.size());
    parallel_for(tp.size(), o.threads, [&](std::size_t a) {
        Row& row = rows[a];
        for (std::size_t b = 0; b < tp.size(); ++b) {
            if (a == b) continue;
            // no bound passed: the count is audited here rather than enforced
            auto ai = almost_intersections(*tp[a], *tp[b], r.eps);
            auto cv = covering_segments(*tp[a], *tp[b], r.eps, K, ai);
            ++row.pairs;
            row.ai += ai.size();
            row.max_count = std::max(row.max_count, ai.size());
            if (static_cast<double>(ai.size()) > r.count_bound) ++row.viol;
            if (cv.count != ai.size()) ++row.mismatch;
            divergence_audit(*tp[a], *tp[b], ai, cv, K, row.div);
            if (o.cover_samples) {
                auto cc = cover_completeness(*tp[a], *tp[b], r.eps, cv, o.cover_samples,
                                             o.seed + static_cast<unsigned>(a * tp.size() + b), r.r_m);
                row.cover.samples += cc.samples;
                row.cover.near += cc.near;
                row.cover.escaped += cc.escaped;
            }
        }
        row.self = self_cover(*tp[a], r.eps, K).pairs;
    });
    for (const auto& row : rows) {
        r.pairs += row.pairs;
        r.almost_intersections += row.ai;
        r.max_count = std::max(r.max_count, row.max_count);
        r.count_violations += row.viol;
        r.cover_mismatches += row.mismatch;
        r.self_pairs += row.self;
        r.divergence.checks += row.div.checks;
        r.divergence.violations += row.div.violations;
        r.divergence.worst_margin = std::min(r.divergence.worst_margin, row.div.worst_margin);
        r.divergence.arc_checks += row.div.arc_checks;
        r.divergence.arc_violations += row.div.arc_violations;
        r.cover.samples += row.cover.samples;
        r.cover.near += row.cover.near;
        r.cover.escaped += row.cover.escaped;
    }
    return r;
}

std::vector<PhaseReport> phase_series(const AuditOptions& o) {
    std::vector<PhaseReport> out;
    auto set = base_tracks(o.phase_T_max, o.threads);
    for (double T = o.T; T <= o.phase_T_max + 1e-9; T += o.phase_T_step) {
        std::vector<const Track*> tp;
        std::vector<double> L;
        for (std::size_t i = 0; i < set.tracks.size(); ++i)
            if (set.lengths[i] <= T) {
                tp.push_back(set.tracks[i]);
                L.push_back(set.lengths[i]);
            }
        out.push_back(phase_audit(tp, L, T, o.kappa));
    }
    return out;
}

AuditReport run_audit(const AuditOptions& o) {
    AuditReport r;
    r.proximity = proximity_audit(o);
    r.phase = phase_series(o);
    r.phase_positive = !r.phase.empty() && r.phase.front().eps0_phase > 0.0;
    r.phase_monotone = true;
    for (std::size_t i = 1; i < r.phase.size(); ++i)
        r.phase_monotone = r.phase_monotone && r.phase[i].eps0_phase <= r.phase[i - 1].eps0_phase;
    r.expansion = expansion_audit(o.expansion_pairs, o.expansion_tmax, o.seed);
    return r;
}

}  // namespace lsep

#include "lsep/separation_engine.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <set>

#include "lsep/errors.hpp"
#include "lsep/parallel.hpp"

namespace lsep {

SeparationParams derive_constants(double kappa, double h_top, double eps0, double eps, int k, double scale,
                                  SeparationParams p) {
    if (k < 2) throw Error(ErrorKind::Validation, "k must be at least 2");
    if (!(eps > 0.0)) throw Error(ErrorKind::Validation, "eps must be positive");
    if (!(scale > 0.0 && scale <= 1.0)) throw Error(ErrorKind::Validation, "scale must lie in (0, 1]");
    if (!(eps0 >= 0.0)) throw Error(ErrorKind::Validation, "eps0 must be non-negative");
    p.k = k;
    p.eps = eps;
    p.eps0 = eps0;
    p.scale = scale;
    p.kappa = kappa;
    p.h_top = h_top;
    p.kappa0 = std::sqrt(1.0 + kappa);
    p.h = h_top * std::sqrt(1.0 + eps0);
    p.alpha_unscaled = 2.0 * kappa + p.h + eps / (2.0 * (k + 1));
    p.nu_unscaled = p.h + (k + 1) * p.alpha_unscaled + eps / 2.0;
    p.nu_headline = (k + 2) * p.h + (k + 1) * kappa + eps;
    p.alpha = scale * p.alpha_unscaled;
    p.nu = p.h + (k + 1) * p.alpha + eps / 2.0;
    p.r_m = p.r_m_fraction * injectivity_radius() / std::sqrt(1.0 + eps0);
    return p;
}

WorkingSet::WorkingSet(BaseSpectrum spec, double spacing, int threads)
    : spec_(std::move(spec)), spacing_(spacing), threads_(threads) {
    geo_.resize(spec_.classes.size());
    tracks_.resize(spec_.classes.size());
    lengths_.assign(spec_.classes.size(), 0.0);
}

const Track& WorkingSet::track(int c) const {
    if (!tracks_.at(c)) throw Error(ErrorKind::Validation, "class " + std::to_string(c) + " has no track");
    return *tracks_[c];
}

void WorkingSet::relax_some(const ConformalMetric& g, const std::vector<int>& which) {
    SolverOptions opt;
    opt.spacing = spacing_;
    parallel_for(which.size(), threads_, [&](std::size_t k) {
        int c = which[k];
        if (!spec_.classes[c].primitive) return;
        auto r = std::make_shared<ClosedGeodesicNumeric>(relax_class(spec_, c, g, opt));
        tracks_[c] = std::make_shared<Track>(*r, c, injectivity_radius());
        geo_[c] = std::move(r);
    });
    for (std::size_t c = 0; c < spec_.classes.size(); ++c) {
        const auto& cl = spec_.classes[c];
        if (geo_[cl.root]) lengths_[c] = cl.power * geo_[cl.root]->length;
    }
}

void WorkingSet::relax_all(const ConformalMetric& g) {
    std::vector<int> all(spec_.classes.size());
    std::iota(all.begin(), all.end(), 0);
    relax_some(g, all);
}

std::vector<int> WorkingSet::classes_in(double lo, double hi) const {
    std::vector<int> out;
    for (std::size_t c = 0; c < lengths_.size(); ++c)
        if (lengths_[c] > lo && lengths_[c] <= hi) out.push_back(static_cast<int>(c));
    return out;
}

void schedule(WindowPlan& p) {
    const int mu = static_cast<int>(p.classes.size());
    p.delta.assign(mu, 0.0);
    p.predicted = p.lengths;
    p.m = 0;
    if (mu == 0) return;
    int best = 0;
    double gmax = -1.0;
    for (int i = 0; i + 1 < mu; ++i) {
        double g = p.lengths[i + 1] - p.lengths[i];
        if (g > gmax) {
            gmax = g;
            best = i + 1;
        }
    }
    // Split at the widest gap only if it survives the opposing shifts with a unit to spare;
    // otherwise shift everything upward.
    p.m = (mu >= 2 && gmax >= (2.0 * mu + 1.0) * p.unit) ? best : mu;
    for (int i = 1; i <= mu; ++i) {
        p.delta[i - 1] = i <= p.m ? i * p.unit : -(mu - i + 1) * p.unit;
        p.predicted[i - 1] = p.lengths[i - 1] + p.delta[i - 1];
    }
    for (int i = 0; i + 1 < mu; ++i)
        if (!(p.predicted[i + 1] - p.predicted[i] >= p.required))
            throw Error(ErrorKind::Validation, "schedule leaves a gap below the requirement");
}

WindowPlan plan_window(const WorkingSet& ws, int n, const SeparationParams& prm) {
    WindowPlan p;
    p.n = n;
    p.T_lo = prm.T0 + n - 1;
    p.T_hi = prm.T0 + n;
    p.T_next = prm.T0 + n + 1;
    for (int c : ws.classes_in(p.T_lo, p.T_hi))
        if (ws.spectrum().classes[c].primitive) p.classes.push_back(c);
    const auto& cls = ws.spectrum().classes;
    std::sort(p.classes.begin(), p.classes.end(), [&](int a, int b) {
        if (ws.length(a) != ws.length(b)) return ws.length(a) < ws.length(b);
        return cls[a].word < cls[b].word;
    });
    for (int c : p.classes) p.lengths.push_back(ws.length(c));
    p.required = std::exp(-prm.nu * p.T_hi);
    p.unit = prm.margin * p.required;
    p.r0 = 0.5 * std::exp(-prm.alpha * p.T_next);
    p.clearance = 2.0 * p.r0;
    schedule(p);
    return p;
}

void place_safe_points(WindowPlan& p, const WorkingSet& ws, const SeparationParams& prm) {
    std::vector<const Track*> others;
    for (int c : ws.classes_in(0.0, p.T_next))
        if (ws.spectrum().classes[c].primitive) others.push_back(&ws.track(c));
    auto k = make_constants(prm.kappa, prm.r_m, 0.0, prm.alpha, p.T_next);
    p.safe.assign(p.classes.size(), SafePoint{});
    parallel_for(p.classes.size(), prm.threads,
                 [&](std::size_t i) { p.safe[i] = safe_point(ws.track(p.classes[i]), others, p.clearance, k); });
}

namespace {

std::vector<Bump> bumps_for(const WindowPlan& p, const WorkingSet& ws) {
    std::vector<Bump> out;
    for (std::size_t i = 0; i < p.classes.size(); ++i) {
        Bump b;
        b.center = p.safe[i].z_reduced;
        b.r0 = p.r0;
        b.delta = p.delta[i];
        b.window = p.n;
        b.index = static_cast<int>(i) + 1;
        b.class_index = p.classes[i];
        b.word = ws.spectrum().classes[p.classes[i]].word;
        out.push_back(b);
    }
    return out;
}

ApplyResult finish(const ConformalMetric& g, const WindowPlan& p, std::vector<Bump> bumps, WorkingSet& ws,
                   const SeparationParams& prm, bool calibrate) {
    ApplyResult r;
    for (int round = 0;; ++round) {
        r.metric = g.with(bumps);
        ws.relax_some(r.metric, p.classes);
        bool ok = true;
        for (std::size_t i = 0; i < bumps.size(); ++i) {
            double meas = ws.length(p.classes[i]) - p.lengths[i];
            if (std::abs(meas - p.delta[i]) > prm.cal_tol * std::abs(p.delta[i])) {
                ok = false;
                if (calibrate && round < prm.cal_rounds) {
                    if (!(meas * p.delta[i] > 0.0))
                        throw Error(ErrorKind::CalibrationFailed, "increment of " + bumps[i].word + " has the wrong sign");
                    bumps[i].delta *= p.delta[i] / meas;
                }
            }
        }
        r.rounds = round;
        if (ok || !calibrate) break;
        if (round >= prm.cal_rounds)
            throw Error(ErrorKind::CalibrationFailed,
                        "window " + std::to_string(p.n) + " increments off after " + std::to_string(round) + " rounds");
    }
    for (std::size_t i = 0; i < bumps.size(); ++i)
        r.bumps.push_back({p.classes[i], bumps[i].word, p.delta[i], bumps[i].delta,
                           ws.length(p.classes[i]) - p.lengths[i], bumps[i].center, bumps[i].r0});
    r.ck = admissibility(r.metric, prm.eps0, prm.k);
    if (!r.ck.admissible)
        throw Error(ErrorKind::AdmissibilityExceeded,
                    "window " + std::to_string(p.n) + ": C^k norm " + std::to_string(r.ck.norm) + " vs eps0 " +
                        std::to_string(prm.eps0) + ", K_max " + std::to_string(r.ck.K_max));
    return r;
}

}  // namespace

ApplyResult apply_window(const ConformalMetric& g, const WindowPlan& p, WorkingSet& ws, const SeparationParams& prm) {
    if (p.empty()) {
        ApplyResult r;
        r.metric = g;
        r.ck = admissibility(g, prm.eps0, prm.k);
        return r;
    }
    if (p.safe.size() != p.classes.size()) throw Error(ErrorKind::Validation, "plan has no safe points");
    return finish(g, p, bumps_for(p, ws), ws, prm, true);
}

WindowCertificate verify_window(const std::vector<double>& before, const WorkingSet& ws, const WindowPlan& p,
                                const ApplyResult& a, const SeparationParams& prm) {
    WindowCertificate w;
    const auto& cls = ws.spectrum().classes;
    w.n = p.n;
    w.T_lo = p.T_lo;
    w.T_hi = p.T_hi;
    w.split = p.m;
    w.unit = p.unit;
    w.r0 = p.r0;
    w.required_gap = p.required;
    for (std::size_t i = 0; i < p.classes.size(); ++i) {
        int c = p.classes[i];
        w.classes.push_back(cls[c].word);
        w.lengths_before.push_back(p.lengths[i]);
        w.lengths_after.push_back(ws.length(c));
        w.scheduled.push_back(p.delta[i]);
        w.amplitudes.push_back(a.bumps[i].amplitude);
        w.measured.push_back(ws.length(c) - p.lengths[i]);
        auto d = to_disk(a.bumps[i].center);
        w.centers.push_back({d.real(), d.imag()});
        w.step_c0 = std::max(w.step_c0, std::abs(std::pow(1.0 + a.bumps[i].amplitude / p.r0 * profile::chi(0.0), 2) - 1.0));
    }
    std::set<int> bumped(p.classes.begin(), p.classes.end());
    // (a) every class of the window, iterates included
    std::vector<double> win;
    for (std::size_t c = 0; c < cls.size(); ++c)
        if (before[c] > p.T_lo && before[c] <= p.T_hi) win.push_back(ws.length(static_cast<int>(c)));
    std::sort(win.begin(), win.end());
    w.min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < win.size(); ++i) w.min_gap = std::min(w.min_gap, win[i + 1] - win[i]);
    w.gaps_ok = w.min_gap >= p.required;
    // (b), (c) untouched lengths; iterates of bumped classes move with their root
    for (std::size_t c = 0; c < cls.size(); ++c) {
        double d = std::abs(ws.length(static_cast<int>(c)) - before[c]);
        if (bumped.count(cls[c].root)) {
            if (!cls[c].primitive) {
                double e = std::abs(ws.length(static_cast<int>(c)) - cls[c].power * ws.length(cls[c].root));
                w.iterate_error = std::max(w.iterate_error, e);
            }
            continue;
        }
        if (before[c] <= p.T_lo) w.fixed_drift = std::max(w.fixed_drift, d);
        else if (before[c] > p.T_hi && before[c] <= p.T_next) w.next_drift = std::max(w.next_drift, d);
    }
    w.fixed_ok = w.fixed_drift <= prm.drift_tol;
    w.next_ok = w.next_drift <= prm.drift_tol;
    w.ck_norm = a.ck.norm;
    w.ck_budget = a.ck.budget;
    for (const auto& cw : a.ck.windows)
        if (cw.window == p.n) w.ck_budget = cw.budget;
    w.distortion = a.ck.c0_distortion;
    w.K_min = a.ck.K_min;
    w.K_max = a.ck.K_max;
    w.admissible = a.ck.admissible;
    w.guard = p.T_next / std::sqrt(1.0 + w.distortion) > p.T_hi;
    w.verdict = w.gaps_ok && w.fixed_ok && w.next_ok && w.guard && w.admissible && w.iterate_error <= 1e-8;
    return w;
}

SeparationCheck separation_check(std::vector<double> v, double nu, double C, bool all_pairs) {
    SeparationCheck r;
    r.worst_ratio = std::numeric_limits<double>::infinity();
    r.measured_C = std::numeric_limits<double>::infinity();
    for (double x : v)
        if (!(std::isfinite(x) && x > 0.0)) throw Error(ErrorKind::Validation, "lengths must be finite and positive");
    std::sort(v.begin(), v.end());
    auto visit = [&](double a, double b) {
        double mx = std::max(a, b), gap = std::abs(b - a);
        double need = C * std::exp(-nu * mx);
        ++r.pairs;
        double ratio = gap / need;
        if (ratio < r.worst_ratio) {
            r.worst_ratio = ratio;
            r.l1 = a;
            r.l2 = b;
        }
        r.measured_C = std::min(r.measured_C, gap * std::exp(nu * mx));
        if (gap < need) r.ok = false;
    };
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (all_pairs)
            for (std::size_t j = i + 1; j < v.size(); ++j) visit(v[i], v[j]);
        else if (i + 1 < v.size())
            visit(v[i], v[i + 1]);
    }
    return r;
}

double select_T0(const SeparationParams& prm0) {
    for (double T0 = prm0.t0_min; T0 <= prm0.t0_max + 1e-9; T0 += prm0.t0_step) {
        SeparationParams prm = prm0;
        prm.T0 = T0;
        WorkingSet ws(enumerate_classes(bolza_group(), T0 + prm.window_count + 1), prm.spacing, prm.threads);
        ws.relax_all(ConformalMetric{});
        bool ok = true;
        for (int n = 1; n <= prm.window_count && ok; ++n) {
            auto p = plan_window(ws, n, prm);
            try {
                place_safe_points(p, ws, prm);
            } catch (const Error& e) {
                if (e.kind() != ErrorKind::NoSafeSegment) throw;
                ok = false;
            }
        }
        if (ok) return T0;
    }
    throw Error(ErrorKind::NoSafeSegment, "no T0 on the search grid admits safe points for every window");
}

RunResult run(SeparationParams prm, const ConformalMetric* replay) {
    auto base_ck = admissibility(ConformalMetric{}, prm.eps0, prm.k);
    double kappa = std::sqrt(std::max(-base_ck.K_min, 0.0));
    prm = derive_constants(kappa, prm.h_top, prm.eps0, prm.eps, prm.k, prm.scale, prm);
    RunResult out;
    if (prm.window_count <= 0) {
        if (prm.T0 <= 0.0) prm.T0 = prm.t0_min;
        out.params = prm;
        out.certificate.params = prm;
        return out;
    }
    if (prm.T0 <= 0.0) prm.T0 = select_T0(prm);
    WorkingSet ws(enumerate_classes(bolza_group(), prm.T0 + prm.window_count + 1), prm.spacing, prm.threads);
    ws.relax_all(ConformalMetric{});
    for (const auto& c : ws.spectrum().classes) out.words.push_back(c.word);
    out.base_lengths = ws.lengths();
    ConformalMetric g;
    auto& cert = out.certificate;
    cert.working_set = ws.size();
    int n = 1;
    try {
        for (; n <= prm.window_count; ++n) {
            WindowPlan p = plan_window(ws, n, prm);
            std::vector<double> before = ws.lengths();
            ApplyResult a;
            if (replay) {
                std::vector<Bump> bumps;
                for (const auto& b : replay->bumps())
                    if (b.window == n) bumps.push_back(b);
                if (bumps.size() != p.classes.size())
                    throw Error(ErrorKind::Validation, "replayed metric has " + std::to_string(bumps.size()) +
                                                           " bumps in window " + std::to_string(n) + ", plan has " +
                                                           std::to_string(p.classes.size()));
                for (std::size_t i = 0; i < bumps.size(); ++i)
                    if (bumps[i].class_index != p.classes[i])
                        throw Error(ErrorKind::Validation, "replayed bump order differs from the plan");
                if (bumps.empty()) {
                    a.metric = g;
                    a.ck = admissibility(g, prm.eps0, prm.k);
                } else {
                    a = finish(g, p, bumps, ws, prm, false);
                }
            } else {
                if (!p.empty()) place_safe_points(p, ws, prm);
                a = apply_window(g, p, ws, prm);
            }
            ws.relax_all(a.metric);
            cert.windows.push_back(verify_window(before, ws, p, a, prm));
            out.safe_points.push_back(p.safe);
            g = a.metric;
        }
    } catch (const Error& e) {
        cert.aborted = true;
        cert.abort_kind = e.kind();
        cert.abort_message = "window " + std::to_string(n) + ": " + e.what();
        ws.relax_all(g);  // the failed window may have left candidate lengths behind
    }
    std::vector<double> fin;
    for (std::size_t c = 0; c < ws.size(); ++c) {
        double l = ws.length(static_cast<int>(c));
        if (out.base_lengths[c] > prm.T0 && out.base_lengths[c] <= prm.T0 + prm.window_count) fin.push_back(l);
    }
    cert.spectrum_check = separation_check(fin, prm.nu, std::exp(-prm.nu), !prm.quick);
    cert.global_verdict = cert.spectrum_check.ok && !cert.aborted;
    for (const auto& w : cert.windows) cert.global_verdict = cert.global_verdict && w.verdict;
    out.final_lengths = ws.lengths();
    out.metric = g;
    out.params = prm;
    cert.params = prm;
    return out;
}

}  // namespace lsep

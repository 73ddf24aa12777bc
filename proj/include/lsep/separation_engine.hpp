#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lsep/conformal_metric.hpp"
#include "lsep/errors.hpp"
#include "lsep/geodesic_solver.hpp"
#include "lsep/proximity.hpp"
#include "lsep/surface_group.hpp"

namespace lsep {

struct SeparationParams {
    int k = 2;
    double eps = 4.5;      // slack in the exponents
    double eps0 = 0.1;     // metric ball radius
    double scale = 0.132;  // multiplies alpha
    double kappa = 1.0, h_top = 1.0;
    double h = 0.0, kappa0 = 0.0;
    double alpha = 0.0, nu = 0.0;                  // in force
    double alpha_unscaled = 0.0, nu_unscaled = 0.0;      // unscaled schedule exponents
    double nu_headline = 0.0;                      // (k+2)h + (k+1)kappa + eps
    double r_m = 0.0, r_m_fraction = 0.9;
    double T0 = 0.0;
    double t0_min = 3.0, t0_step = 0.5, t0_max = 6.0;
    int window_count = 2;
    double margin = 1.25;  // schedule unit = margin * e^{-nu T_n}
    double cal_tol = 1e-2;
    int cal_rounds = 3;
    double drift_tol = 1e-9;
    double spacing = 0.01;
    bool quick = false;
    unsigned seed = 1;
    int threads = 1;
};

// alpha = scale (2 kappa + h + eps/(2(k+1))), nu = h + (k+1) alpha + eps/2, h = h_top sqrt(1 + eps0).
SeparationParams derive_constants(double kappa, double h_top, double eps0, double eps, int k, double scale,
                                  SeparationParams base = {});

// Every class up to a cutoff with its current relaxed geodesic (primitives only) and length.
class WorkingSet {
public:
    WorkingSet(BaseSpectrum spec, double spacing, int threads);
    const BaseSpectrum& spectrum() const { return spec_; }
    std::size_t size() const { return spec_.classes.size(); }
    double length(int c) const { return lengths_[c]; }
    const std::vector<double>& lengths() const { return lengths_; }
    const ClosedGeodesicNumeric& geodesic(int primitive) const { return *geo_[primitive]; }
    const Track& track(int primitive) const;
    // Re-relax every primitive class under g (or only `which`), updating lengths.
    void relax_all(const ConformalMetric& g);
    void relax_some(const ConformalMetric& g, const std::vector<int>& which);
    std::vector<int> classes_in(double lo, double hi) const;  // lo < length <= hi
    double spacing() const { return spacing_; }

private:
    BaseSpectrum spec_;
    double spacing_;
    int threads_;
    std::vector<std::shared_ptr<ClosedGeodesicNumeric>> geo_;
    mutable std::vector<std::shared_ptr<Track>> tracks_;
    std::vector<double> lengths_;
};

struct WindowPlan {
    int n = 0;
    double T_lo = 0.0, T_hi = 0.0, T_next = 0.0;
    std::vector<int> classes;     // primitive classes, ordered by (length, word)
    std::vector<double> lengths;  // before
    int m = 0;                    // split index, 1-based
    double required = 0.0;        // e^{-nu T_n}
    double unit = 0.0;            // margin * required
    double r0 = 0.0;              // eps_n = e^{-alpha T_{n+1}}/2
    double clearance = 0.0;       // 2 eps_n
    std::vector<double> delta;
    std::vector<double> predicted;
    std::vector<SafePoint> safe;
    bool empty() const { return classes.empty(); }
};

// Schedule only: split and amplitudes for sorted lengths.
void schedule(WindowPlan& p);
WindowPlan plan_window(const WorkingSet& ws, int n, const SeparationParams& prm);
void place_safe_points(WindowPlan& p, const WorkingSet& ws, const SeparationParams& prm);

struct BumpOutcome {
    int cls;
    std::string word;
    double scheduled, amplitude, measured;
    Vec3 center;
    double r0;
};

struct ApplyResult {
    ConformalMetric metric;
    std::vector<BumpOutcome> bumps;
    int rounds = 0;
    CkNormReport ck;
};
// New metric with one bump per planned class, calibrated against re-relaxed lengths.
// `ws` is left holding the window's re-relaxed curves.
ApplyResult apply_window(const ConformalMetric& g, const WindowPlan& p, WorkingSet& ws, const SeparationParams& prm);

struct WindowCertificate {
    int n = 0;
    double T_lo = 0.0, T_hi = 0.0;
    std::vector<std::string> classes;
    std::vector<double> lengths_before, lengths_after;
    std::vector<double> scheduled, amplitudes, measured;
    std::vector<std::vector<double>> centers;  // disk coordinates
    int split = 0;
    double unit = 0.0, r0 = 0.0;
    double min_gap = 0.0, required_gap = 0.0;
    double fixed_drift = 0.0;   // classes at or below T_{n-1}
    double next_drift = 0.0;    // classes in (T_n, T_{n+1}]
    double iterate_error = 0.0; // iterates of bumped classes vs k times the primitive
    double ck_norm = 0.0, ck_budget = 0.0, step_c0 = 0.0, distortion = 0.0;
    double K_min = 0.0, K_max = 0.0;
    bool admissible = true, guard = true;
    bool gaps_ok = true, fixed_ok = true, next_ok = true;
    bool verdict = true;
};

WindowCertificate verify_window(const std::vector<double>& before, const WorkingSet& after_ws,
                                const WindowPlan& p, const ApplyResult& a, const SeparationParams& prm);

struct SeparationCheck {
    bool ok = true;
    double worst_ratio = 0.0;  // min over checked pairs of |l - l'| / (C e^{-nu max})
    double l1 = 0.0, l2 = 0.0;
    double measured_C = 0.0;   // min |l - l'| e^{nu max}
    std::size_t pairs = 0;
};
// Distinct classes with equal lengths count as a zero gap.
SeparationCheck separation_check(std::vector<double> lengths, double nu, double C, bool all_pairs = true);

struct SeparationCertificate {
    SeparationParams params;
    std::vector<WindowCertificate> windows;
    SeparationCheck spectrum_check;
    std::size_t working_set = 0;
    bool global_verdict = true;
    // set when a window aborted; windows holds the ones completed before it
    bool aborted = false;
    ErrorKind abort_kind = ErrorKind::Validation;
    std::string abort_message;
};

struct RunResult {
    SeparationParams params;
    ConformalMetric metric;
    SeparationCertificate certificate;
    std::vector<std::string> words;
    std::vector<double> base_lengths, final_lengths;
    std::vector<std::vector<SafePoint>> safe_points;  // per window
};

// Smallest T0 on the grid for which every window class has a safe point under g0.
double select_T0(const SeparationParams& prm);
// Full pipeline.  With `replay`, bumps come from that metric instead of safe-point
// placement and calibration; the certificate must then match the original run.
// Errors inside the window loop end the run with a partial, aborted certificate;
// validation of the inputs still throws.
RunResult run(SeparationParams prm, const ConformalMetric* replay = nullptr);

}  // namespace lsep

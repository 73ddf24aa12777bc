#pragma once

#include <complex>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "lsep/hyperbolic.hpp"

namespace lsep {

// Letters 1..4 are the generators a, b, c, d; negative letters are inverses.
using Word = std::vector<int>;

struct MoebiusElement {
    Mat2 m;
    Word word;
};

Word inverse_word(const Word& w);
Word free_reduce(const Word& w);
// Free and cyclic reduction, then the smallest string over cyclic shifts of w and w^{-1}.
Word canonical_word(const Word& w);
std::string word_string(const Word& w);  // a b c d, inverses A B C D
Word parse_word(const std::string& s);

// Generators a, b, c, d of the regular-octagon genus-2 group with [a,b][c,d] = 1.
std::vector<MoebiusElement> bolza_group();
MoebiusElement multiply(const MoebiusElement& x, const MoebiusElement& y);
MoebiusElement evaluate(const std::vector<MoebiusElement>& gens, const Word& w);

double class_length(const Mat2& m);
inline double class_length(const MoebiusElement& c) { return class_length(c.m); }
// Ideal fixed points in the disk model: {repelling, attracting}.
std::pair<std::complex<double>, std::complex<double>> axis_of(const Mat2& m);
inline auto axis_of(const MoebiusElement& c) { return axis_of(c.m); }
// Unit normal n of the axis in the hyperboloid model (<X,n> = 0 on the axis).
Vec3 axis_normal(const Mat2& m);
// Image of the origin, computed from the matrix entries directly.
Vec3 orbit_point(const Mat2& m);

inline double systole() { return 2.0 * std::acosh(1.0 + std::sqrt(2.0)); }
inline double injectivity_radius() { return 0.5 * systole(); }
// Circumradius of the regular octagon: cosh R = (1 + sqrt 2)^2.
inline double octagon_circumradius() { return std::acosh((1.0 + std::sqrt(2.0)) * (1.0 + std::sqrt(2.0))); }

// A group element together with its hyperboloid action.
struct Translate {
    Mat2 m;
    Mat3 L;
    Word word;  // generator word, free reduced
};

// Dirichlet domain at the origin together with the side pairings.
class Surface {
public:
    Surface();

    const std::vector<MoebiusElement>& generators() const { return gens_; }
    // Side pairings g0..g3 followed by their inverses.
    const std::vector<Translate>& side_pairings() const { return sides_; }
    // Octagon vertices in counter-clockwise order.
    const std::vector<Vec3>& vertices() const { return verts_; }
    // Elements t with d(o, t o) <= 2 R (tiles touching the closed octagon).
    const std::vector<Translate>& neighbors() const { return nbrs_; }

    // Moves X into the closed octagon; returns the image and the element applied.
    std::pair<Vec3, Mat3> reduce(Vec3 X) const;
    bool in_octagon(Vec3 X, double tol = 1e-12) const;
    // Every element with d(o, g o) <= radius.
    std::vector<Translate> ball(double radius, std::size_t budget = 5'000'000) const;

private:
    std::vector<MoebiusElement> gens_;
    std::vector<Translate> sides_;
    std::vector<Vec3> centers_;  // side_pairings()[k].L * o
    std::vector<Vec3> verts_;
    std::vector<Translate> nbrs_;
};

const Surface& bolza_surface();

struct ConjugacyClass {
    // Lift whose axis passes closest to the origin; rep.m equals the product of rep.word.
    MoebiusElement rep;
    std::string word;  // canonical label
    double trace_abs = 0.0;
    double base_length = 0.0;
    bool primitive = true;
    int power = 1;        // c = p^power
    int root = -1;        // index of the primitive p in the spectrum (self if primitive)
    Vec3 axis_n;          // unit normal of rep's axis
    double axis_dist = 0; // distance from the origin to rep's axis
};

struct BaseSpectrum {
    double cutoff_T = 0.0;
    std::vector<ConjugacyClass> classes;
    double counting_ratio = 0.0;
    std::size_t nodes = 0;  // group elements visited
};

struct EnumerateOptions {
    std::size_t node_budget = 5'000'000;
    int threads = 1;
};

BaseSpectrum enumerate_classes(const std::vector<MoebiusElement>& generators, double cutoff_T,
                               const EnumerateOptions& opt = {});
double counting_ratio(const BaseSpectrum& s);

}  // namespace lsep

#pragma once

#include "tstkit/content.hpp"
#include "tstkit/fit.hpp"
#include "tstkit/geometry.hpp"
#include "tstkit/nets.hpp"

#include <optional>
#include <vector>

// Flatness statistics: sup-norm beta, content beta^{d,p}, bilateral
// vartheta, and the affine-approximation Omega numbers.

namespace tst {

enum class BetaKind { Inf, ContentP, Bilateral, Omega };

struct BetaResult {
    double value = 0.0;
    AffinePlane plane;
    Ball ball;
    BetaKind kind = BetaKind::Inf;
    double p = 0.0;  // exponent for ContentP, otherwise unused
};

// p(d): the admissible exponent bound (2d/(d-2) above dimension two).
double p_limit(int d);

// (2/diam B) * sup_{y in E∩B} dist(y,L); without L the infimum over planes
// through the minimal-width slab fit.
BetaResult beta_inf(const PointCloud& E, const Ball& B, int d,
                    const AffinePlane* L = nullptr);
BetaResult beta_inf_scoped(const PointCloud& E, const std::vector<int>& scope, const Ball& B,
                           int d, const AffinePlane* L = nullptr);

// Content beta: ((1/r_B^d) int_0^1 H^d_inf({x in B∩E : dist(x,L) > t r_B})
// t^{p-1} dt)^{1/p}. Distances saturate at r_B. Without L, minimized over
// planes (SVD of a thinned net, candidate subsets on small inputs, then
// derivative-free descent).
BetaResult beta_content(const PointCloud& E, const Ball& B, int d, double p,
                        const CubeTree& tree, const AffinePlane* L = nullptr);
BetaResult beta_content_scoped(const PointCloud& E, const std::vector<int>& scope, const Ball& B,
                               int d, double p, const CubeTree& tree,
                               const AffinePlane* L = nullptr);

// Bilateral flatness: inf over planes of d_B(E, L) with the plane side
// sampled at the cloud resolution.
BetaResult vartheta(const PointCloud& E, const Ball& B, int d);
BetaResult vartheta_scoped(const PointCloud& E, const std::vector<int>& scope, const Ball& B,
                           int d);
// d_B(E, L) for a fixed plane (used by profiles and reports).
double vartheta_at(const PointCloud& E, const std::vector<int>& scope, const Ball& B,
                   const AffinePlane& L, double delta);

// Omega numbers: inf over affine maps A of (avg over the grid of
// |(f - A)/r|^p)^{1/p}, r = half the sidelength of the grid's bounding cube.
// Exact least squares at p = 2, iteratively reweighted otherwise.
double omega_lp(const std::vector<Vec>& xs, const std::vector<Vec>& ys, double p);

// Indices of cloud points inside B.
std::vector<int> points_in_ball(const PointCloud& E, const Ball& B);

// Greedy (index-order) maximal `spacing`-separated subset of the scope.
std::vector<int> thin_scope(const PointCloud& E, const std::vector<int>& scope, double spacing);

}  // namespace tst

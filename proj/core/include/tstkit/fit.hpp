#pragma once

#include "tstkit/geometry.hpp"

#include <functional>
#include <vector>

// Subspace fitting: least-squares (SVD) planes and the minimal sup-distance
// slab realizing the infimum behind the beta numbers.

namespace tst {

struct SlabFit {
    AffinePlane plane;
    double width = 0.0;  // 2 * sup distance to the plane
};

// Centroid + top-d right singular vectors. Weights are optional.
AffinePlane fit_plane_pca(const std::vector<Vec>& pts, int d);

// Minimal-width slab: plane achieving (within ~1e-6 * diam) the smallest
// sup distance. SVD initialization, candidate planes through point subsets
// for small inputs, then derivative-free descent over the direction chart.
// Ties within 1e-9 resolve to the earliest candidate in enumeration order.
SlabFit fit_plane_linf(const std::vector<Vec>& pts, int d);

// Width (2 * sup dist) of the best slab with the given direction subspace;
// the offset is optimized exactly through the minimum enclosing ball of the
// projections onto the orthogonal complement.
double slab_width_for_direction(const std::vector<Vec>& pts, const Mat& frame,
                                Vec* center_out = nullptr);

// Direction candidates spanned by (d+1)-point subsets, used both by the
// optimizer on small inputs and by test oracles.
std::vector<Mat> subset_direction_candidates(const std::vector<Vec>& pts, int d,
                                             int max_subsets = 25000);

// Generic Nelder-Mead minimizer over R^m. Deterministic; returns the best
// point found. `scale` sets the initial simplex edge length.
Vec nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0, double scale,
                int max_evals = 400, double ftol = 1e-12);

// Orthonormal frame near `base` tilted by the chart parameters T (flattened
// (n-d) x d matrix): span(base + complement * T), re-orthonormalized.
Mat tilt_frame(const Mat& base_frame, const Mat& complement, const Vec& params);

}  // namespace tst

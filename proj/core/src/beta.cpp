#include "tstkit/beta.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

namespace tst {

double p_limit(int d) {
    if (d > 2) return 2.0 * d / (d - 2.0);
    return std::numeric_limits<double>::infinity();
}

std::vector<int> points_in_ball(const PointCloud& E, const Ball& B) {
    std::vector<int> out;
    for (int i = 0; i < E.size(); ++i)
        if (B.contains(E[i])) out.push_back(i);
    return out;
}

std::vector<int> thin_scope(const PointCloud& E, const std::vector<int>& scope, double spacing) {
    std::vector<int> out;
    for (int i : scope) {
        bool ok = true;
        for (int j : out) {
            if ((E[i] - E[j]).norm() < spacing) {
                ok = false;
                break;
            }
        }
        if (ok) out.push_back(i);
    }
    return out;
}

BetaResult beta_inf_scoped(const PointCloud& E, const std::vector<int>& scope, const Ball& B,
                           int d, const AffinePlane* L) {
    if (scope.empty()) throw std::invalid_argument("beta_inf: empty intersection with the ball");
    BetaResult r;
    r.kind = BetaKind::Inf;
    r.ball = B;
    if (L) {
        if (L->ambient_dim() != E.ambient_dim)
            throw std::invalid_argument("beta_inf: plane dimension mismatch");
        double sup = 0.0;
        for (int i : scope) sup = std::max(sup, L->distance(E[i]));
        r.value = sup / B.radius;
        r.plane = *L;
        return r;
    }
    std::vector<Vec> pts;
    pts.reserve(scope.size());
    for (int i : scope) pts.push_back(E[i]);
    if (pts.size() <= static_cast<size_t>(d)) {
        // Too few points to pin a slab: any plane through them has width 0.
        SlabFit fit = fit_plane_linf(pts, d);
        r.value = 0.0;
        r.plane = fit.plane;
        return r;
    }
    SlabFit fit = fit_plane_linf(pts, d);
    r.value = fit.width / (2.0 * B.radius);
    r.plane = fit.plane;
    return r;
}

BetaResult beta_inf(const PointCloud& E, const Ball& B, int d, const AffinePlane* L) {
    return beta_inf_scoped(E, points_in_ball(E, B), B, d, L);
}

namespace {

// Shared plane-search scaffold: candidate frames+offsets, then Nelder-Mead
// over the (d+1)(n-d) chart (direction tilt + normal offset).
struct PlaneSearch {
    const PointCloud& E;
    const std::vector<int>& scope;
    const Ball& B;
    int d;
    mutable AffinePlane slab_plane;  // sup-norm-optimal plane, set by candidates()

    std::vector<AffinePlane> candidates() const {
        std::vector<AffinePlane> cands;
        std::vector<Vec> pts;
        pts.reserve(scope.size());
        for (int i : scope) pts.push_back(E[i]);

        // Net-thinned SVD plane: uniform net weighting removes sampling-density
        // bias from the least-squares initializer.
        std::vector<int> net = thin_scope(E, scope, B.radius / 32.0);
        std::vector<Vec> netpts;
        netpts.reserve(net.size());
        for (int i : net) netpts.push_back(E[i]);
        if (static_cast<int>(netpts.size()) > d)
            cands.push_back(fit_plane_pca(netpts, d));
        cands.push_back(fit_plane_pca(pts, d));

        SlabFit slab = fit_plane_linf(pts, d);
        slab_plane = slab.plane;
        cands.push_back(slab.plane);

        if (pts.size() <= 50) {
            Vec centroid = Vec::Zero(E.ambient_dim);
            for (const Vec& p : pts) centroid += p;
            centroid /= double(pts.size());
            for (const Mat& fr : subset_direction_candidates(pts, d))
                cands.push_back(AffinePlane(centroid, fr));
        }
        return cands;
    }

    AffinePlane refine(const AffinePlane& start,
                       const std::function<double(const AffinePlane&)>& objective,
                       int max_evals) const {
        const int n = E.ambient_dim;
        const int q = n - d;
        Mat base = start.frame();
        Mat comp = start.complement_frame();
        Vec b0 = start.base();
        auto plane_of = [&](const Vec& params) {
            Mat fr = tilt_frame(base, comp, params.head(d * q));
            Vec offset = Vec::Zero(n);
            for (int i = 0; i < q; ++i) offset += params(d * q + i) * comp.col(i);
            return AffinePlane(b0 + offset, fr);
        };
        auto f = [&](const Vec& params) { return objective(plane_of(params)); };
        Vec x0 = Vec::Zero(d * q + q);
        // Chart scale: modest tilt, offsets on the order of the ball radius.
        Vec best = nelder_mead(
            [&](const Vec& prm) {
                Vec scaled = prm;
                for (int i = 0; i < d * q; ++i) scaled(i) = prm(i) * 0.25;
                for (int i = 0; i < q; ++i) scaled(d * q + i) = prm(d * q + i) * 0.25 * B.radius;
                return f(scaled);
            },
            x0, 1.0, max_evals, 1e-11);
        Vec scaled = best;
        for (int i = 0; i < d * q; ++i) scaled(i) = best(i) * 0.25;
        for (int i = 0; i < q; ++i) scaled(d * q + i) = best(d * q + i) * 0.25 * B.radius;
        return plane_of(scaled);
    }
};

}  // namespace

BetaResult beta_content_scoped(const PointCloud& E, const std::vector<int>& scope, const Ball& B,
                               int d, double p, const CubeTree& tree, const AffinePlane* L) {
    if (scope.empty())
        throw std::invalid_argument("beta_content: empty intersection with the ball");
    if (!(p >= 1.0) || p >= p_limit(d))
        throw std::invalid_argument("beta_content: p out of range [1, p(d))");

    ChoquetEngine engine(scope, d, tree, std::max(E.resolution, 1e-12));
    const auto& sc = engine.scope();
    auto value_at = [&](const AffinePlane& plane) {
        std::vector<double> vals(sc.size());
        for (size_t i = 0; i < sc.size(); ++i)
            vals[i] = std::min(plane.distance(E[sc[i]]) / B.radius, 1.0);
        double integral = engine.integral(vals, p);
        return std::pow(integral / std::pow(B.radius, d), 1.0 / p);
    };

    BetaResult r;
    r.kind = BetaKind::ContentP;
    r.ball = B;
    r.p = p;
    if (L) {
        if (L->ambient_dim() != E.ambient_dim)
            throw std::invalid_argument("beta_content: plane dimension mismatch");
        r.value = value_at(*L);
        r.plane = *L;
        return r;
    }

    PlaneSearch search{E, scope, B, d};

    // Large scopes get a thinned engine for the search; the returned value is
    // always the exact evaluation at the chosen plane.
    std::optional<ChoquetEngine> search_engine;
    std::vector<int> thin;
    if (sc.size() > 160) {
        double spacing = B.radius / 48.0;
        thin = thin_scope(E, scope, spacing);
        while (thin.size() > 160) {
            spacing *= 1.6;
            thin = thin_scope(E, scope, spacing);
        }
        if (thin.size() < sc.size())
            search_engine.emplace(thin, d, tree, std::max(E.resolution, 1e-12));
    }
    auto search_value_at = [&](const AffinePlane& plane) {
        if (!search_engine) return value_at(plane);
        const auto& tsc = search_engine->scope();
        std::vector<double> vals(tsc.size());
        for (size_t i = 0; i < tsc.size(); ++i)
            vals[i] = std::min(plane.distance(E[tsc[i]]) / B.radius, 1.0);
        return std::pow(search_engine->integral(vals, p) / std::pow(B.radius, d), 1.0 / p);
    };

    std::vector<AffinePlane> cands = search.candidates();
    size_t best = 0;
    double bestv = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < cands.size(); ++i) {
        double v = search_value_at(cands[i]);
        if (v < bestv - 1e-12) {
            bestv = v;
            best = i;
        }
    }
    AffinePlane refined =
        search.refine(cands[best], [&](const AffinePlane& pl) { return search_value_at(pl); },
                      120);
    // Final choice always by the exact objective; the slab plane stays in the
    // running so the sup-norm comparison bounds hold by construction.
    r.value = value_at(refined);
    r.plane = refined;
    for (const AffinePlane* pl : {&cands[best], &search.slab_plane}) {
        double v = value_at(*pl);
        if (v < r.value) {
            r.value = v;
            r.plane = *pl;
        }
    }
    return r;
}

BetaResult beta_content(const PointCloud& E, const Ball& B, int d, double p, const CubeTree& tree,
                        const AffinePlane* L) {
    return beta_content_scoped(E, points_in_ball(E, B), B, d, p, tree, L);
}

namespace {

double vartheta_eval(const PointCloud& E, const std::vector<int>& scope, const Ball& B,
                     const AffinePlane& L, double delta, const GridIndex& idx) {
    if (L.distance(B.center) >= B.radius) {
        // Plane misses the ball: the set side alone cannot cap the distance,
        // treat as maximally far.
        return 2.0 + L.distance(B.center) / B.radius;
    }
    double supE = 0.0;
    for (int i : scope) supE = std::max(supE, L.distance(E[i]));
    double supL = 0.0;
    for (const Vec& g : sample_plane_in_ball(L, B, delta))
        supL = std::max(supL, idx.nearest_dist(g));
    return std::max(supE, supL) / B.radius;
}

}  // namespace

double vartheta_at(const PointCloud& E, const std::vector<int>& scope, const Ball& B,
                   const AffinePlane& L, double delta) {
    if (scope.empty()) throw std::invalid_argument("vartheta: empty intersection with the ball");
    GridIndex idx(E.points, std::max(delta, 1e-12));
    return vartheta_eval(E, scope, B, L, delta, idx);
}

BetaResult vartheta_scoped(const PointCloud& E, const std::vector<int>& scope, const Ball& B,
                           int d) {
    if (scope.empty()) throw std::invalid_argument("vartheta: empty intersection with the ball");
    // Plane-side sampling never needs to resolve below radius/256.
    const double delta = std::max({E.resolution, 1e-12, B.radius / 256.0});
    GridIndex idx(E.points, std::max(delta, 1e-12));
    PlaneSearch search{E, scope, B, d};
    std::vector<AffinePlane> cands = search.candidates();

    // Coarser plane sampling during the search keeps the objective cheap.
    double coarse = std::max(std::min(3.0 * delta, B.radius / 8.0), B.radius / 256.0);
    auto coarse_obj = [&](const AffinePlane& pl) {
        return vartheta_eval(E, scope, B, pl, coarse, idx);
    };

    size_t best = 0;
    double bestv = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < cands.size(); ++i) {
        double v = coarse_obj(cands[i]);
        if (v < bestv - 1e-12) {
            bestv = v;
            best = i;
        }
    }
    AffinePlane refined = search.refine(cands[best], coarse_obj, 240);

    BetaResult r;
    r.kind = BetaKind::Bilateral;
    r.ball = B;
    r.value = vartheta_eval(E, scope, B, refined, delta, idx);
    r.plane = refined;
    for (const AffinePlane* pl : {&cands[best], &search.slab_plane}) {
        double v = vartheta_eval(E, scope, B, *pl, delta, idx);
        if (v < r.value) {
            r.value = v;
            r.plane = *pl;
        }
    }
    return r;
}

BetaResult vartheta(const PointCloud& E, const Ball& B, int d) {
    return vartheta_scoped(E, points_in_ball(E, B), B, d);
}

double omega_lp(const std::vector<Vec>& xs, const std::vector<Vec>& ys, double p) {
    if (xs.empty() || xs.size() != ys.size())
        throw std::invalid_argument("omega_lp: empty or mismatched grid");
    if (!(p >= 1.0)) throw std::invalid_argument("omega_lp: p must be >= 1");
    const int d = static_cast<int>(xs[0].size());
    const int m = static_cast<int>(ys[0].size());
    const int N = static_cast<int>(xs.size());

    // r = half the sidelength of the bounding cube of the grid.
    Vec lo = xs[0], hi = xs[0];
    for (const Vec& x : xs) {
        lo = lo.cwiseMin(x);
        hi = hi.cwiseMax(x);
    }
    double r = 0.5 * (hi - lo).maxCoeff();
    if (!(r > 0.0)) r = 1.0;  // single point: any affine map fits exactly

    // Design matrix [1, x]; affine map per output coordinate.
    Mat X(N, d + 1);
    for (int i = 0; i < N; ++i) {
        X(i, 0) = 1.0;
        X.row(i).tail(d) = xs[static_cast<size_t>(i)].transpose();
    }
    Mat Y(N, m);
    for (int i = 0; i < N; ++i) Y.row(i) = ys[static_cast<size_t>(i)].transpose();

    auto weighted_fit = [&](const Vec& w) {
        Mat Xw = X;
        Mat Yw = Y;
        for (int i = 0; i < N; ++i) {
            double s = std::sqrt(w(i));
            Xw.row(i) *= s;
            Yw.row(i) *= s;
        }
        return (Xw.transpose() * Xw)
            .ldlt()
            .solve(Xw.transpose() * Yw)
            .eval();  // (d+1) x m coefficients
    };

    Vec w = Vec::Ones(N);
    Mat coef = weighted_fit(w);
    if (std::abs(p - 2.0) > 1e-12) {
        for (int it = 0; it < 60; ++it) {
            Mat R = Y - X * coef;
            Vec wn(N);
            for (int i = 0; i < N; ++i) {
                double rn = R.row(i).norm();
                wn(i) = std::pow(std::max(rn, 1e-12), p - 2.0);
            }
            Mat next = weighted_fit(wn);
            if ((next - coef).cwiseAbs().maxCoeff() < 1e-13) {
                coef = next;
                break;
            }
            coef = next;
        }
    }
    Mat R = Y - X * coef;
    double acc = 0.0;
    for (int i = 0; i < N; ++i) acc += std::pow(R.row(i).norm() / r, p);
    return std::pow(acc / N, 1.0 / p);
}

}  // namespace tst

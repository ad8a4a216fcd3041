#include "tstkit/fit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace tst {

AffinePlane fit_plane_pca(const std::vector<Vec>& pts, int d) {
    if (pts.empty()) throw std::invalid_argument("fit_plane_pca: empty input");
    const int n = static_cast<int>(pts[0].size());
    if (!(d > 0 && d < n)) throw std::invalid_argument("fit_plane_pca: requires 0 < d < n");
    Vec c = Vec::Zero(n);
    for (const Vec& p : pts) c += p;
    c /= double(pts.size());
    Mat A(n, static_cast<int>(pts.size()));
    for (size_t i = 0; i < pts.size(); ++i) A.col(static_cast<int>(i)) = pts[i] - c;
    Eigen::JacobiSVD<Mat> svd(A, Eigen::ComputeThinU);
    Mat U = svd.matrixU();
    if (U.cols() < d) {
        // Degenerate spread: pad with arbitrary orthogonal directions.
        Mat full = Mat::Identity(n, n);
        Mat frame(n, d);
        int have = static_cast<int>(U.cols());
        frame.leftCols(have) = U;
        int k = have;
        for (int j = 0; j < n && k < d; ++j) {
            Vec v = full.col(j);
            v -= frame.leftCols(k) * (frame.leftCols(k).transpose() * v);
            if (v.norm() > 1e-9) frame.col(k++) = v.normalized();
        }
        return AffinePlane(c, frame);
    }
    return AffinePlane(c, U.leftCols(d));
}

double slab_width_for_direction(const std::vector<Vec>& pts, const Mat& frame, Vec* center_out) {
    const int n = static_cast<int>(frame.rows());
    const int q = n - static_cast<int>(frame.cols());
    // Project onto the orthogonal complement; the optimal offset is the
    // Chebyshev center of the projections, given by the minimum enclosing ball.
    Eigen::HouseholderQR<Mat> qr(frame);
    Mat Q = qr.householderQ();
    Mat W = Q.rightCols(q);  // n x q complement basis
    if (q == 1) {
        // Codimension one: the enclosing "ball" is a scalar interval.
        Vec w = W.col(0);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (const Vec& p : pts) {
            double t = w.dot(p);
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        if (center_out) *center_out = 0.5 * (lo + hi) * w;
        return hi - lo;
    }
    std::vector<Vec> proj(pts.size());
    for (size_t i = 0; i < pts.size(); ++i) proj[i] = W.transpose() * pts[i];
    Ball meb = minimum_enclosing_ball(proj);
    if (center_out) *center_out = W * meb.center;
    return 2.0 * meb.radius;
}

std::vector<Mat> subset_direction_candidates(const std::vector<Vec>& pts, int d, int max_subsets) {
    std::vector<Mat> out;
    const int m = static_cast<int>(pts.size());
    if (m < d + 1) return out;
    const int n = static_cast<int>(pts[0].size());
    std::vector<int> idx(static_cast<size_t>(d) + 1);
    std::function<void(int, int)> rec = [&](int start, int k) {
        if (static_cast<int>(out.size()) >= max_subsets) return;
        if (k == d + 1) {
            Mat A(n, d);
            for (int j = 1; j <= d; ++j)
                A.col(j - 1) = pts[static_cast<size_t>(idx[static_cast<size_t>(j)])] -
                               pts[static_cast<size_t>(idx[0])];
            Eigen::HouseholderQR<Mat> qr(A);
            Mat Q = qr.householderQ() * Mat::Identity(n, d);
            Mat R = Q.transpose() * A;
            bool ok = true;
            for (int j = 0; j < d; ++j)
                if (std::abs(R(j, j)) < 1e-12) ok = false;
            if (ok) out.push_back(Q);
            return;
        }
        for (int i = start; i < m; ++i) {
            idx[static_cast<size_t>(k)] = i;
            rec(i + 1, k + 1);
        }
    };
    rec(0, 0);
    return out;
}

Mat tilt_frame(const Mat& base_frame, const Mat& complement, const Vec& params) {
    const int n = static_cast<int>(base_frame.rows());
    const int d = static_cast<int>(base_frame.cols());
    const int q = static_cast<int>(complement.cols());
    Mat T(q, d);
    for (int j = 0; j < d; ++j)
        for (int i = 0; i < q; ++i) T(i, j) = params(j * q + i);
    Mat raw = base_frame + complement * T;
    Eigen::HouseholderQR<Mat> qr(raw);
    return qr.householderQ() * Mat::Identity(n, d);
}

Vec nelder_mead(const std::function<double(const Vec&)>& f, const Vec& x0, double scale,
                int max_evals, double ftol) {
    const int m = static_cast<int>(x0.size());
    if (m == 0) return x0;
    std::vector<Vec> simplex;
    std::vector<double> fv;
    simplex.push_back(x0);
    fv.push_back(f(x0));
    for (int i = 0; i < m; ++i) {
        Vec x = x0;
        x(i) += scale;
        simplex.push_back(x);
        fv.push_back(f(x));
    }
    int evals = m + 1;
    auto order = [&]() {
        std::vector<size_t> perm(simplex.size());
        for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
        std::sort(perm.begin(), perm.end(), [&](size_t a, size_t b) { return fv[a] < fv[b]; });
        std::vector<Vec> s2;
        std::vector<double> f2;
        for (size_t i : perm) {
            s2.push_back(simplex[i]);
            f2.push_back(fv[i]);
        }
        simplex.swap(s2);
        fv.swap(f2);
    };
    order();
    while (evals < max_evals) {
        if (std::abs(fv.back() - fv.front()) <= ftol * (std::abs(fv.front()) + ftol)) break;
        Vec centroid = Vec::Zero(m);
        for (int i = 0; i < m; ++i) centroid += simplex[static_cast<size_t>(i)];
        centroid /= double(m);
        Vec xr = centroid + (centroid - simplex.back());
        double fr = f(xr);
        ++evals;
        if (fr < fv.front()) {
            Vec xe = centroid + 2.0 * (centroid - simplex.back());
            double fe = f(xe);
            ++evals;
            if (fe < fr) {
                simplex.back() = xe;
                fv.back() = fe;
            } else {
                simplex.back() = xr;
                fv.back() = fr;
            }
        } else if (fr < fv[fv.size() - 2]) {
            simplex.back() = xr;
            fv.back() = fr;
        } else {
            Vec xc = centroid + 0.5 * (simplex.back() - centroid);
            double fc = f(xc);
            ++evals;
            if (fc < fv.back()) {
                simplex.back() = xc;
                fv.back() = fc;
            } else {
                for (size_t i = 1; i < simplex.size(); ++i) {
                    simplex[i] = simplex[0] + 0.5 * (simplex[i] - simplex[0]);
                    fv[i] = f(simplex[i]);
                    ++evals;
                }
            }
        }
        order();
    }
    return simplex.front();
}

SlabFit fit_plane_linf(const std::vector<Vec>& pts, int d) {
    if (pts.empty()) throw std::invalid_argument("fit_plane_linf: empty input");
    const int n = static_cast<int>(pts[0].size());
    if (!(d > 0 && d < n)) throw std::invalid_argument("fit_plane_linf: requires 0 < d < n");

    double diam = diameter_of(pts);
    if (pts.size() <= static_cast<size_t>(d) || diam == 0.0) {
        AffinePlane p = fit_plane_pca(pts, d);
        Vec center;
        double w = slab_width_for_direction(pts, p.frame(), &center);
        Vec basept = center + p.frame() * (p.frame().transpose() * pts[0]);
        return SlabFit{AffinePlane(basept, p.frame()), w};
    }

    struct Candidate {
        Mat frame;
        double width;
        Vec offset;
    };
    std::vector<Candidate> cands;
    auto add_candidate = [&](const Mat& frame) {
        Vec center;
        double w = slab_width_for_direction(pts, frame, &center);
        cands.push_back({frame, w, center});
    };

    add_candidate(fit_plane_pca(pts, d).frame());
    if (pts.size() <= 80) {
        for (const Mat& fr : subset_direction_candidates(pts, d)) add_candidate(fr);
    }

    // Earliest candidate wins ties within 1e-9.
    size_t best = 0;
    for (size_t i = 1; i < cands.size(); ++i)
        if (cands[i].width < cands[best].width - 1e-9) best = i;

    if (cands[best].width <= 1e-12 * diam) {
        // Already flat to working precision; skip the refinement.
        Vec c = Vec::Zero(n);
        for (const Vec& p : pts) c += p;
        c /= double(pts.size());
        const Mat& fr = cands[best].frame;
        Vec basept = cands[best].offset + fr * (fr.transpose() * c);
        return SlabFit{AffinePlane(basept, fr), cands[best].width};
    }

    Mat base = cands[best].frame;
    Eigen::HouseholderQR<Mat> qr(base);
    Mat Q = qr.householderQ();
    Mat comp = Q.rightCols(n - d);
    auto objective = [&](const Vec& params) {
        return slab_width_for_direction(pts, tilt_frame(base, comp, params), nullptr);
    };
    Vec refined = nelder_mead(objective, Vec::Zero(d * (n - d)), 0.2, 160, 1e-14);
    Mat frame = tilt_frame(base, comp, refined);
    Vec center;
    double w = slab_width_for_direction(pts, frame, &center);
    if (w > cands[best].width - 1e-12 * (1.0 + cands[best].width)) {
        // Keep the candidate when the refinement is not a strict improvement.
        if (w >= cands[best].width) {
            frame = cands[best].frame;
            center = cands[best].offset;
            w = cands[best].width;
        }
    }

    // Base point: offset center plus the tangential centroid, so the returned
    // plane passes through the data slab.
    Vec c = Vec::Zero(n);
    for (const Vec& p : pts) c += p;
    c /= double(pts.size());
    Vec basept = center + frame * (frame.transpose() * c);
    return SlabFit{AffinePlane(basept, frame), w};
}

}  // namespace tst

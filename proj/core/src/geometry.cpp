#include "tstkit/geometry.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <limits>
#include <numeric>

namespace tst {

namespace {
constexpr double kOrthoTol = 1e-12;
}

AffinePlane::AffinePlane(Vec base, Mat frame) : base_(std::move(base)), frame_(std::move(frame)) {
    const int n = static_cast<int>(base_.size());
    const int d = static_cast<int>(frame_.cols());
    if (frame_.rows() != n) throw std::invalid_argument("AffinePlane: frame/base dimension mismatch");
    if (d <= 0 || d >= n) throw std::invalid_argument("AffinePlane: requires 0 < d < n");
    Mat gram = frame_.transpose() * frame_ - Mat::Identity(d, d);
    if (gram.cwiseAbs().maxCoeff() > 1e-9) {
        // Re-orthonormalize; reject only if the columns are rank deficient.
        Eigen::HouseholderQR<Mat> qr(frame_);
        Mat q = qr.householderQ() * Mat::Identity(n, d);
        Mat r = q.transpose() * frame_;
        for (int i = 0; i < d; ++i) {
            if (std::abs(r(i, i)) < kOrthoTol)
                throw std::invalid_argument("AffinePlane: frame columns are rank deficient");
        }
        frame_ = q;
    }
}

Vec AffinePlane::project(const Vec& x) const {
    if (x.size() != base_.size()) throw std::invalid_argument("AffinePlane::project: dimension mismatch");
    Vec v = x - base_;
    return base_ + frame_ * (frame_.transpose() * v);
}

Vec AffinePlane::perp_component(const Vec& x) const {
    if (x.size() != base_.size()) throw std::invalid_argument("AffinePlane: dimension mismatch");
    Vec v = x - base_;
    return v - frame_ * (frame_.transpose() * v);
}

Mat AffinePlane::complement_frame() const {
    const int n = ambient_dim();
    const int d = dim();
    Eigen::HouseholderQR<Mat> qr(frame_);
    Mat q = qr.householderQ();
    return q.rightCols(n - d);
}

Cylinder::Cylinder(Vec c, AffinePlane p, double r)
    : center(std::move(c)), plane(std::move(p)), radius(r) {
    if (!(radius > 0.0)) throw std::invalid_argument("Cylinder: radius must be positive");
    if (plane.distance(center) > 1e-9 * radius)
        throw std::invalid_argument("Cylinder: center must lie on the plane");
}

bool Cylinder::contains(const Vec& x) const {
    Vec z = plane.project(x);
    if ((z - center).norm() > radius) return false;
    return (x - z).norm() <= radius;
}

PointCloud::PointCloud(std::vector<Vec> pts, int n, int d, double delta)
    : points(std::move(pts)), ambient_dim(n), target_dim(d), resolution(delta) {
    if (points.empty()) throw std::invalid_argument("PointCloud: needs at least one point");
    if (!(resolution > 0.0)) throw std::invalid_argument("PointCloud: resolution must be positive");
    if (!(d > 0 && d < n)) throw std::invalid_argument("PointCloud: requires 0 < d < n");
    for (const Vec& p : points) {
        if (p.size() != n) throw std::invalid_argument("PointCloud: point dimension mismatch");
        if (!p.allFinite()) throw std::invalid_argument("PointCloud: non-finite coordinate");
    }
}

double PointCloud::default_resolution(const std::vector<Vec>& pts) {
    if (pts.size() < 2) return 1.0;
    double scale = diameter_of(pts);
    if (scale <= 0.0) return 1.0;
    GridIndex idx(pts, scale / std::max(4.0, std::cbrt(double(pts.size()))));
    double worst = 0.0;
    for (size_t i = 0; i < pts.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        // Nearest other point: search expanding radii around the generic cell size.
        for (double r = scale / std::max(4.0, std::cbrt(double(pts.size()))); r <= 2.0 * scale; r *= 2.0) {
            for (int j : idx.within(pts[i], r)) {
                if (j == static_cast<int>(i)) continue;
                best = std::min(best, (pts[i] - pts[j]).norm());
            }
            if (best < std::numeric_limits<double>::infinity()) break;
        }
        if (best < std::numeric_limits<double>::infinity()) worst = std::max(worst, best);
    }
    return worst > 0.0 ? worst : 1.0;
}

Vec PointCloud::centroid() const {
    Vec c = Vec::Zero(ambient_dim);
    for (const Vec& p : points) c += p;
    return c / double(points.size());
}

double PointCloud::diameter() const { return diameter_of(points); }

Ball PointCloud::bounding_ball() const {
    Vec c = centroid();
    double r = 0.0;
    for (const Vec& p : points) r = std::max(r, (p - c).norm());
    return Ball(c, std::max(r, resolution));
}

double dist_to_plane(const Vec& x, const AffinePlane& P) { return P.distance(x); }

double plane_angle(const AffinePlane& P1, const AffinePlane& P2) {
    if (P1.ambient_dim() != P2.ambient_dim() || P1.dim() != P2.dim())
        throw std::invalid_argument("plane_angle: dimension mismatch");
    // sup over unit y in V1 of dist(y, V2) = largest singular value of (I - U2 U2^T) U1.
    const Mat& U1 = P1.frame();
    const Mat& U2 = P2.frame();
    Mat R = U1 - U2 * (U2.transpose() * U1);
    Eigen::JacobiSVD<Mat> svd(R);
    double s = svd.singularValues()(0);
    return std::min(s, 1.0);
}

namespace {

// sup_{|z| <= rho} |a + M z| for z in R^q. Convex objective: the sup sits on
// the sphere |z| = rho. Exact for q = 1; golden-section refined for q = 2;
// coarse sphere sampling plus refinement otherwise.
double sup_norm_affine_on_ball(const Vec& a, const Mat& M, double rho) {
    const int q = static_cast<int>(M.cols());
    if (rho <= 0.0 || q == 0) return a.norm();
    if (q == 1) {
        Vec m = M.col(0);
        return std::sqrt(std::max((a + rho * m).squaredNorm(), (a - rho * m).squaredNorm()));
    }
    if (q == 2) {
        auto f = [&](double t) {
            Vec z(2);
            z << std::cos(t), std::sin(t);
            return (a + rho * (M * z)).squaredNorm();
        };
        const int grid = 128;
        double best_t = 0.0, best_v = -1.0;
        for (int i = 0; i < grid; ++i) {
            double t = 2.0 * M_PI * i / grid;
            double v = f(t);
            if (v > best_v) { best_v = v; best_t = t; }
        }
        double lo = best_t - 2.0 * M_PI / grid, hi = best_t + 2.0 * M_PI / grid;
        const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
        double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
        for (int it = 0; it < 80; ++it) {
            if (f(c) > f(d)) { hi = d; } else { lo = c; }
            c = hi - gr * (hi - lo);
            d = lo + gr * (hi - lo);
        }
        best_v = std::max(best_v, std::max(f(lo), f(hi)));
        best_v = std::max(best_v, std::max(f(c), f(d)));
        return std::sqrt(best_v);
    }
    // General case: sampled sphere directions with a few power-iteration style
    // refinements. Only exercised for d > 2.
    double best = a.norm();
    Vec z = Vec::Zero(q);
    for (int axis = 0; axis < q; ++axis) {
        for (double s : {-1.0, 1.0}) {
            z.setZero();
            z(axis) = s;
            Vec cur = z;
            for (int it = 0; it < 50; ++it) {
                Vec g = M.transpose() * (a + rho * (M * cur));
                double gn = g.norm();
                if (gn < 1e-15) break;
                cur = g / gn;
            }
            best = std::max(best, (a + rho * (M * cur)).norm());
        }
    }
    return best;
}

double one_sided_plane_sup(const AffinePlane& from, const AffinePlane& to,
                           const Vec& x, double r) {
    // sup over y in from∩B(x,r) of dist(y, to); 0 when the slice is empty.
    double h = from.distance(x);
    if (h >= r) return 0.0;
    double rho = std::sqrt(std::max(0.0, r * r - h * h));
    Vec c = from.project(x);
    Mat U = from.frame();
    Mat Ut = to.frame();
    // dist(c + U z, to) = |(I - Pi_to)(c + U z - b_to)|
    Vec a = c - to.base();
    a -= Ut * (Ut.transpose() * a);
    Mat M = U - Ut * (Ut.transpose() * U);
    return sup_norm_affine_on_ball(a, M, rho);
}

}  // namespace

double plane_ball_dist(const AffinePlane& P1, const AffinePlane& P2, const Vec& x, double r) {
    if (P1.ambient_dim() != P2.ambient_dim())
        throw std::invalid_argument("plane_ball_dist: dimension mismatch");
    if (!(r > 0.0)) throw std::invalid_argument("plane_ball_dist: radius must be positive");
    double s12 = one_sided_plane_sup(P1, P2, x, r);
    double s21 = one_sided_plane_sup(P2, P1, x, r);
    return std::max(s12, s21) / r;  // (2 / diam B) * sup
}

double set_dist_dB(const std::vector<Vec>& E, const std::vector<Vec>& F, const Ball& B) {
    std::vector<Vec> EB, FB;
    for (const Vec& p : E)
        if (B.contains(p)) EB.push_back(p);
    for (const Vec& p : F)
        if (B.contains(p)) FB.push_back(p);
    if (EB.empty() || FB.empty())
        throw std::invalid_argument("set_dist_dB: empty intersection with the ball");
    double supE = 0.0, supF = 0.0;
    for (const Vec& p : EB) supE = std::max(supE, dist_point_to_set(p, F));
    for (const Vec& p : FB) supF = std::max(supF, dist_point_to_set(p, E));
    return std::max(supE, supF) / B.radius;
}

std::vector<Vec> sample_plane_in_ball(const AffinePlane& L, const Ball& B, double spacing) {
    std::vector<Vec> out;
    double h = L.distance(B.center);
    if (h >= B.radius) return out;
    double rho = std::sqrt(B.radius * B.radius - h * h);
    Vec c = L.project(B.center);
    const int d = L.dim();
    const Mat& U = L.frame();
    if (!(spacing > 0.0)) throw std::invalid_argument("sample_plane_in_ball: spacing must be positive");
    int m = static_cast<int>(std::floor(rho / spacing));
    if (d == 1) {
        for (int i = -m; i <= m; ++i) out.push_back(c + (i * spacing) * U.col(0));
    } else if (d == 2) {
        for (int i = -m; i <= m; ++i)
            for (int j = -m; j <= m; ++j) {
                double u = i * spacing, v = j * spacing;
                if (u * u + v * v > rho * rho) continue;
                out.push_back(c + u * U.col(0) + v * U.col(1));
            }
    } else {
        // d >= 3: recursive lattice
        std::vector<int> coord(d, -m);
        while (true) {
            double r2 = 0.0;
            for (int k = 0; k < d; ++k) r2 += double(coord[k]) * coord[k];
            if (r2 * spacing * spacing <= rho * rho) {
                Vec p = c;
                for (int k = 0; k < d; ++k) p += (coord[k] * spacing) * U.col(k);
                out.push_back(p);
            }
            int k = 0;
            while (k < d && ++coord[k] > m) coord[k++] = -m;
            if (k == d) break;
        }
    }
    if (out.empty()) out.push_back(c);  // slice nonempty but smaller than spacing
    return out;
}

double set_dist_dB(const std::vector<Vec>& E, const AffinePlane& L, const Ball& B, double delta) {
    std::vector<Vec> EB;
    for (const Vec& p : E)
        if (B.contains(p)) EB.push_back(p);
    std::vector<Vec> LB = sample_plane_in_ball(L, B, delta);
    if (EB.empty() || LB.empty())
        throw std::invalid_argument("set_dist_dB: empty intersection with the ball");
    double supE = 0.0;
    for (const Vec& p : EB) supE = std::max(supE, L.distance(p));
    double supL = 0.0;
    for (const Vec& q : LB) supL = std::max(supL, dist_point_to_set(q, E));
    return std::max(supE, supL) / B.radius;
}

double eta(const std::vector<Vec>& X) {
    if (X.size() < 2) throw std::invalid_argument("eta: needs at least two points");
    double diam = diameter_of(X);
    if (diam <= 0.0) throw std::invalid_argument("eta: coincident points (diameter zero)");
    const int n = static_cast<int>(X[0].size());
    double best = std::numeric_limits<double>::infinity();
    for (size_t i = 0; i < X.size(); ++i) {
        // Affine span of the others.
        std::vector<Vec> rest;
        for (size_t j = 0; j < X.size(); ++j)
            if (j != i) rest.push_back(X[j]);
        Vec b = rest[0];
        double dist;
        if (rest.size() == 1) {
            dist = (X[i] - b).norm();
        } else {
            Mat A(n, static_cast<int>(rest.size()) - 1);
            for (size_t j = 1; j < rest.size(); ++j) A.col(static_cast<int>(j) - 1) = rest[j] - b;
            Eigen::CompleteOrthogonalDecomposition<Mat> cod(A);
            Vec v = X[i] - b;
            Vec coeff = cod.solve(v);
            dist = (v - A * coeff).norm();
        }
        best = std::min(best, dist);
    }
    return best / diam;
}

double diameter_of(const std::vector<Vec>& pts) {
    double d2 = 0.0;
    for (size_t i = 0; i < pts.size(); ++i)
        for (size_t j = i + 1; j < pts.size(); ++j)
            d2 = std::max(d2, (pts[i] - pts[j]).squaredNorm());
    return std::sqrt(d2);
}

namespace {

// Circumscribed ball of an affinely independent support set. Solved in
// coordinates relative to S[0] to keep conditioning sane.
Ball ball_of_support(const std::vector<Vec>& S, int ambient) {
    if (S.empty()) return Ball(Vec::Zero(ambient), 1e-300);
    if (S.size() == 1) return Ball{S[0], 1e-300};
    const int n = static_cast<int>(S[0].size());
    Mat B(static_cast<int>(S.size()) - 1, n);
    Vec r2(static_cast<int>(S.size()) - 1);
    for (size_t i = 1; i < S.size(); ++i) {
        Vec d = S[i] - S[0];
        B.row(static_cast<int>(i) - 1) = d.transpose();
        r2(static_cast<int>(i) - 1) = 0.5 * d.squaredNorm();
    }
    Eigen::CompleteOrthogonalDecomposition<Mat> cod(B);
    Vec y = cod.solve(r2);
    Vec c = S[0] + y;
    double rad = 0.0;
    for (const Vec& p : S) rad = std::max(rad, (p - c).norm());
    return Ball{c, std::max(rad, 1e-300)};
}

Ball welzl(std::vector<const Vec*>& pts, size_t limit, std::vector<Vec>& support, int max_support,
           int ambient) {
    if (limit == 0 || static_cast<int>(support.size()) == max_support)
        return ball_of_support(support, ambient);
    Ball b = welzl(pts, limit - 1, support, max_support, ambient);
    const Vec& p = *pts[limit - 1];
    if ((p - b.center).norm() <= b.radius * (1.0 + 1e-12) + 1e-300) return b;
    support.push_back(p);
    Ball b2 = welzl(pts, limit - 1, support, max_support, ambient);
    support.pop_back();
    // Move-to-front keeps the recursion shallow on adversarial orderings.
    auto it = pts.begin() + static_cast<long>(limit - 1);
    const Vec* ptr = *it;
    pts.erase(it);
    pts.insert(pts.begin(), ptr);
    return b2;
}

}  // namespace

Ball minimum_enclosing_ball(const std::vector<Vec>& pts) {
    if (pts.empty()) throw std::invalid_argument("minimum_enclosing_ball: empty input");
    const int n = static_cast<int>(pts[0].size());
    std::vector<const Vec*> ptrs;
    ptrs.reserve(pts.size());
    for (const Vec& p : pts) ptrs.push_back(&p);
    std::vector<Vec> support;
    Ball b = welzl(ptrs, ptrs.size(), support, n + 1, n);
    // One verification sweep; expand if floating point left a point outside.
    double r = b.radius;
    for (const Vec& p : pts) r = std::max(r, (p - b.center).norm());
    return Ball{b.center, std::max(r, 1e-300)};
}

GridIndex::GridIndex(const std::vector<Vec>& pts, double cell) : pts_(&pts), cell_(cell) {
    if (!(cell_ > 0.0)) throw std::invalid_argument("GridIndex: cell size must be positive");
    if (pts.empty()) return;
    const int n = static_cast<int>(pts[0].size());
    origin_ = Vec::Zero(n);
    for (const Vec& p : pts) origin_ = origin_.cwiseMin(p);
    cells_.reserve(pts.size());
    cellmin_.assign(static_cast<size_t>(n), std::numeric_limits<long long>::max());
    cellmax_.assign(static_cast<size_t>(n), std::numeric_limits<long long>::min());
    for (size_t i = 0; i < pts.size(); ++i) {
        cells_.emplace_back(hash_of(pts[i]), static_cast<int>(i));
        for (int a = 0; a < n; ++a) {
            long long c = static_cast<long long>(std::floor((pts[i](a) - origin_(a)) / cell_));
            cellmin_[static_cast<size_t>(a)] = std::min(cellmin_[static_cast<size_t>(a)], c);
            cellmax_[static_cast<size_t>(a)] = std::max(cellmax_[static_cast<size_t>(a)], c);
        }
    }
    std::sort(cells_.begin(), cells_.end());
}

uint64_t GridIndex::hash_coords(const std::vector<long long>& c) const {
    uint64_t h = 1469598103934665603ull;
    for (long long v : c) {
        uint64_t u = static_cast<uint64_t>(v + (1ll << 31));
        h ^= u + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    }
    return h;
}

uint64_t GridIndex::hash_of(const Vec& x) const {
    std::vector<long long> c(static_cast<size_t>(x.size()));
    for (int k = 0; k < x.size(); ++k)
        c[static_cast<size_t>(k)] = static_cast<long long>(std::floor((x(k) - origin_(k)) / cell_));
    return hash_coords(c);
}

void GridIndex::collect_cell(uint64_t h, std::vector<int>& out) const {
    auto lo = std::lower_bound(cells_.begin(), cells_.end(), std::make_pair(h, INT_MIN));
    for (auto it = lo; it != cells_.end() && it->first == h; ++it) out.push_back(it->second);
}

std::vector<int> GridIndex::within(const Vec& x, double radius) const {
    std::vector<int> out;
    if (!pts_ || pts_->empty()) return out;
    const int n = static_cast<int>(x.size());
    std::vector<long long> lo(n), hi(n), cur(n);
    double ncells = 1.0;
    for (int k = 0; k < n; ++k) {
        long long l = static_cast<long long>(std::floor((x(k) - radius - origin_(k)) / cell_));
        long long h = static_cast<long long>(std::floor((x(k) + radius - origin_(k)) / cell_));
        l = std::max(l, cellmin_[static_cast<size_t>(k)]);
        h = std::min(h, cellmax_[static_cast<size_t>(k)]);
        if (l > h) return out;
        lo[static_cast<size_t>(k)] = l;
        hi[static_cast<size_t>(k)] = h;
        cur[static_cast<size_t>(k)] = l;
        ncells *= double(h - l + 1);
    }
    if (ncells > double(pts_->size())) {
        // Query box covers more cells than there are points: scan directly.
        for (size_t i = 0; i < pts_->size(); ++i)
            if ((x - (*pts_)[i]).norm() <= radius) out.push_back(static_cast<int>(i));
        return out;
    }
    std::vector<int> cand;
    while (true) {
        cand.clear();
        collect_cell(hash_coords(cur), cand);
        for (int i : cand) {
            if ((x - (*pts_)[static_cast<size_t>(i)]).norm() <= radius) out.push_back(i);
        }
        int k = 0;
        while (k < n && ++cur[static_cast<size_t>(k)] > hi[static_cast<size_t>(k)]) {
            cur[static_cast<size_t>(k)] = lo[static_cast<size_t>(k)];
            ++k;
        }
        if (k == n) break;
    }
    std::sort(out.begin(), out.end());
    out.erase(std::unique(out.begin(), out.end()), out.end());
    return out;
}

double GridIndex::nearest_dist(const Vec& x) const {
    int i = nearest(x);
    if (i < 0) return std::numeric_limits<double>::infinity();
    return (x - (*pts_)[static_cast<size_t>(i)]).norm();
}

int GridIndex::nearest(const Vec& x) const {
    if (!pts_ || pts_->empty()) return -1;
    for (double r = cell_; ; r *= 2.0) {
        std::vector<int> cand = within(x, r);
        if (!cand.empty()) {
            int best = cand[0];
            double bd = (x - (*pts_)[static_cast<size_t>(best)]).norm();
            for (int i : cand) {
                double d = (x - (*pts_)[static_cast<size_t>(i)]).norm();
                if (d < bd) { bd = d; best = i; }
            }
            return best;
        }
        if (r > 1e12 * cell_) return 0;  // degenerate spread; fall back to scan
    }
}

double dist_point_to_set(const Vec& x, const std::vector<Vec>& S) {
    double best = std::numeric_limits<double>::infinity();
    for (const Vec& p : S) best = std::min(best, (x - p).norm());
    return best;
}

}  // namespace tst

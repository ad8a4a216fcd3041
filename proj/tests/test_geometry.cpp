#include "doctest.h"

#include "tstkit/fit.hpp"
#include "tstkit/geometry.hpp"

#include <cmath>
#include <random>

using namespace tst;

namespace {

Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

Vec v3(double x, double y, double z) {
    Vec v(3);
    v << x, y, z;
    return v;
}

AffinePlane xy_plane() {
    Mat fr(3, 2);
    fr << 1, 0, 0, 1, 0, 0;
    return AffinePlane(Vec::Zero(3), fr);
}

AffinePlane line2(double angle, const Vec& through) {
    Mat fr(2, 1);
    fr << std::cos(angle), std::sin(angle);
    return AffinePlane(through, fr);
}

// Sampled d_{B(0,1)} distance between direction subspaces: sup over unit
// vectors of one plane of the distance to the other, both ways. Independent
// oracle for plane_angle.
double sampled_plane_angle(const AffinePlane& P1, const AffinePlane& P2, int samples = 4000) {
    std::mt19937 rng(7);
    std::normal_distribution<double> g(0.0, 1.0);
    auto one_side = [&](const AffinePlane& A, const AffinePlane& B) {
        AffinePlane B0 = B.through(Vec::Zero(B.ambient_dim()));
        AffinePlane A0 = A.through(Vec::Zero(A.ambient_dim()));
        double sup = 0.0;
        for (int i = 0; i < samples; ++i) {
            Vec t(A0.dim());
            for (int k = 0; k < t.size(); ++k) t(k) = g(rng);
            if (t.norm() < 1e-12) continue;
            t.normalize();
            Vec y = A0.frame() * t;  // unit vector in A
            sup = std::max(sup, B0.distance(y));
        }
        return sup;
    };
    return std::max(one_side(P1, P2), one_side(P2, P1));
}

}  // namespace

TEST_CASE("dist_to_plane basics") {
    AffinePlane P = xy_plane();
    CHECK(dist_to_plane(v3(0.3, -0.2, 0), P) == doctest::Approx(0.0));
    CHECK(dist_to_plane(v3(0, 0, 1), P) == doctest::Approx(1.0));

    Mat fr(2, 1);
    fr << 1.0 / std::sqrt(2.0), 1.0 / std::sqrt(2.0);
    AffinePlane diag(Vec::Zero(2), fr);
    CHECK(dist_to_plane(v2(1, 1), diag) == doctest::Approx(0.0));

    CHECK_THROWS(dist_to_plane(v2(0, 0), P));
}

TEST_CASE("plane_angle identity, orthogonal lines, orthogonal 2-planes") {
    AffinePlane P = xy_plane();
    CHECK(plane_angle(P, P) == doctest::Approx(0.0));

    AffinePlane l1 = line2(0.0, Vec::Zero(2));
    AffinePlane l2 = line2(M_PI / 2.0, Vec::Zero(2));
    CHECK(plane_angle(l1, l2) == doctest::Approx(1.0));
    CHECK(plane_angle(l1, l2) == doctest::Approx(sampled_plane_angle(l1, l2)).epsilon(1e-3));

    Mat f1(4, 2), f2(4, 2);
    f1 << 1, 0, 0, 1, 0, 0, 0, 0;
    f2 << 0, 0, 0, 0, 1, 0, 0, 1;
    AffinePlane A(Vec::Zero(4), f1), B(Vec::Zero(4), f2);
    CHECK(plane_angle(A, B) == doctest::Approx(1.0));
    CHECK(plane_angle(A, B) == doctest::Approx(sampled_plane_angle(A, B)).epsilon(1e-3));
}

TEST_CASE("plane_angle vs sampled oracle on random pairs") {
    std::mt19937 rng(21);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 12; ++trial) {
        int n = 3;
        int d = 1 + (trial % 2);
        Mat A(n, d), B(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) {
                A(i, j) = g(rng);
                B(i, j) = g(rng);
            }
        AffinePlane P1(Vec::Zero(n), A), P2(Vec::Zero(n), B);
        double exact = plane_angle(P1, P2);
        double sampled = sampled_plane_angle(P1, P2);
        CHECK(exact == doctest::Approx(sampled).epsilon(2e-3));
    }
}

TEST_CASE("plane_angle pseudometric properties through a fixed point") {
    std::mt19937 rng(5);
    std::normal_distribution<double> g(0.0, 1.0);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 3, d = 2;
        auto rand_plane = [&]() {
            Mat A(n, d);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < d; ++j) A(i, j) = g(rng);
            return AffinePlane(Vec::Zero(n), A);
        };
        AffinePlane P1 = rand_plane(), P2 = rand_plane(), P3 = rand_plane();
        CHECK(plane_angle(P1, P2) == doctest::Approx(plane_angle(P2, P1)));
        CHECK(plane_angle(P1, P3) <= plane_angle(P1, P2) + plane_angle(P2, P3) + 1e-9);
    }
}

TEST_CASE("e:vvperp — close planes have small perpendicular drift") {
    std::mt19937 rng(11);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> tiltU(0.0, 0.3);
    for (int trial = 0; trial < 20; ++trial) {
        int n = 3, d = 2;
        Mat A(n, d);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < d; ++j) A(i, j) = g(rng);
        AffinePlane V1(Vec::Zero(n), A);
        Mat comp = V1.complement_frame();
        Vec prm(d * (n - d));
        for (int i = 0; i < prm.size(); ++i) prm(i) = tiltU(rng) * 0.2;
        AffinePlane V2(Vec::Zero(n), tilt_frame(V1.frame(), comp, prm));
        double eps = plane_angle(V1, V2);
        for (int s = 0; s < 30; ++s) {
            Vec t1(d), t2(d);
            for (int k = 0; k < d; ++k) {
                t1(k) = g(rng);
                t2(k) = g(rng);
            }
            Vec x = V2.frame() * t1, y = V2.frame() * t2;
            Vec diff = x - y;
            Vec perp = diff - V1.frame() * (V1.frame().transpose() * diff);
            CHECK(perp.norm() <= (eps + 1e-9) * diff.norm());
        }
    }
}

TEST_CASE("set_dist_dB plane offsets and holes") {
    // E = segment sample of the x-axis, F = parallel line at height 0.3.
    std::vector<Vec> E, F;
    const double delta = 0.01;
    for (int i = -200; i <= 200; ++i) E.push_back(v2(i * delta, 0.0));
    for (int i = -200; i <= 200; ++i) F.push_back(v2(i * delta, 0.3));
    Ball B(v2(0, 0), 1.0);
    double dEF = set_dist_dB(E, F, B);
    CHECK(dEF == doctest::Approx(0.3).epsilon(0.08));
    CHECK(set_dist_dB(E, E, B) == doctest::Approx(0.0));

    // Hole of radius 0.5 in E around the center: the hole midpoint realizes
    // the sup at 0.5 (within sampling tolerance 2*delta).
    std::vector<Vec> Ehole;
    for (const Vec& p : E)
        if (p.norm() >= 0.5) Ehole.push_back(p);
    Mat fr(2, 1);
    fr << 1, 0;
    AffinePlane xaxis(Vec::Zero(2), fr);
    double dhole = set_dist_dB(Ehole, xaxis, B, delta);
    CHECK(dhole >= 0.5 - 2 * delta);
    CHECK(dhole <= 0.5 + 2 * delta);
}

TEST_CASE("set_dist_dB errors on empty intersection") {
    std::vector<Vec> E{v2(5, 5)};
    std::vector<Vec> F{v2(0, 0)};
    Ball B(v2(0, 0), 1.0);
    CHECK_THROWS(set_dist_dB(E, F, B));
}

TEST_CASE("eta on simplices and degenerate inputs") {
    // Right-triangle vertices: eta = (1/sqrt2)/sqrt2 = 1/2.
    std::vector<Vec> X{v2(0, 0), v2(1, 0), v2(0, 1)};
    CHECK(eta(X) == doctest::Approx(0.5));

    std::vector<Vec> collinear{v2(0, 0), v2(0.5, 0), v2(1, 0)};
    CHECK(eta(collinear) == doctest::Approx(0.0));

    std::vector<Vec> segment{Vec::Zero(1), Vec::Ones(1)};
    CHECK(eta(segment) == doctest::Approx(1.0));

    std::vector<Vec> coincident{v2(1, 1), v2(1, 1)};
    CHECK_THROWS(eta(coincident));
}

TEST_CASE("minimum enclosing ball on simple configurations") {
    std::vector<Vec> pts{v2(0, 0), v2(2, 0)};
    Ball b = minimum_enclosing_ball(pts);
    CHECK(b.radius == doctest::Approx(1.0));
    CHECK((b.center - v2(1, 0)).norm() == doctest::Approx(0.0).epsilon(1e-9));

    std::vector<Vec> tri{v2(0, 0), v2(1, 0), v2(0.5, 0.2)};
    Ball bt = minimum_enclosing_ball(tri);
    for (const Vec& p : tri) CHECK((p - bt.center).norm() <= bt.radius + 1e-9);

    std::mt19937 rng(3);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<Vec> rand3;
    for (int i = 0; i < 120; ++i) rand3.push_back(v3(g(rng), g(rng), g(rng)));
    Ball br = minimum_enclosing_ball(rand3);
    for (const Vec& p : rand3) CHECK((p - br.center).norm() <= br.radius * (1 + 1e-9));
}

namespace {

// Brute-force slab oracle: directions on a fine angular grid (plus golden
// refinement) for d=1 in the plane; subset spans for general use.
double slab_oracle_2d(const std::vector<Vec>& pts) {
    auto width = [&](double theta) {
        Vec nvec = v2(-std::sin(theta), std::cos(theta));
        double lo = 1e300, hi = -1e300;
        for (const Vec& p : pts) {
            double t = nvec.dot(p);
            lo = std::min(lo, t);
            hi = std::max(hi, t);
        }
        return hi - lo;
    };
    double best = 1e300, bestt = 0;
    const int K = 31416;  // ~1e-4 angular resolution over [0, pi)
    for (int i = 0; i < K; ++i) {
        double t = M_PI * i / K;
        double w = width(t);
        if (w < best) {
            best = w;
            bestt = t;
        }
    }
    double lo = bestt - M_PI / K, hi = bestt + M_PI / K;
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double c = hi - gr * (hi - lo), d = lo + gr * (hi - lo);
    for (int it = 0; it < 60; ++it) {
        if (width(c) < width(d)) hi = d;
        else lo = c;
        c = hi - gr * (hi - lo);
        d = lo + gr * (hi - lo);
    }
    return std::min({best, width(lo), width(hi), width(c), width(d)});
}

}  // namespace

TEST_CASE("fit_plane_linf frozen examples") {
    std::vector<Vec> collinear;
    for (int i = 0; i <= 10; ++i) collinear.push_back(v2(0.1 * i, 0.2 * i));
    SlabFit f0 = fit_plane_linf(collinear, 1);
    CHECK(f0.width == doctest::Approx(0.0).epsilon(1e-10));

    // Triangle: minimal slab = minimal altitude = 0.2 (oracle-confirmed).
    std::vector<Vec> tri{v2(0, 0), v2(1, 0), v2(0.5, 0.2)};
    CHECK(slab_oracle_2d(tri) == doctest::Approx(0.2).epsilon(1e-6));
    SlabFit ft = fit_plane_linf(tri, 1);
    CHECK(ft.width == doctest::Approx(0.2).epsilon(1e-6));

    // Unit square corners: oracle gives width 1.
    std::vector<Vec> sq{v2(0, 0), v2(1, 0), v2(0, 1), v2(1, 1)};
    CHECK(slab_oracle_2d(sq) == doctest::Approx(1.0).epsilon(1e-6));
    SlabFit fs = fit_plane_linf(sq, 1);
    CHECK(fs.width == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("fit_plane_linf never worse than PCA and matches oracle on random clouds") {
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    for (int trial = 0; trial < 15; ++trial) {
        std::vector<Vec> pts;
        int m = 5 + (trial % 20);
        for (int i = 0; i < m; ++i) pts.push_back(v2(u(rng), 0.3 * u(rng)));
        SlabFit f = fit_plane_linf(pts, 1);
        AffinePlane pca = fit_plane_pca(pts, 1);
        double pca_width = slab_width_for_direction(pts, pca.frame(), nullptr);
        CHECK(f.width <= pca_width + 1e-12);
        double oracle = slab_oracle_2d(pts);
        CHECK(f.width == doctest::Approx(oracle).epsilon(1e-4));
        // The returned plane actually achieves the width.
        double sup = 0.0;
        for (const Vec& p : pts) sup = std::max(sup, f.plane.distance(p));
        CHECK(2.0 * sup == doctest::Approx(f.width).epsilon(1e-9));
    }
}

TEST_CASE("plane_ball_dist matches principal angle for planes through the center") {
    Mat f1(3, 2), f2raw(3, 2);
    f1 << 1, 0, 0, 1, 0, 0;
    double th = 0.3;
    f2raw << std::cos(th), 0, 0, 1, std::sin(th), 0;
    AffinePlane P1(Vec::Zero(3), f1), P2(Vec::Zero(3), f2raw);
    for (double r : {0.5, 1.0, 7.0}) {
        CHECK(plane_ball_dist(P1, P2, Vec::Zero(3), r) ==
              doctest::Approx(std::sin(th)).epsilon(1e-6));
    }
}

TEST_CASE("cylinder membership") {
    Cylinder D(Vec::Zero(3), xy_plane(), 1.0);
    CHECK(D.contains(v3(0.5, 0.5, 0.5)));
    CHECK(!D.contains(v3(0.5, 0.5, 1.5)));
    CHECK(!D.contains(v3(1.5, 0, 0)));
    CHECK_THROWS(Cylinder(v3(0, 0, 1), xy_plane(), 1.0));
}

TEST_CASE("PointCloud invariants") {
    CHECK_THROWS(PointCloud({}, 2, 1, 0.1));
    CHECK_THROWS(PointCloud({v2(0, 0)}, 2, 1, 0.0));
    CHECK_THROWS(PointCloud({v2(0, 0), v3(0, 0, 0)}, 2, 1, 0.1));
    PointCloud c({v2(0, 0), v2(1, 0)}, 2, 1, 0.5);
    CHECK(c.size() == 2);
    CHECK(c.diameter() == doctest::Approx(1.0));
}

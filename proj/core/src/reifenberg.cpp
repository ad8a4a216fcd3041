#include "tstkit/reifenberg.hpp"

#include "tstkit/beta.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <random>

namespace tst {

namespace {

// Quintic radial bump: 1 inside 9/10 of the support radius, 0 outside it,
// C^2 across both joints.
double bump(double dist, double support_radius) {
    double inner = 0.9 * support_radius;
    if (dist <= inner) return 1.0;
    if (dist >= support_radius) return 0.0;
    double u = (dist - inner) / (support_radius - inner);
    double s = u * u * u * (u * (6.0 * u - 15.0) + 10.0);
    return 1.0 - s;
}

}  // namespace

CoherentNetSystem derive_net_system(const PointCloud& cloud, const CubeTree& tree,
                                    const PlaneField& planes, double eps, double ratio,
                                    int k_max) {
    if (!(ratio > 0.0 && ratio < 1.0))
        throw std::invalid_argument("derive_net_system: ratio must lie in (0,1)");
    CoherentNetSystem sys;
    sys.ratio = ratio;
    sys.eps = eps;
    // r_0 comparable to the top cube scale so the window covers the cloud.
    sys.scale = tree.node(tree.root()).sidelength / 5.0;
    if (k_max < 0) k_max = tree.depth();

    for (int k = 0; k <= k_max; ++k) {
        double rk = sys.scale * std::pow(ratio, k);
        // s(k): finest tree level with sidelength >= r_k.
        int sk = 0;
        for (int s = 0; s <= tree.depth(); ++s)
            if (tree.sidelength_of_level(s) >= rk) sk = s;
        NetLevel lvl;
        lvl.radius = rk;
        std::vector<int> chosen;  // node ids, greedy maximal r_k-separated
        for (int id : tree.levels[static_cast<size_t>(sk)]) {
            const Vec& c = tree.node(id).center;
            bool ok = true;
            for (int prev : chosen) {
                if ((tree.node(prev).center - c).norm() < rk) {
                    ok = false;
                    break;
                }
            }
            if (ok) chosen.push_back(id);
        }
        for (int id : chosen) {
            lvl.centers.push_back(tree.node(id).center);
            lvl.planes.push_back(planes.at(id));
        }
        sys.levels.push_back(std::move(lvl));
    }
    sys.base_plane = planes.at(tree.root());
    validate_net_system(sys);
    return sys;
}

void validate_net_system(CoherentNetSystem& sys) {
    sys.violations.clear();
    // Separation (by construction when derived, still asserted), descent,
    // angle coherence.
    for (int k = 0; k <= sys.deepest(); ++k) {
        const NetLevel& lvl = sys.levels[static_cast<size_t>(k)];
        for (size_t a = 0; a < lvl.centers.size(); ++a)
            for (size_t b = a + 1; b < lvl.centers.size(); ++b)
                if ((lvl.centers[a] - lvl.centers[b]).norm() < lvl.radius * (1 - 1e-12))
                    sys.violations.push_back({k, static_cast<int>(a), "separation", lvl.radius});
        if (k > 0) {
            const NetLevel& prev = sys.levels[static_cast<size_t>(k) - 1];
            for (size_t a = 0; a < lvl.centers.size(); ++a) {
                double best = std::numeric_limits<double>::infinity();
                for (const Vec& c : prev.centers) best = std::min(best, (lvl.centers[a] - c).norm());
                if (best > 2.0 * prev.radius)
                    sys.violations.push_back({k, static_cast<int>(a), "descent", best / prev.radius});
            }
        }
    }
    for (int k = 0; k <= sys.deepest(); ++k) {
        double ek = stage_epsilon(sys, k);
        if (ek >= sys.eps) sys.violations.push_back({k, -1, "angle-coherence", ek});
    }
}

namespace {

// d_{x,r}(P,P') restricted to pairs of affine planes; cheap angle+offset
// upper bound used to prune the sup computations.
double pair_upper_bound(const AffinePlane& A, const AffinePlane& B, double r) {
    double ang = plane_angle(A, B);
    double off = (A.base() - B.base()).norm();
    return ang + 2.0 * off / r;
}

}  // namespace

EpsilonNumbers epsilon_numbers(const CoherentNetSystem& sys, int k, const Vec& x) {
    EpsilonNumbers out;
    const int K = sys.deepest();
    if (k < 0 || k > K) throw std::out_of_range("epsilon_numbers: bad level");
    const NetLevel& lk = sys.levels[static_cast<size_t>(k)];
    for (int l = std::max(0, k - 2); l <= std::min(K, k + 2); ++l) {
        const NetLevel& ll = sys.levels[static_cast<size_t>(l)];
        for (size_t j = 0; j < lk.centers.size(); ++j) {
            if ((x - lk.centers[j]).norm() >= 100.0 * lk.radius) continue;
            for (size_t i = 0; i < ll.centers.size(); ++i) {
                if ((x - ll.centers[i]).norm() >= 100.0 * ll.radius) continue;
                ++out.pairs_engaged;
                double big = plane_ball_dist(lk.planes[j], ll.planes[i], x, 1e4 * ll.radius);
                out.eps_k = std::max(out.eps_k, big);
                out.eps_k_small_window = std::max(
                    out.eps_k_small_window,
                    plane_ball_dist(lk.planes[j], ll.planes[i], x, 100.0 * ll.radius));
            }
        }
        // eps'_k: the 10B/11B membership with windows at the net centers.
        for (size_t j = 0; j < lk.centers.size(); ++j) {
            if ((x - lk.centers[j]).norm() >= 10.0 * lk.radius) continue;
            for (size_t i = 0; i < ll.centers.size(); ++i) {
                if ((x - ll.centers[i]).norm() >= 11.0 * ll.radius) continue;
                ++out.pairs_engaged_prime;
                out.eps_prime = std::max(
                    out.eps_prime, plane_ball_dist(lk.planes[j], ll.planes[i], ll.centers[i],
                                                   100.0 * ll.radius));
            }
        }
    }
    return out;
}

double stage_epsilon(const CoherentNetSystem& sys, int k) {
    // At desk scale the 100 B qualification engages every nearby-level pair,
    // so the stage bound is the global pairwise sup. Candidates are pruned
    // with an angle + offset upper bound before the exact evaluation.
    const int K = sys.deepest();
    const NetLevel& lk = sys.levels[static_cast<size_t>(k)];
    double best = 0.0;
    for (int l = std::max(0, k - 2); l <= std::min(K, k + 2); ++l) {
        const NetLevel& ll = sys.levels[static_cast<size_t>(l)];
        double r = 1e4 * ll.radius;
        std::vector<std::tuple<double, size_t, size_t>> cands;
        for (size_t j = 0; j < lk.centers.size(); ++j) {
            for (size_t i = 0; i < ll.centers.size(); ++i) {
                // Only pairs whose 100-dilated balls can share a point.
                if ((lk.centers[j] - ll.centers[i]).norm() >=
                    100.0 * (lk.radius + ll.radius))
                    continue;
                cands.emplace_back(pair_upper_bound(lk.planes[j], ll.planes[i], r), j, i);
            }
        }
        std::sort(cands.begin(), cands.end(),
                  [](const auto& a, const auto& b) { return std::get<0>(a) > std::get<0>(b); });
        for (const auto& [ub, j, i] : cands) {
            if (ub <= best) break;
            Vec mid = 0.5 * (lk.centers[j] + ll.centers[i]);
            best = std::max(best, plane_ball_dist(lk.planes[j], ll.planes[i], mid, r));
        }
    }
    return best;
}

SigmaState initial_state(const CoherentNetSystem& sys, double half_width, double spacing) {
    if (!(half_width > 0.0 && spacing > 0.0))
        throw std::invalid_argument("initial_state: window and spacing must be positive");
    const AffinePlane& P0 = sys.base_plane;
    const int d = P0.dim();
    SigmaState st;
    st.mesh.dim = d;
    int m = static_cast<int>(std::round(half_width / spacing));
    if (d == 1) {
        for (int i = -m; i <= m; ++i)
            st.mesh.vertices.push_back(P0.base() + (i * spacing) * P0.frame().col(0));
        for (int i = 0; i + 1 < static_cast<int>(st.mesh.vertices.size()); ++i)
            st.mesh.segments.push_back({i, i + 1});
    } else if (d == 2) {
        int side = 2 * m + 1;
        for (int i = -m; i <= m; ++i)
            for (int j = -m; j <= m; ++j)
                st.mesh.vertices.push_back(P0.base() + (i * spacing) * P0.frame().col(0) +
                                           (j * spacing) * P0.frame().col(1));
        auto vid = [&](int i, int j) { return (i + m) * side + (j + m); };
        for (int i = -m; i < m; ++i)
            for (int j = -m; j < m; ++j) {
                st.mesh.faces.push_back({vid(i, j), vid(i + 1, j), vid(i + 1, j + 1)});
                st.mesh.faces.push_back({vid(i, j), vid(i + 1, j + 1), vid(i, j + 1)});
            }
    } else {
        throw std::invalid_argument("initial_state: only d = 1 and d = 2 windows are meshed");
    }
    st.initial = st.mesh.vertices;
    return st;
}

void sigma_step(SigmaState& state, const CoherentNetSystem& sys, int k) {
    if (k != state.stage + 1)
        throw std::invalid_argument("sigma_step: stages must be applied in order");
    const NetLevel& lvl = sys.levels[static_cast<size_t>(k)];
    const double rk = lvl.radius;
    std::vector<Vec>& verts = state.mesh.vertices;

    // V_k^9 membership per vertex, then L_k as a maximal r_k/2-net of the
    // vertices outside it. Bumps for L_k points have support r_k/10, so
    // their 10B support radius is r_k.
    std::vector<Vec> net_centers = lvl.centers;
    GridIndex net_idx(net_centers, rk);
    std::vector<char> in_v9(verts.size(), 0);
    for (size_t v = 0; v < verts.size(); ++v) {
        for (int j : net_idx.within(verts[v], 9.0 * rk)) {
            (void)j;
            in_v9[v] = 1;
            break;
        }
    }
    std::vector<Vec> smooth_pts;
    for (size_t v = 0; v < verts.size(); ++v) {
        if (in_v9[v]) continue;
        bool ok = true;
        for (const Vec& s : smooth_pts) {
            if ((verts[v] - s).norm() < rk / 2.0) {
                ok = false;
                break;
            }
        }
        if (ok) smooth_pts.push_back(verts[v]);
    }
    GridIndex smooth_idx(smooth_pts, std::max(rk / 2.0, 1e-12));

    std::vector<double> disp(verts.size(), 0.0);
    double maxdisp = 0.0;
    for (size_t v = 0; v < verts.size(); ++v) {
        const Vec y = verts[v];
        std::vector<int> js = net_idx.within(y, 10.0 * rk);
        if (js.empty()) continue;  // identity outside V_k^10, exactly
        double total = 0.0;
        Vec acc = Vec::Zero(y.size());
        for (int j : js) {
            double th = bump((y - net_centers[static_cast<size_t>(j)]).norm(), 10.0 * rk);
            if (th <= 0.0) continue;
            total += th;
            acc += th * lvl.planes[static_cast<size_t>(j)].project(y);
        }
        if (!smooth_pts.empty()) {
            for (int j : smooth_idx.within(y, rk)) {
                double th = bump((y - smooth_pts[static_cast<size_t>(j)]).norm(), rk);
                if (th <= 0.0) continue;
                total += th;
                acc += th * y;
            }
        }
        if (total < 1e-9) {
            if (js.empty()) continue;
            throw std::runtime_error(
                "sigma_step: partition of unity vanished inside the active region");
        }
        Vec moved = acc / total;
        disp[v] = (moved - y).norm();
        maxdisp = std::max(maxdisp, disp[v]);
        verts[v] = moved;
    }
    state.displacement.push_back(std::move(disp));
    state.stage_max_displacement.push_back(maxdisp);
    state.stage = k;
}

namespace {

double dist_point_segment(const Vec& p, const Vec& a, const Vec& b) {
    Vec ab = b - a;
    double t = ab.squaredNorm() > 0 ? (p - a).dot(ab) / ab.squaredNorm() : 0.0;
    t = std::clamp(t, 0.0, 1.0);
    return (p - (a + t * ab)).norm();
}

double dist_point_triangle(const Vec& p, const Vec& a, const Vec& b, const Vec& c) {
    // Project onto the triangle plane, clamp to the triangle via barycentric
    // regions; fall back to edge distances.
    Vec ab = b - a, ac = c - a, ap = p - a;
    double d1 = ab.dot(ap), d2 = ac.dot(ap);
    if (d1 <= 0.0 && d2 <= 0.0) return (p - a).norm();
    Vec bp = p - b;
    double d3 = ab.dot(bp), d4 = ac.dot(bp);
    if (d3 >= 0.0 && d4 <= d3) return (p - b).norm();
    Vec cp = p - c;
    double d5 = ab.dot(cp), d6 = ac.dot(cp);
    if (d6 >= 0.0 && d5 <= d6) return (p - c).norm();
    double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) return dist_point_segment(p, a, b);
    double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) return dist_point_segment(p, a, c);
    double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) return dist_point_segment(p, b, c);
    double denom = 1.0 / (va + vb + vc);
    double v = vb * denom, w = vc * denom;
    return (p - (a + v * ab + w * ac)).norm();
}

}  // namespace

double dist_to_mesh(const Vec& x, const SurfaceMesh& mesh) {
    double best = std::numeric_limits<double>::infinity();
    if (mesh.dim == 1) {
        for (const auto& s : mesh.segments)
            best = std::min(best, dist_point_segment(x, mesh.vertices[static_cast<size_t>(s[0])],
                                                     mesh.vertices[static_cast<size_t>(s[1])]));
    } else {
        for (const auto& f : mesh.faces)
            best = std::min(best,
                            dist_point_triangle(x, mesh.vertices[static_cast<size_t>(f[0])],
                                                mesh.vertices[static_cast<size_t>(f[1])],
                                                mesh.vertices[static_cast<size_t>(f[2])]));
    }
    if (mesh.faces.empty() && mesh.segments.empty())
        for (const Vec& v : mesh.vertices) best = std::min(best, (x - v).norm());
    return best;
}

void SurfaceMesh::write_obj(const std::string& path) const {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_obj: cannot open " + path);
    out.precision(17);
    for (const Vec& v : vertices) {
        out << "v";
        for (int a = 0; a < v.size(); ++a) out << " " << v(a);
        for (int a = static_cast<int>(v.size()); a < 3; ++a) out << " 0";
        out << "\n";
    }
    for (const auto& f : faces) out << "f " << f[0] + 1 << " " << f[1] + 1 << " " << f[2] + 1 << "\n";
    for (const auto& s : segments) out << "l " << s[0] + 1 << " " << s[1] + 1 << "\n";
}

FlatnessProfile flatness_profile(const PointCloud& S, int d, const std::vector<double>& scales,
                                 int max_centers_per_scale, const Ball* within) {
    FlatnessProfile out;
    if (S.size() == 0) return out;
    for (double r : scales) {
        if (!(r > 0.0)) continue;
        // Centers: a maximal r-separated subset, capped, restricted so the
        // profiled ball stays inside the stated window.
        std::vector<int> all;
        for (int i = 0; i < S.size(); ++i) {
            if (within && (S[i] - within->center).norm() + r > within->radius) continue;
            all.push_back(i);
        }
        std::vector<int> centers = thin_scope(S, all, r);
        if (static_cast<int>(centers.size()) > max_centers_per_scale) {
            std::vector<int> sub;
            double stride = double(centers.size()) / max_centers_per_scale;
            for (int i = 0; i < max_centers_per_scale; ++i)
                sub.push_back(centers[static_cast<size_t>(i * stride)]);
            centers = sub;
        }
        for (int c : centers) {
            Ball B(S[c], r);
            std::vector<int> scope = points_in_ball(S, B);
            if (static_cast<int>(scope.size()) <= d) continue;
            double v = vartheta_scoped(S, scope, B, d).value;
            out.entries.push_back({S[c], r, v});
            out.max_vartheta = std::max(out.max_vartheta, v);
        }
    }
    return out;
}

namespace {

// d_B(mesh, L): vertex-side sup against the plane plus plane-grid sup
// against the local triangles.
double mesh_vartheta_at(const SurfaceMesh& mesh, const std::vector<int>& vscope, const Ball& B,
                        const AffinePlane& L, double grid_spacing) {
    if (L.distance(B.center) >= B.radius) return 2.0 + L.distance(B.center) / B.radius;
    double supV = 0.0;
    for (int v : vscope) supV = std::max(supV, L.distance(mesh.vertices[static_cast<size_t>(v)]));
    // Local patch of faces/segments near the ball.
    SurfaceMesh patch;
    patch.dim = mesh.dim;
    patch.vertices = mesh.vertices;
    double reach = 1.5 * B.radius;
    for (const auto& f : mesh.faces) {
        for (int c = 0; c < 3; ++c)
            if ((mesh.vertices[static_cast<size_t>(f[c])] - B.center).norm() <= reach) {
                patch.faces.push_back(f);
                break;
            }
    }
    for (const auto& s : mesh.segments) {
        for (int c = 0; c < 2; ++c)
            if ((mesh.vertices[static_cast<size_t>(s[c])] - B.center).norm() <= reach) {
                patch.segments.push_back(s);
                break;
            }
    }
    double supL = 0.0;
    for (const Vec& g : sample_plane_in_ball(L, B, grid_spacing))
        supL = std::max(supL, dist_to_mesh(g, patch));
    return std::max(supV, supL) / B.radius;
}

}  // namespace

FlatnessProfile flatness_profile(const SurfaceMesh& mesh, const std::vector<double>& scales,
                                 int max_centers_per_scale, const Ball* within) {
    FlatnessProfile out;
    if (mesh.vertices.empty()) return out;
    const int n = static_cast<int>(mesh.vertices[0].size());
    const int d = mesh.dim;
    double spacing_guess = 0.0;
    if (!mesh.faces.empty()) {
        const auto& f = mesh.faces[0];
        spacing_guess = (mesh.vertices[static_cast<size_t>(f[0])] -
                         mesh.vertices[static_cast<size_t>(f[1])])
                            .norm();
    } else if (!mesh.segments.empty()) {
        const auto& s = mesh.segments[0];
        spacing_guess = (mesh.vertices[static_cast<size_t>(s[0])] -
                         mesh.vertices[static_cast<size_t>(s[1])])
                            .norm();
    }
    PointCloud cloud(mesh.vertices, n, d, std::max(spacing_guess, 1e-12));
    for (double r : scales) {
        if (!(r > 0.0)) continue;
        std::vector<int> all;
        for (int i = 0; i < cloud.size(); ++i) {
            if (within && (cloud[i] - within->center).norm() + r > within->radius) continue;
            all.push_back(i);
        }
        std::vector<int> centers = thin_scope(cloud, all, r);
        if (static_cast<int>(centers.size()) > max_centers_per_scale) {
            std::vector<int> sub;
            double stride = double(centers.size()) / max_centers_per_scale;
            for (int i = 0; i < max_centers_per_scale; ++i)
                sub.push_back(centers[static_cast<size_t>(i * stride)]);
            centers = sub;
        }
        for (int c : centers) {
            Ball B(cloud[c], r);
            std::vector<int> vscope = points_in_ball(cloud, B);
            if (static_cast<int>(vscope.size()) <= d) continue;
            // Plane from the vertex-cloud search, value against the mesh.
            BetaResult vt = vartheta_scoped(cloud, vscope, B, d);
            double grid = std::max(spacing_guess / 2.0, r / 128.0);
            double v = mesh_vartheta_at(mesh, vscope, B, vt.plane, grid);
            out.entries.push_back({cloud[c], r, v});
            out.max_vartheta = std::max(out.max_vartheta, v);
        }
    }
    return out;
}

GraphCheck local_graph_check(const PointCloud& S, const Vec& x, double r, int d) {
    GraphCheck out;
    Ball B(x, r);
    std::vector<int> scope = points_in_ball(S, B);
    if (scope.empty()) throw std::invalid_argument("local_graph_check: empty patch");
    std::vector<Vec> pts;
    pts.reserve(scope.size());
    for (int i : scope) pts.push_back(S[i]);
    if (static_cast<int>(pts.size()) <= d) {
        out.is_graph = true;
        out.lipschitz = 0.0;
        return out;
    }
    SlabFit fit = fit_plane_linf(pts, d);
    const AffinePlane& P = fit.plane;
    const double delta = std::max(S.resolution, 1e-12);
    // Single-valued projection test: near-coincident projections must not
    // hide a height gap steeper than the patch slope allows.
    double lip = 0.0;
    bool graph = true;
    for (size_t a = 0; a < pts.size(); ++a) {
        Vec pa = P.frame().transpose() * (pts[a] - P.base());
        Vec ha = P.perp_component(pts[a]);
        for (size_t b = a + 1; b < pts.size(); ++b) {
            Vec pb = P.frame().transpose() * (pts[b] - P.base());
            Vec hb = P.perp_component(pts[b]);
            double dp = (pa - pb).norm();
            double dh = (ha - hb).norm();
            if (dp < delta / 2.0) {
                if (dh > 2.0 * delta) graph = false;
            } else {
                lip = std::max(lip, dh / dp);
            }
        }
    }
    out.is_graph = graph;
    out.lipschitz = lip;
    return out;
}

bool projection_coverage(const PointCloud& S, const Ball& B, const AffinePlane& P, double delta,
                         double slack) {
    std::vector<int> scope = points_in_ball(S, B);
    if (scope.empty()) return false;
    std::vector<Vec> proj;
    proj.reserve(scope.size());
    for (int i : scope) proj.push_back(P.project(S[i]));
    Ball half(P.project(B.center), B.radius / 2.0);
    std::vector<Vec> grid = sample_plane_in_ball(P, half, delta);
    for (const Vec& g : grid)
        if (dist_point_to_set(g, proj) > slack * delta) return false;
    return true;
}

DavidToroRun run_david_toro(const CoherentNetSystem& sys, double half_width, double spacing,
                            unsigned pair_seed) {
    if (!sys.coherent())
        throw std::invalid_argument("run_david_toro: net system failed coherence validation");
    DavidToroRun run;
    run.state = initial_state(sys, half_width, spacing);
    SigmaState& st = run.state;
    DavidToroDiagnostics& dg = run.diagnostics;

    std::vector<std::vector<Vec>> stage_positions;  // f_k(z) per stage for eps' sums
    stage_positions.push_back(st.mesh.vertices);
    for (int k = 0; k <= sys.deepest(); ++k) {
        // Identity outside V_k^10 is checked against the pre-stage positions.
        std::vector<char> outside(st.mesh.vertices.size(), 0);
        const NetLevel& lvl = sys.levels[static_cast<size_t>(k)];
        GridIndex idx(lvl.centers, std::max(lvl.radius, 1e-12));
        for (size_t v = 0; v < st.mesh.vertices.size(); ++v)
            outside[v] = idx.within(st.mesh.vertices[v], 10.0 * lvl.radius).empty() ? 1 : 0;
        std::vector<Vec> before = st.mesh.vertices;

        sigma_step(st, sys, k);

        for (size_t v = 0; v < st.mesh.vertices.size(); ++v)
            if (outside[v] && (st.mesh.vertices[v] - before[v]).norm() > 0.0)
                ++dg.identity_violations;
        double ek = stage_epsilon(sys, k);
        dg.stage_eps.push_back(ek);
        dg.stage_max_disp.push_back(st.stage_max_displacement.back());
        dg.stage_disp_over_er.push_back(
            ek > 0 ? st.stage_max_displacement.back() / (ek * lvl.radius) : 0.0);
        stage_positions.push_back(st.mesh.vertices);
    }

    // Final distance of the deepest net points to the mesh.
    const NetLevel& deepest = sys.levels[static_cast<size_t>(sys.deepest())];
    double nd = 0.0;
    for (const Vec& c : deepest.centers) {
        // Only centers the window can reach.
        Vec foot = sys.base_plane.project(c);
        Vec local = sys.base_plane.frame().transpose() * (foot - sys.base_plane.base());
        if (local.cwiseAbs().maxCoeff() > half_width - 10.0 * deepest.radius) continue;
        nd = std::max(nd, dist_to_mesh(c, st.mesh));
    }
    dg.final_net_dist = nd;
    dg.final_net_dist_over_er =
        sys.eps > 0 ? nd / (sys.eps * deepest.radius) : 0.0;

    // Flatness of the output sheet, sampled at three dyadic scales inside
    // the meshed window (overhanging balls would see the window boundary).
    Ball window(sys.base_plane.base(), 0.95 * half_width);
    std::vector<double> scales{half_width / 4.0, half_width / 8.0, half_width / 16.0};
    FlatnessProfile fp = flatness_profile(st.mesh, scales, 12, &window);
    dg.flatness_max = fp.max_vartheta;

    // Sampled bi-Hoelder and bi-Lipschitz behavior of z -> g(z).
    std::mt19937 rng(pair_seed);
    std::uniform_int_distribution<int> pick(0, static_cast<int>(st.mesh.vertices.size()) - 1);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    double tau_needed = 0.0;
    for (int rep = 0; rep < 4000; ++rep) {
        int a = pick(rng), b = pick(rng);
        if (a == b) continue;
        double dz = (st.initial[static_cast<size_t>(a)] - st.initial[static_cast<size_t>(b)]).norm() /
                    sys.scale;
        double dg2 = (st.mesh.vertices[static_cast<size_t>(a)] -
                      st.mesh.vertices[static_cast<size_t>(b)])
                         .norm() /
                     sys.scale;
        if (dz <= 0.0 || dg2 <= 0.0) continue;
        lo = std::min(lo, dg2 / dz);
        hi = std::max(hi, dg2 / dz);
        // Smallest tau in [0,1) with 1/4 dz^{1+tau} <= dg <= 10 dz^{1-tau};
        // both constraints relax monotonically in tau.
        auto ok_at = [&](double tau) {
            return 0.25 * std::pow(dz, 1.0 + tau) <= dg2 && dg2 <= 10.0 * std::pow(dz, 1.0 - tau);
        };
        if (!ok_at(tau_needed)) {
            double t = tau_needed;
            while (t < 1.0 && !ok_at(t)) t += 1e-3;
            tau_needed = t;
        }
    }
    dg.holder_tau = tau_needed;
    dg.holder_ok = tau_needed < 1.0;
    dg.bilipschitz_lo = lo;
    dg.bilipschitz_hi = hi;

    // eps' square sums along sampled vertex trajectories.
    double worst = 0.0;
    for (int rep = 0; rep < 24; ++rep) {
        int v = pick(rng);
        double acc = 0.0;
        for (int k = 0; k <= sys.deepest(); ++k) {
            EpsilonNumbers en =
                epsilon_numbers(sys, k, stage_positions[static_cast<size_t>(k)][static_cast<size_t>(v)]);
            acc += en.eps_prime * en.eps_prime;
        }
        worst = std::max(worst, acc);
    }
    dg.eps_prime_square_sum = worst;
    return run;
}

nlohmann::json DavidToroDiagnostics::to_json() const {
    nlohmann::json j;
    j["stage_max_disp"] = stage_max_disp;
    j["stage_eps"] = stage_eps;
    j["stage_disp_over_eps_r"] = stage_disp_over_er;
    j["final_net_dist"] = final_net_dist;
    j["final_net_dist_over_eps_r"] = final_net_dist_over_er;
    j["flatness_max"] = flatness_max;
    j["holder_tau"] = holder_tau;
    j["holder_ok"] = holder_ok;
    j["bilipschitz_lo"] = bilipschitz_lo;
    j["bilipschitz_hi"] = bilipschitz_hi;
    j["eps_prime_square_sum"] = eps_prime_square_sum;
    j["partition_ok"] = partition_ok;
    j["identity_violations"] = identity_violations;
    return j;
}

}  // namespace tst

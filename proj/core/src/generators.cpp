#include "tstkit/generators.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace tst {

namespace {

std::vector<double> parse_params(const std::string& spec, std::string& name) {
    auto colon = spec.find(':');
    name = spec.substr(0, colon);
    std::vector<double> out;
    if (colon == std::string::npos) return out;
    std::stringstream ss(spec.substr(colon + 1));
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        if (tok.empty()) continue;
        out.push_back(std::stod(tok));
    }
    return out;
}

double param(const std::vector<double>& ps, size_t i, double dflt) {
    return i < ps.size() ? ps[i] : dflt;
}

Vec v2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

PointCloud finish(std::vector<Vec> pts, int n, int d) {
    double res = PointCloud::default_resolution(pts);
    return PointCloud(std::move(pts), n, d, res);
}

}  // namespace

PointCloud generate(const std::string& spec, unsigned seed) {
    std::string name;
    std::vector<double> ps = parse_params(spec, name);
    std::mt19937 rng(seed);

    if (name == "plane" || name == "line") {
        int n = name == "line" ? 2 : static_cast<int>(param(ps, 0, 2));
        int d = name == "line" ? 1 : static_cast<int>(param(ps, 1, 1));
        int count = static_cast<int>(param(ps, name == "line" ? 0 : 2, 1001));
        if (!(d > 0 && d < n)) throw std::invalid_argument("generate: plane needs 0 < d < n");
        std::vector<Vec> pts;
        if (d == 1) {
            for (int i = 0; i < count; ++i) {
                Vec v = Vec::Zero(n);
                v(0) = -1.5 + 3.0 * i / (count - 1);
                pts.push_back(v);
            }
        } else {
            int side = std::max(2, static_cast<int>(std::round(std::pow(double(count), 1.0 / d))));
            std::vector<int> coord(static_cast<size_t>(d), 0);
            while (true) {
                Vec v = Vec::Zero(n);
                for (int a = 0; a < d; ++a)
                    v(a) = -1.5 + 3.0 * coord[static_cast<size_t>(a)] / (side - 1);
                pts.push_back(v);
                int a = 0;
                while (a < d && ++coord[static_cast<size_t>(a)] >= side) {
                    coord[static_cast<size_t>(a)] = 0;
                    ++a;
                }
                if (a == d) break;
            }
        }
        return finish(std::move(pts), n, d);
    }

    if (name == "circle") {
        double r = param(ps, 0, 1.0);
        int count = static_cast<int>(param(ps, 1, 720));
        std::vector<Vec> pts;
        for (int i = 0; i < count; ++i) {
            double t = 2.0 * M_PI * i / count;
            pts.push_back(v2(r * std::cos(t), r * std::sin(t)));
        }
        return finish(std::move(pts), 2, 1);
    }

    if (name == "lipschitz-graph") {
        double L = param(ps, 0, 0.5);
        int modes = static_cast<int>(param(ps, 1, 4));
        int count = static_cast<int>(param(ps, 2, 1201));
        std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
        std::vector<double> amp(static_cast<size_t>(modes)), ph(static_cast<size_t>(modes));
        double slope = 0.0;
        for (int m = 0; m < modes; ++m) {
            amp[static_cast<size_t>(m)] = 1.0 / ((m + 1) * (m + 1));
            ph[static_cast<size_t>(m)] = phase(rng);
            slope += amp[static_cast<size_t>(m)] * (m + 1);
        }
        // Normalize so the sup of |f'| equals L.
        double scale = L / slope;
        std::vector<Vec> pts;
        for (int i = 0; i < count; ++i) {
            double x = -1.5 + 3.0 * i / (count - 1);
            double y = 0.0;
            for (int m = 0; m < modes; ++m)
                y += scale * amp[static_cast<size_t>(m)] * std::sin((m + 1) * x + ph[static_cast<size_t>(m)]);
            pts.push_back(v2(x, y));
        }
        return finish(std::move(pts), 2, 1);
    }

    if (name == "tent") {
        double h = param(ps, 0, 0.2);
        int count = static_cast<int>(param(ps, 1, 201));
        std::vector<Vec> pts;
        for (int i = 0; i < count; ++i) {
            double x = double(i) / (count - 1);
            pts.push_back(v2(x, h - 2.0 * h * std::abs(x - 0.5)));
        }
        return finish(std::move(pts), 2, 1);
    }

    if (name == "plane-with-hole") {
        double a = param(ps, 0, 0.25);
        int count = static_cast<int>(param(ps, 1, 1401));
        std::vector<Vec> pts;
        for (int i = 0; i < count; ++i) {
            double x = -1.75 + 3.5 * i / (count - 1);
            if (std::abs(x) < a) continue;
            pts.push_back(v2(x, 0.0));
        }
        return finish(std::move(pts), 2, 1);
    }

    if (name == "dihedral") {
        double theta = param(ps, 0, 0.3);
        int per_side = static_cast<int>(param(ps, 1, 801)) / 2;
        std::vector<Vec> pts;
        for (int i = per_side; i >= 1; --i) {
            double t = 1.5 * i / per_side;
            pts.push_back(v2(-t * std::cos(theta), t * std::sin(theta)));
        }
        pts.push_back(v2(0, 0));
        for (int i = 1; i <= per_side; ++i) {
            double t = 1.5 * i / per_side;
            pts.push_back(v2(t * std::cos(theta), t * std::sin(theta)));
        }
        return finish(std::move(pts), 2, 1);
    }

    if (name == "koch") {
        double angle = param(ps, 0, M_PI / 3.0);
        int depth = static_cast<int>(param(ps, 1, 4));
        // Koch-type refinement: replace each segment by four, with the bump
        // angle controlling the height; angle -> 0 flattens to the segment.
        std::vector<Vec> pts{v2(-1.5, 0), v2(1.5, 0)};
        for (int it = 0; it < depth; ++it) {
            std::vector<Vec> next;
            for (size_t i = 0; i + 1 < pts.size(); ++i) {
                Vec a = pts[i], b = pts[i + 1];
                Vec dir = (b - a) / 3.0;
                Vec n = v2(-dir(1), dir(0));
                next.push_back(a);
                next.push_back(a + dir);
                next.push_back(a + 1.5 * dir + std::tan(angle / 2.0) * 1.5 * n);
                next.push_back(a + 2.0 * dir);
            }
            next.push_back(pts.back());
            pts = std::move(next);
        }
        return finish(std::move(pts), 2, 1);
    }

    if (name == "perturbed-plane") {
        double eps = param(ps, 0, 0.01);
        int n = static_cast<int>(param(ps, 1, 3));
        int count = static_cast<int>(param(ps, 2, 4096));
        int d = n - 1;
        // Smooth height field: a few long-wavelength sine modes with slopes
        // and amplitudes bounded by eps * r0 (r0 ~ the 1.5-halfwidth window).
        const int modes = 3;
        std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
        std::uniform_real_distribution<double> diru(-1.0, 1.0);
        std::vector<double> ph(modes), fq(modes);
        std::vector<Vec> dir(modes);
        double total_amp = 0.0;
        for (int m = 0; m < modes; ++m) {
            ph[static_cast<size_t>(m)] = phase(rng);
            fq[static_cast<size_t>(m)] = 1.0 + m;
            Vec u(d);
            for (int a = 0; a < d; ++a) u(a) = diru(rng);
            if (u.norm() < 1e-9) u(0) = 1.0;
            dir[static_cast<size_t>(m)] = u.normalized();
            total_amp += 1.0 / (m + 1.0);
        }
        double amp0 = eps * 1.5 / total_amp;
        std::vector<Vec> pts;
        int side = std::max(2, static_cast<int>(std::round(std::pow(double(count), 1.0 / d))));
        std::vector<int> coord(static_cast<size_t>(d), 0);
        while (true) {
            Vec x(d);
            for (int a = 0; a < d; ++a)
                x(a) = -1.5 + 3.0 * coord[static_cast<size_t>(a)] / (side - 1);
            double h = 0.0;
            for (int m = 0; m < modes; ++m)
                h += amp0 / (m + 1.0) *
                     std::sin(fq[static_cast<size_t>(m)] * dir[static_cast<size_t>(m)].dot(x) +
                              ph[static_cast<size_t>(m)]);
            Vec v(n);
            v.head(d) = x;
            v(n - 1) = h;
            pts.push_back(v);
            int a = 0;
            while (a < d && ++coord[static_cast<size_t>(a)] >= side) {
                coord[static_cast<size_t>(a)] = 0;
                ++a;
            }
            if (a == d) break;
        }
        return finish(std::move(pts), n, d);
    }

    throw std::invalid_argument("generate: unknown spec '" + name + "'");
}

}  // namespace tst

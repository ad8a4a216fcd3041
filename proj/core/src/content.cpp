#include "tstkit/content.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>

namespace tst {

ChoquetEngine::ChoquetEngine(std::vector<int> scope, int d, const CubeTree& tree, double floor)
    : scope_(std::move(scope)), d_(d), tree_(&tree), floor_(floor) {
    if (d_ <= 0) throw std::invalid_argument("ChoquetEngine: d must be positive");
    if (!(floor_ > 0.0)) throw std::invalid_argument("ChoquetEngine: floor must be positive");
    std::sort(scope_.begin(), scope_.end());
    scope_.erase(std::unique(scope_.begin(), scope_.end()), scope_.end());
    if (scope_.empty()) return;

    const int floor_level = tree.resolution_level(floor_);
    std::map<int, int> onode_of;  // tree node id -> onode index
    for (int k = 0; k <= floor_level; ++k) {
        const auto& own = tree.point_owner[static_cast<size_t>(k)];
        for (size_t s = 0; s < scope_.size(); ++s) {
            int nid = own[static_cast<size_t>(scope_[s])];
            if (nid < 0) continue;
            auto it = onode_of.find(nid);
            int oid;
            if (it == onode_of.end()) {
                ONode on;
                on.tree_id = nid;
                on.at_floor = (k == floor_level);
                on.cap = 2.0 * tree.node(nid).sidelength;
                oid = static_cast<int>(onodes_.size());
                onode_of[nid] = oid;
                onodes_.push_back(std::move(on));
                if (k == 0) root_onode_ = oid;
                if (k > 0) {
                    int pid = tree.node(nid).parent;
                    onodes_[static_cast<size_t>(onode_of.at(pid))].children.push_back(oid);
                }
            } else {
                oid = it->second;
            }
            onodes_[static_cast<size_t>(oid)].local_pts.push_back(static_cast<int>(s));
        }
    }
    // Children were appended after their parents, so reverse creation order
    // is a valid bottom-up evaluation order.
    eval_order_.resize(onodes_.size());
    for (size_t i = 0; i < onodes_.size(); ++i)
        eval_order_[i] = static_cast<int>(onodes_.size() - 1 - i);
}

namespace {

// Piecewise-constant cost over threshold intervals: value val[i] holds for
// interval indices [idx[i], idx[i+1]). Entries strictly increasing in idx.
struct StepFn {
    std::vector<int> idx;
    std::vector<double> val;

    double at(int j) const {
        // Last entry with idx <= j.
        auto it = std::upper_bound(idx.begin(), idx.end(), j);
        if (it == idx.begin()) return 0.0;
        return val[static_cast<size_t>(std::distance(idx.begin(), it)) - 1];
    }
};

StepFn sum_step(const std::vector<const StepFn*>& fns) {
    StepFn out;
    std::vector<int> allidx;
    for (const StepFn* f : fns) allidx.insert(allidx.end(), f->idx.begin(), f->idx.end());
    std::sort(allidx.begin(), allidx.end());
    allidx.erase(std::unique(allidx.begin(), allidx.end()), allidx.end());
    out.idx.reserve(allidx.size());
    out.val.reserve(allidx.size());
    for (int j : allidx) {
        double s = 0.0;
        for (const StepFn* f : fns) s += f->at(j);
        out.idx.push_back(j);
        out.val.push_back(s);
    }
    return out;
}

StepFn min_step(const StepFn& a, const StepFn& b) {
    StepFn out;
    std::vector<int> allidx;
    allidx.insert(allidx.end(), a.idx.begin(), a.idx.end());
    allidx.insert(allidx.end(), b.idx.begin(), b.idx.end());
    std::sort(allidx.begin(), allidx.end());
    allidx.erase(std::unique(allidx.begin(), allidx.end()), allidx.end());
    for (int j : allidx) {
        out.idx.push_back(j);
        out.val.push_back(std::min(a.at(j), b.at(j)));
    }
    return out;
}

}  // namespace

double ChoquetEngine::integral(const std::vector<double>& values, double p) const {
    if (values.size() != scope_.size())
        throw std::invalid_argument("ChoquetEngine::integral: values not aligned with scope");
    if (!(p > 0.0)) throw std::invalid_argument("ChoquetEngine::integral: p must be positive");
    for (double v : values) {
        if (!(v >= 0.0) || !std::isfinite(v))
            throw std::invalid_argument("ChoquetEngine::integral: values must be finite and >= 0");
    }
    if (scope_.empty()) return 0.0;

    // Global threshold grid: boundaries 0 = T[0] < T[1] < ... < T[M].
    std::vector<double> T{0.0};
    T.insert(T.end(), values.begin(), values.end());
    std::sort(T.begin(), T.end());
    T.erase(std::unique(T.begin(), T.end()), T.end());
    const int M = static_cast<int>(T.size()) - 1;
    if (M == 0) return 0.0;  // all values zero
    auto interval_of_value = [&](double v) {
        // Largest j with T[j] < v, i.e. the point survives intervals < j.
        auto it = std::lower_bound(T.begin(), T.end(), v);
        return static_cast<int>(std::distance(T.begin(), it));
    };

    const PointCloud& cloud = *tree_->cloud;
    std::vector<StepFn> cost(onodes_.size());
    for (int oid : eval_order_) {
        const ONode& on = onodes_[static_cast<size_t>(oid)];
        // Diameter route: points sorted by descending value; the set
        // {v > T[j]} loses whole equal-value groups as j grows.
        std::vector<std::pair<double, int>> byval;
        byval.reserve(on.local_pts.size());
        for (int s : on.local_pts) {
            double v = values[static_cast<size_t>(s)];
            if (v > 0.0) byval.emplace_back(v, s);
        }
        std::sort(byval.begin(), byval.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second < b.second;
        });
        StepFn diam_route;
        if (!byval.empty()) {
            // Highest interval where anything survives: j < interval_of(max value).
            std::vector<Vec> pts;
            pts.reserve(byval.size());
            double dsq = 0.0;
            std::vector<std::pair<int, double>> breaks;  // (first interval, cost)
            size_t i = 0;
            while (i < byval.size()) {
                double v = byval[i].first;
                while (i < byval.size() && byval[i].first == v) {
                    const Vec& np = cloud[scope_[static_cast<size_t>(byval[i].second)]];
                    for (const Vec& q : pts) dsq = std::max(dsq, (np - q).squaredNorm());
                    pts.push_back(np);
                    ++i;
                }
                double eff = std::min(std::max(std::sqrt(dsq), floor_), on.cap);
                // This group survives through intervals [0, interval_of(v));
                // cost applies from interval 0 once the coarser groups are
                // gone... assembled below by scanning groups fine-to-coarse.
                breaks.emplace_back(interval_of_value(v), std::pow(eff, double(d_)));
            }
            // breaks is ordered by descending value = ascending survival, so
            // the cost for interval j is the entry from the LAST group whose
            // interval_of(v) > j (the full surviving set includes all groups
            // with value > T[j]).
            //
            // Groups listed coarse-to-fine in value: group g survives
            // intervals j < breaks[g].first, and its recorded cost already
            // includes all earlier (higher-value) groups. So scanning from
            // the end, cost on [breaks[g+1].first, breaks[g].first) is
            // breaks[g].second.
            StepFn fn;
            int prev = 0;
            for (size_t g = breaks.size(); g-- > 0;) {
                int upto = breaks[g].first;  // exclusive
                if (upto > prev) {
                    fn.idx.push_back(prev);
                    fn.val.push_back(breaks[g].second);
                    prev = upto;
                }
            }
            fn.idx.push_back(prev);
            fn.val.push_back(0.0);
            diam_route = std::move(fn);
        } else {
            diam_route.idx.push_back(0);
            diam_route.val.push_back(0.0);
        }

        if (on.at_floor || on.children.empty()) {
            cost[static_cast<size_t>(oid)] = std::move(diam_route);
        } else {
            std::vector<const StepFn*> kids;
            kids.reserve(on.children.size());
            for (int c : on.children) kids.push_back(&cost[static_cast<size_t>(c)]);
            StepFn childsum = sum_step(kids);
            cost[static_cast<size_t>(oid)] = min_step(diam_route, childsum);
        }
    }

    const StepFn& R = cost[static_cast<size_t>(root_onode_)];
    double I = 0.0;
    for (int j = 0; j < M; ++j) {
        double c = R.at(j);
        if (c > 0.0)
            I += c * (std::pow(T[static_cast<size_t>(j) + 1], p) - std::pow(T[static_cast<size_t>(j)], p)) / p;
    }
    return I;
}

namespace {

struct PlainCost {
    double value = 0.0;
    std::vector<int> witness;
};

}  // namespace

ContentEstimate ChoquetEngine::content() const {
    ContentEstimate out;
    if (scope_.empty()) return out;
    const PointCloud& cloud = *tree_->cloud;
    std::vector<PlainCost> cost(onodes_.size());
    for (int oid : eval_order_) {
        const ONode& on = onodes_[static_cast<size_t>(oid)];
        std::vector<Vec> pts;
        pts.reserve(on.local_pts.size());
        for (int s : on.local_pts) pts.push_back(cloud[scope_[static_cast<size_t>(s)]]);
        double eff = std::min(std::max(diameter_of(pts), floor_), on.cap);
        double own = pts.empty() ? 0.0 : std::pow(eff, double(d_));
        PlainCost pc;
        if (on.at_floor || on.children.empty()) {
            pc.value = own;
            pc.witness = {on.tree_id};
        } else {
            double csum = 0.0;
            for (int c : on.children) csum += cost[static_cast<size_t>(c)].value;
            if (own <= csum) {
                pc.value = own;
                pc.witness = {on.tree_id};
            } else {
                pc.value = csum;
                for (int c : on.children) {
                    const auto& w = cost[static_cast<size_t>(c)].witness;
                    pc.witness.insert(pc.witness.end(), w.begin(), w.end());
                }
            }
        }
        cost[static_cast<size_t>(oid)] = std::move(pc);
    }
    out.value = cost[static_cast<size_t>(root_onode_)].value;
    out.lower_witness = std::move(cost[static_cast<size_t>(root_onode_)].witness);
    std::sort(out.lower_witness.begin(), out.lower_witness.end());
    return out;
}

ContentEstimate content(const std::vector<int>& scope, int d, const CubeTree& tree, double floor) {
    ChoquetEngine eng(scope, d, tree, floor);
    return eng.content();
}

double choquet_integral(const ChoquetIntegrand& f, const std::vector<int>& scope, int d,
                        const CubeTree& tree, double floor) {
    ChoquetEngine eng(scope, d, tree, floor);
    if (f.values.size() != eng.scope().size()) {
        // Caller supplied values aligned with the raw scope order; re-align.
        if (f.values.size() != scope.size())
            throw std::invalid_argument("choquet_integral: values not aligned with scope");
        std::vector<std::pair<int, double>> pairs;
        pairs.reserve(scope.size());
        for (size_t i = 0; i < scope.size(); ++i) pairs.emplace_back(scope[i], f.values[i]);
        std::sort(pairs.begin(), pairs.end());
        pairs.erase(std::unique(pairs.begin(), pairs.end(),
                                [](const auto& a, const auto& b) { return a.first == b.first; }),
                    pairs.end());
        std::vector<double> vals;
        vals.reserve(pairs.size());
        for (const auto& pr : pairs) vals.push_back(pr.second);
        return eng.integral(vals, f.p);
    }
    return eng.integral(f.values, f.p);
}

}  // namespace tst

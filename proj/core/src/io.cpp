#include "tstkit/io.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace tst {

namespace {

PointCloud from_rows(std::vector<Vec> rows, int d, double resolution) {
    if (rows.empty()) throw std::runtime_error("ingest: no points");
    int n = static_cast<int>(rows[0].size());
    double res = resolution > 0.0 ? resolution : PointCloud::default_resolution(rows);
    return PointCloud(std::move(rows), n, d, res);
}

}  // namespace

PointCloud ingest_csv(const std::string& path, int d, double resolution) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest: cannot open " + path);
    std::vector<Vec> rows;
    std::string line;
    int lineno = 0;
    int width = -1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string tok;
        std::vector<double> vals;
        while (std::getline(ss, tok, ',')) {
            try {
                size_t used = 0;
                double v = std::stod(tok, &used);
                if (!std::isfinite(v)) throw std::invalid_argument("non-finite");
                vals.push_back(v);
            } catch (const std::exception&) {
                throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                         ": malformed value '" + tok + "'");
            }
        }
        if (vals.empty()) continue;
        if (width < 0) width = static_cast<int>(vals.size());
        if (static_cast<int>(vals.size()) != width)
            throw std::runtime_error(path + ":" + std::to_string(lineno) +
                                     ": inconsistent row width");
        rows.push_back(Eigen::Map<Vec>(vals.data(), static_cast<long>(vals.size())));
    }
    return from_rows(std::move(rows), d, resolution);
}

PointCloud ingest_json(const std::string& path, int d, double resolution) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("ingest: cannot open " + path);
    nlohmann::json j;
    in >> j;
    if (!j.is_array()) throw std::runtime_error(path + ": expected an array of arrays");
    std::vector<Vec> rows;
    int width = -1;
    int idx = 0;
    for (const auto& row : j) {
        ++idx;
        if (!row.is_array())
            throw std::runtime_error(path + ": element " + std::to_string(idx) + " not an array");
        std::vector<double> vals;
        for (const auto& v : row) {
            double x = v.get<double>();
            if (!std::isfinite(x))
                throw std::runtime_error(path + ": element " + std::to_string(idx) +
                                         " has a non-finite coordinate");
            vals.push_back(x);
        }
        if (width < 0) width = static_cast<int>(vals.size());
        if (static_cast<int>(vals.size()) != width)
            throw std::runtime_error(path + ": inconsistent row width at element " +
                                     std::to_string(idx));
        rows.push_back(Eigen::Map<Vec>(vals.data(), static_cast<long>(vals.size())));
    }
    return from_rows(std::move(rows), d, resolution);
}

PointCloud ingest(const std::string& path, int d, double resolution) {
    if (path.size() >= 5 && path.substr(path.size() - 5) == ".json")
        return ingest_json(path, d, resolution);
    return ingest_csv(path, d, resolution);
}

void export_csv(const PointCloud& cloud, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("export_csv: cannot open " + path);
    out.precision(17);
    for (const Vec& p : cloud.points) {
        for (int a = 0; a < p.size(); ++a) {
            if (a) out << ",";
            out << p(a);
        }
        out << "\n";
    }
}

nlohmann::json cloud_to_json(const PointCloud& cloud) {
    nlohmann::json arr = nlohmann::json::array();
    for (const Vec& p : cloud.points)
        arr.push_back(std::vector<double>(p.data(), p.data() + p.size()));
    return arr;
}

void write_json_file(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("write_json_file: cannot open " + path);
    out << j.dump(2) << "\n";
}

}  // namespace tst

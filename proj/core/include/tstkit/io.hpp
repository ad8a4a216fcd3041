#pragma once

#include "tstkit/geometry.hpp"

#include <nlohmann/json_fwd.hpp>
#include <string>

// Cloud ingestion and export. CSV: one point per row, comma-separated
// decimals. JSON: array of arrays.

namespace tst {

// Loads a cloud; the resolution defaults to the largest nearest-neighbor
// gap unless `resolution` is positive. `d` is the target intrinsic
// dimension attached to the cloud.
PointCloud ingest_csv(const std::string& path, int d, double resolution = 0.0);
PointCloud ingest_json(const std::string& path, int d, double resolution = 0.0);
PointCloud ingest(const std::string& path, int d, double resolution = 0.0);  // by extension

void export_csv(const PointCloud& cloud, const std::string& path);
nlohmann::json cloud_to_json(const PointCloud& cloud);

void write_json_file(const nlohmann::json& j, const std::string& path);

}  // namespace tst

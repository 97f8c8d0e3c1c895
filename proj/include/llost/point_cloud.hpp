#pragma once

#include <Eigen/Dense>
#include <string>

namespace llost {

// A cloud is N x 3, rows unordered. Millimeters on the ingest side,
// normalized units on the model side.
using Cloud = Eigen::MatrixXd;

// Symmetric Chamfer: mean over a of min squared distance to b, plus the
// mirrored term. Ties between equally near neighbors break to the first
// index, so the value is independent of float-summation quirks.
double chamfer(const Cloud& a, const Cloud& b);

struct CloudFrame {
    Eigen::Vector3d center = Eigen::Vector3d::Zero();
    double scale = 1.0;  // max radius before normalization
};

// Center to zero mean, scale to unit max radius. The returned frame inverts
// the transform: original = normalized * scale + center.
Cloud normalize_cloud(const Cloud& cloud, CloudFrame* frame = nullptr);
Cloud denormalize_cloud(const Cloud& cloud, const CloudFrame& frame);

// PLY with float32 x/y/z vertex properties, ascii or binary little-endian.
// Unknown extra properties are skipped on read. Throws on malformed headers,
// missing coordinate properties, empty or non-finite clouds.
Cloud read_ply(const std::string& path);
void write_ply(const Cloud& cloud, const std::string& path, bool binary = true);

}  // namespace llost

#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "llost/mesh.hpp"
#include "llost/point_cloud.hpp"

namespace llost {

// Binary segmentation volume. Storage is slice-major: slices of rows of cols,
// with world axes x = cols, y = rows, z = slices.
struct MaskVolume {
    int n_slices = 0, n_rows = 0, n_cols = 0;
    std::vector<std::uint8_t> voxels;
    Eigen::Vector3d spacing = Eigen::Vector3d::Ones();  // (dz, dy, dx) mm
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();   // (x0, y0, z0) mm

    bool at(int slice, int row, int col) const {
        return voxels[(static_cast<size_t>(slice) * n_rows + row) * n_cols + col] != 0;
    }
    std::uint8_t& ref(int slice, int row, int col) {
        return voxels[(static_cast<size_t>(slice) * n_rows + row) * n_cols + col];
    }
    void validate() const;
};

// One world point per set voxel center:
// (x, y, z) = (col*dx + x0, row*dy + y0, slice*dz + z0).
std::vector<Eigen::Vector3d> mask_to_world(const MaskVolume& mask);

struct InterpSurface {
    ScalarGrid grid;  // signed distance, negative inside
    bool single_slice_extruded = false;
};

// Per-slice 2-D signed distance fields on the nonempty slices, linearly
// interpolated along z at spacing <= target_dz, with cap slices appended so
// the zero level closes above and below. A single nonempty slice falls back
// to an extrusion of one slice thickness, flagged in the result.
InterpSurface interpolate_z(const MaskVolume& mask, double target_dz);

// Isosurface triangulation of the interpolated field, then exactly n_points
// area-uniform samples. Throws when the zero level is empty.
Cloud sample_surface(const InterpSurface& surface, int n_points, std::uint64_t seed);

Cloud ingest_mask(const MaskVolume& mask, int n_points, double target_dz, std::uint64_t seed);

// Minimal NPY (v1.0, C-order, 3-D uint8/bool) mask reader with a JSON sidecar
// {"spacing": [dz, dy, dx], "origin": [x0, y0, z0]}.
MaskVolume read_npy_mask(const std::string& npy_path, const std::string& meta_path);
void write_npy_u8(const std::string& path, int n_slices, int n_rows, int n_cols,
                  const std::vector<std::uint8_t>& data);

// 1-D squared distance transform (lower-envelope method) with sample spacing
// w; f holds squared source costs (0 at sources, large elsewhere).
void sq_distance_1d(const std::vector<double>& f, double w, std::vector<double>& out);

}  // namespace llost

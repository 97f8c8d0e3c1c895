#pragma once

#include <Eigen/Dense>
#include <array>
#include <vector>

#include "llost/point_cloud.hpp"
#include "llost/rng.hpp"

namespace llost {

struct TriMesh {
    std::vector<Eigen::Vector3d> vertices;
    std::vector<std::array<int, 3>> faces;
};

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                     const Eigen::Vector3d& c);
double mesh_area(const TriMesh& mesh);

// Unit sphere triangulation: icosahedron refined `subdiv` times, midpoints
// re-projected onto the sphere. subdiv 4 gives 5120 faces.
TriMesh icosphere(int subdiv);

// Exactly n points, triangles chosen with probability proportional to area,
// uniform barycentric placement inside each. Throws on zero total area.
Cloud sample_mesh_surface(const TriMesh& mesh, int n, Rng& rng);

// Regular scalar field on voxel centers, x-fastest storage.
struct ScalarGrid {
    int nx = 0, ny = 0, nz = 0;
    Eigen::Vector3d origin = Eigen::Vector3d::Zero();   // world position of voxel (0,0,0)
    Eigen::Vector3d spacing = Eigen::Vector3d::Ones();  // (dx, dy, dz)
    std::vector<double> values;                         // size nx*ny*nz

    double at(int x, int y, int z) const {
        return values[(static_cast<size_t>(z) * ny + y) * nx + x];
    }
    double& at(int x, int y, int z) {
        return values[(static_cast<size_t>(z) * ny + y) * nx + x];
    }
    Eigen::Vector3d world(int x, int y, int z) const {
        return origin + Eigen::Vector3d(x * spacing.x(), y * spacing.y(), z * spacing.z());
    }
};

// Zero-level surface of the field as a triangle soup. Each grid cell is cut
// into the six tetrahedra around its main diagonal; per-tet triangulation has
// no ambiguous cases, unlike cube-table marching. Inside = value < iso.
TriMesh extract_isosurface(const ScalarGrid& grid, double iso = 0.0);

}  // namespace llost

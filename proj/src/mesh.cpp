#include "llost/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <utility>

namespace llost {

double triangle_area(const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                     const Eigen::Vector3d& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

double mesh_area(const TriMesh& mesh) {
    double acc = 0.0;
    for (const auto& f : mesh.faces) {
        acc += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
    }
    return acc;
}

TriMesh icosphere(int subdiv) {
    if (subdiv < 0) throw std::invalid_argument("icosphere: subdiv must be >= 0");
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    TriMesh m;
    const double raw[12][3] = {{-1, t, 0}, {1, t, 0},   {-1, -t, 0}, {1, -t, 0},
                               {0, -1, t}, {0, 1, t},   {0, -1, -t}, {0, 1, -t},
                               {t, 0, -1}, {t, 0, 1},   {-t, 0, -1}, {-t, 0, 1}};
    for (const auto& v : raw) {
        m.vertices.push_back(Eigen::Vector3d(v[0], v[1], v[2]).normalized());
    }
    m.faces = {{0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11},
               {1, 5, 9},  {5, 11, 4}, {11, 10, 2}, {10, 7, 6}, {7, 1, 8},
               {3, 9, 4},  {3, 4, 2},  {3, 2, 6},   {3, 6, 8},  {3, 8, 9},
               {4, 9, 5},  {2, 4, 11}, {6, 2, 10},  {8, 6, 7},  {9, 8, 1}};

    for (int level = 0; level < subdiv; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            const int idx = static_cast<int>(m.vertices.size());
            m.vertices.push_back((m.vertices[a] + m.vertices[b]).normalized());
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(m.faces.size() * 4);
        for (const auto& f : m.faces) {
            const int ab = mid(f[0], f[1]);
            const int bc = mid(f[1], f[2]);
            const int ca = mid(f[2], f[0]);
            next.push_back({f[0], ab, ca});
            next.push_back({f[1], bc, ab});
            next.push_back({f[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        m.faces = std::move(next);
    }
    return m;
}

Cloud sample_mesh_surface(const TriMesh& mesh, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("sample_mesh_surface: n must be >= 1");
    std::vector<double> cum(mesh.faces.size());
    double acc = 0.0;
    for (size_t i = 0; i < mesh.faces.size(); ++i) {
        const auto& f = mesh.faces[i];
        acc += triangle_area(mesh.vertices[f[0]], mesh.vertices[f[1]], mesh.vertices[f[2]]);
        cum[i] = acc;
    }
    if (!(acc > 0.0)) throw std::runtime_error("sample_mesh_surface: degenerate zero-area mesh");

    Cloud out(n, 3);
    for (int k = 0; k < n; ++k) {
        const double u = rng.uniform() * acc;
        const size_t idx = static_cast<size_t>(
            std::upper_bound(cum.begin(), cum.end(), u) - cum.begin());
        const auto& f = mesh.faces[std::min(idx, mesh.faces.size() - 1)];
        double r1 = rng.uniform();
        double r2 = rng.uniform();
        if (r1 + r2 > 1.0) {  // fold the unit square onto the triangle
            r1 = 1.0 - r1;
            r2 = 1.0 - r2;
        }
        const Eigen::Vector3d& a = mesh.vertices[f[0]];
        const Eigen::Vector3d& b = mesh.vertices[f[1]];
        const Eigen::Vector3d& c = mesh.vertices[f[2]];
        out.row(k) = (a + r1 * (b - a) + r2 * (c - a)).transpose();
    }
    return out;
}

namespace {

// Corner i of a cell at offsets ((i>>0)&1, (i>>1)&1, (i>>2)&1). The six
// tetrahedra share the 0-7 diagonal and tile the cube exactly.
constexpr int kTets[6][4] = {{0, 1, 3, 7}, {0, 3, 2, 7}, {0, 2, 6, 7},
                             {0, 6, 4, 7}, {0, 4, 5, 7}, {0, 5, 1, 7}};

Eigen::Vector3d edge_crossing(const Eigen::Vector3d& pa, double va, const Eigen::Vector3d& pb,
                              double vb, double iso) {
    const double denom = vb - va;
    const double t = denom != 0.0 ? (iso - va) / denom : 0.5;
    return pa + std::clamp(t, 0.0, 1.0) * (pb - pa);
}

}  // namespace

TriMesh extract_isosurface(const ScalarGrid& grid, double iso) {
    TriMesh mesh;
    if (grid.nx < 2 || grid.ny < 2 || grid.nz < 2) {
        throw std::invalid_argument("extract_isosurface: grid must be at least 2 per axis");
    }
    auto emit = [&mesh](const Eigen::Vector3d& a, const Eigen::Vector3d& b,
                        const Eigen::Vector3d& c) {
        const int base = static_cast<int>(mesh.vertices.size());
        mesh.vertices.push_back(a);
        mesh.vertices.push_back(b);
        mesh.vertices.push_back(c);
        mesh.faces.push_back({base, base + 1, base + 2});
    };

    Eigen::Vector3d pos[8];
    double val[8];
    for (int z = 0; z + 1 < grid.nz; ++z) {
        for (int y = 0; y + 1 < grid.ny; ++y) {
            for (int x = 0; x + 1 < grid.nx; ++x) {
                for (int i = 0; i < 8; ++i) {
                    const int cx = x + (i & 1);
                    const int cy = y + ((i >> 1) & 1);
                    const int cz = z + ((i >> 2) & 1);
                    pos[i] = grid.world(cx, cy, cz);
                    val[i] = grid.at(cx, cy, cz);
                }
                for (const auto& tet : kTets) {
                    int inside[4];
                    int n_in = 0;
                    for (int i = 0; i < 4; ++i) {
                        if (val[tet[i]] < iso) inside[n_in++] = i;
                    }
                    if (n_in == 0 || n_in == 4) continue;
                    // Locate the crossing on each edge between differing corners.
                    bool is_in[4];
                    for (int i = 0; i < 4; ++i) is_in[i] = val[tet[i]] < iso;
                    if (n_in == 1 || n_in == 3) {
                        const bool flag = (n_in == 1);
                        int apex = -1;
                        for (int i = 0; i < 4; ++i) {
                            if (is_in[i] == flag) apex = i;
                        }
                        Eigen::Vector3d tri[3];
                        int k = 0;
                        for (int i = 0; i < 4; ++i) {
                            if (i == apex) continue;
                            tri[k++] = edge_crossing(pos[tet[apex]], val[tet[apex]], pos[tet[i]],
                                                     val[tet[i]], iso);
                        }
                        emit(tri[0], tri[1], tri[2]);
                    } else {  // 2 in, 2 out: quad split into two triangles
                        int in_idx[2], out_idx[2];
                        int a = 0, b = 0;
                        for (int i = 0; i < 4; ++i) {
                            if (is_in[i]) in_idx[a++] = i;
                            else out_idx[b++] = i;
                        }
                        const Eigen::Vector3d q00 =
                            edge_crossing(pos[tet[in_idx[0]]], val[tet[in_idx[0]]],
                                          pos[tet[out_idx[0]]], val[tet[out_idx[0]]], iso);
                        const Eigen::Vector3d q01 =
                            edge_crossing(pos[tet[in_idx[0]]], val[tet[in_idx[0]]],
                                          pos[tet[out_idx[1]]], val[tet[out_idx[1]]], iso);
                        const Eigen::Vector3d q10 =
                            edge_crossing(pos[tet[in_idx[1]]], val[tet[in_idx[1]]],
                                          pos[tet[out_idx[0]]], val[tet[out_idx[0]]], iso);
                        const Eigen::Vector3d q11 =
                            edge_crossing(pos[tet[in_idx[1]]], val[tet[in_idx[1]]],
                                          pos[tet[out_idx[1]]], val[tet[out_idx[1]]], iso);
                        emit(q00, q01, q11);
                        emit(q00, q11, q10);
                    }
                }
            }
        }
    }
    return mesh;
}

}  // namespace llost

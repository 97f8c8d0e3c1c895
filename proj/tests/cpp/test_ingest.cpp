#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <numbers>
#include <vector>

#include "llost/ingest.hpp"
#include "llost/mesh.hpp"
#include "llost/rng.hpp"
#include "test_helpers.hpp"

using namespace llost;

namespace {

MaskVolume ball_mask(int n, const Eigen::Vector3d& center, double radius) {
    MaskVolume m;
    m.n_slices = m.n_rows = m.n_cols = n;
    m.voxels.assign(static_cast<size_t>(n) * n * n, 0);
    for (int s = 0; s < n; ++s) {
        for (int r = 0; r < n; ++r) {
            for (int c = 0; c < n; ++c) {
                const double d = (Eigen::Vector3d(s, r, c) - center).norm();
                if (d <= radius) m.ref(s, r, c) = 1;
            }
        }
    }
    return m;
}

// Circle of given radius on one slice, voxel-center inclusion test.
void stamp_circle(MaskVolume& m, int slice, double row0, double col0, double radius) {
    for (int r = 0; r < m.n_rows; ++r) {
        for (int c = 0; c < m.n_cols; ++c) {
            const double d = std::hypot(r - row0, c - col0);
            if (d <= radius) m.ref(slice, r, c) = 1;
        }
    }
}

double brute_sq_1d(const std::vector<double>& f, double w, int q) {
    double best = std::numeric_limits<double>::infinity();
    for (int p = 0; p < static_cast<int>(f.size()); ++p) {
        best = std::min(best, f[p] + w * w * (q - p) * (q - p));
    }
    return best;
}

}  // namespace

TEST_CASE("1-D squared distance transform matches the brute-force envelope") {
    SUBCASE("hand case") {
        const double big = 1e18;
        std::vector<double> f = {0.0, big, big, 0.0};
        std::vector<double> out;
        sq_distance_1d(f, 2.0, out);
        REQUIRE(out.size() == 4);
        CHECK(out[0] == 0.0);
        CHECK(out[1] == 4.0);
        CHECK(out[2] == 4.0);
        CHECK(out[3] == 0.0);
    }
    SUBCASE("random source patterns") {
        Rng rng(41);
        for (double w : {0.7, 2.5}) {
            std::vector<double> f(23);
            for (auto& v : f) v = rng.uniform() < 0.3 ? rng.uniform(0.0, 5.0) : 1e18;
            f[7] = 0.0;  // at least one true source
            std::vector<double> out;
            sq_distance_1d(f, w, out);
            for (int q = 0; q < static_cast<int>(f.size()); ++q) {
                const double want = brute_sq_1d(f, w, q);
                CAPTURE(w);
                CAPTURE(q);
                CHECK(std::abs(out[static_cast<size_t>(q)] - want) <= 1e-9 * (1.0 + want));
            }
        }
    }
}

TEST_CASE("mask voxel centers map to world coordinates as (col*dx+x0, row*dy+y0, slice*dz+z0)") {
    MaskVolume m;
    m.n_slices = 2;
    m.n_rows = 3;
    m.n_cols = 4;
    m.voxels.assign(2 * 3 * 4, 0);
    m.ref(0, 0, 0) = 1;
    m.ref(1, 2, 3) = 1;

    SUBCASE("unit spacing, zero origin") {
        const auto pts = mask_to_world(m);
        REQUIRE(pts.size() == 2);
        CHECK(pts[0] == Eigen::Vector3d(0, 0, 0));
        CHECK(pts[1] == Eigen::Vector3d(3, 2, 1));
    }
    SUBCASE("anisotropic spacing and shifted origin") {
        m.spacing = Eigen::Vector3d(2.5, 1.0, 1.0);  // (dz, dy, dx)
        m.origin = Eigen::Vector3d(10.0, 0.0, 0.0);  // (x0, y0, z0)
        const auto pts = mask_to_world(m);
        REQUIRE(pts.size() == 2);
        CHECK(pts[0] == Eigen::Vector3d(10, 0, 0));
        CHECK(pts[1] == Eigen::Vector3d(13, 2, 2.5));
    }
}

TEST_CASE("mask validation rejects malformed volumes") {
    MaskVolume m;
    m.n_slices = m.n_rows = m.n_cols = 2;
    m.voxels.assign(8, 0);

    SUBCASE("empty mask") {
        CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("empty mask"), std::invalid_argument);
    }
    SUBCASE("buffer size mismatch") {
        m.voxels.resize(7);
        CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("size mismatch"),
                             std::invalid_argument);
    }
    SUBCASE("non-binary voxel") {
        m.voxels[3] = 2;
        CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("binary"), std::invalid_argument);
    }
    SUBCASE("non-positive spacing") {
        m.voxels[0] = 1;
        m.spacing[1] = 0.0;
        CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("spacing"), std::invalid_argument);
    }
    SUBCASE("non-positive dimension") {
        m.n_rows = 0;
        CHECK_THROWS_WITH_AS(m.validate(), doctest::Contains("positive"), std::invalid_argument);
    }
    SUBCASE("bad target_dz") {
        m.voxels[0] = 1;
        CHECK_THROWS_WITH_AS(interpolate_z(m, 0.0), doctest::Contains("target_dz"),
                             std::invalid_argument);
    }
}

TEST_CASE("sphere mask ingests to points on the voxel sphere") {
    const Eigen::Vector3d center(11.5, 11.5, 11.5);
    const double radius = 8.0;
    const MaskVolume m = ball_mask(24, center, radius);
    const Cloud pts = ingest_mask(m, 2048, 0.5, 17);
    REQUIRE(pts.rows() == 2048);
    REQUIRE(pts.cols() == 3);

    // World center: spacing is unit and mask indices are (slice,row,col) while
    // world is (x,y,z)=(col,row,slice), and the center is index-symmetric.
    Eigen::Vector3d centroid = pts.colwise().mean().transpose();
    CHECK((centroid - center).norm() < 0.5);

    double mean_r = 0.0;
    double worst = 0.0;
    for (int i = 0; i < pts.rows(); ++i) {
        const double r = (pts.row(i).transpose() - center).norm();
        mean_r += r;
        worst = std::max(worst, std::abs(r - radius));
    }
    mean_r /= static_cast<double>(pts.rows());
    // Voxelization quantizes the boundary and the caps close the poles within
    // one interpolation step, so individual radii wobble around the nominal one.
    CHECK(std::abs(mean_r - radius) < 0.5);
    CHECK(worst < 1.5);
}

TEST_CASE("constant cylinder keeps its radius and z extent") {
    MaskVolume m;
    m.n_slices = 13;
    m.n_rows = m.n_cols = 25;
    m.voxels.assign(static_cast<size_t>(13) * 25 * 25, 0);
    for (int s = 3; s <= 9; ++s) stamp_circle(m, s, 12.0, 12.0, 5.0);

    const Cloud pts = ingest_mask(m, 1500, 1.0, 7);
    int interior = 0;
    for (int i = 0; i < pts.rows(); ++i) {
        const double z = pts(i, 2);
        CHECK(z > 2.0 - 1e-9);   // bottom cap sits one step below the first slice
        CHECK(z < 10.0 + 1e-9);  // top cap one step above the last
        if (z > 4.0 && z < 8.0) {
            ++interior;
            const double r = std::hypot(pts(i, 0) - 12.0, pts(i, 1) - 12.0);
            CHECK(std::abs(r - 5.0) < 1.0);
        }
    }
    CHECK(interior > 300);
}

TEST_CASE("cone mask tapers linearly: mid-slice radius within a voxel") {
    MaskVolume m;
    m.n_slices = 13;
    m.n_rows = m.n_cols = 25;
    m.voxels.assign(static_cast<size_t>(13) * 25 * 25, 0);
    for (int s = 0; s < 13; ++s) stamp_circle(m, s, 12.0, 12.0, 2.0 + 0.5 * s);

    const Cloud pts = ingest_mask(m, 3000, 0.5, 23);
    int near_mid = 0;
    for (int i = 0; i < pts.rows(); ++i) {
        if (std::abs(pts(i, 2) - 6.0) <= 0.5) {
            ++near_mid;
            const double r = std::hypot(pts(i, 0) - 12.0, pts(i, 1) - 12.0);
            CHECK(std::abs(r - 5.0) < 1.0);
        }
    }
    CHECK(near_mid > 50);
}

TEST_CASE("z interpolation bridges empty slices between keyframes") {
    MaskVolume m;
    m.n_slices = 11;
    m.n_rows = m.n_cols = 25;
    m.voxels.assign(static_cast<size_t>(11) * 25 * 25, 0);
    stamp_circle(m, 2, 12.0, 12.0, 6.0);
    stamp_circle(m, 8, 12.0, 12.0, 2.0);

    const InterpSurface surf = interpolate_z(m, 0.5);
    CHECK_FALSE(surf.single_slice_extruded);
    const Cloud pts = sample_surface(surf, 3000, 3);

    int in_gap = 0, near_mid = 0;
    for (int i = 0; i < pts.rows(); ++i) {
        const double z = pts(i, 2);
        if (z > 3.0 && z < 7.0) ++in_gap;
        if (std::abs(z - 5.0) <= 0.4) {
            ++near_mid;
            // Signed distances blend linearly, so the zero level halfway
            // between a radius-6 and a radius-2 circle sits near radius 4.
            const double r = std::hypot(pts(i, 0) - 12.0, pts(i, 1) - 12.0);
            CHECK(std::abs(r - 4.0) < 1.0);
        }
    }
    CHECK(in_gap > 200);
    CHECK(near_mid > 50);
}

TEST_CASE("single nonempty slice extrudes to a thin slab") {
    MaskVolume m;
    m.n_slices = 5;
    m.n_rows = m.n_cols = 21;
    m.spacing = Eigen::Vector3d(2.0, 1.0, 1.0);
    m.voxels.assign(static_cast<size_t>(5) * 21 * 21, 0);
    stamp_circle(m, 2, 10.0, 10.0, 5.0);

    const InterpSurface surf = interpolate_z(m, 0.25);
    CHECK(surf.single_slice_extruded);
    CHECK(surf.grid.nz == 3);
    CHECK(surf.grid.spacing.z() == doctest::Approx(1.0));  // half the mask dz

    const Cloud pts = sample_surface(surf, 800, 11);
    for (int i = 0; i < pts.rows(); ++i) {
        CHECK(std::abs(pts(i, 2) - 4.0) <= 1.0 + 1e-9);  // slice z=4, extruded one step each way
        const double r = std::hypot(pts(i, 0) - 10.0, pts(i, 1) - 10.0);
        CHECK(r < 6.5);
    }
}

TEST_CASE("ingest is a pure function of mask, budget, and seed") {
    const MaskVolume m = ball_mask(16, Eigen::Vector3d(7.5, 7.5, 7.5), 5.0);
    const Cloud a = ingest_mask(m, 64, 0.5, 99);
    const Cloud b = ingest_mask(m, 64, 0.5, 99);
    CHECK((a - b).cwiseAbs().maxCoeff() == 0.0);

    const Cloud c = ingest_mask(m, 64, 0.5, 100);
    CHECK((a - c).cwiseAbs().maxCoeff() > 1e-9);

    const Cloud one = ingest_mask(m, 1, 0.5, 99);
    CHECK(one.rows() == 1);
}

TEST_CASE("scaling spacing and target step rescales the cloud in world units") {
    const MaskVolume base = ball_mask(16, Eigen::Vector3d(7.5, 7.5, 7.5), 5.0);
    MaskVolume scaled = base;
    const double c = 2.5;
    scaled.spacing *= c;

    // 10 / 0.7 is safely non-integral, so the interpolation step count cannot
    // flip on rounding between the two unit systems.
    const Cloud a = ingest_mask(base, 256, 0.7, 5);
    const Cloud b = ingest_mask(scaled, 256, 0.7 * c, 5);
    REQUIRE(b.rows() == a.rows());
    CHECK((b - c * a).cwiseAbs().maxCoeff() < 1e-9 * c);
}

TEST_CASE("surface sampling fails loudly when the zero level is empty") {
    InterpSurface surf;
    surf.grid.nx = surf.grid.ny = surf.grid.nz = 4;
    surf.grid.values.assign(64, 1.0);  // everywhere outside
    CHECK_THROWS_AS(sample_surface(surf, 10, 1), std::runtime_error);
}

TEST_CASE("npy mask round-trips through disk with its JSON sidecar") {
    testutil::TempDir dir("llost_npy");
    MaskVolume m;
    m.n_slices = 3;
    m.n_rows = 4;
    m.n_cols = 5;
    m.spacing = Eigen::Vector3d(2.0, 0.7, 1.3);
    m.origin = Eigen::Vector3d(-1.0, 2.0, 3.5);
    m.voxels.assign(60, 0);
    Rng rng(8);
    for (auto& v : m.voxels) v = rng.uniform() < 0.4 ? 1 : 0;
    m.voxels[17] = 1;
    m.validate();

    const std::string npy = dir.file("mask.npy");
    const std::string meta = dir.file("mask.json");
    write_npy_u8(npy, m.n_slices, m.n_rows, m.n_cols, m.voxels);
    {
        std::ofstream out(meta);
        out << "{\"spacing\": [2.0, 0.7, 1.3], \"origin\": [-1.0, 2.0, 3.5]}\n";
    }

    const MaskVolume back = read_npy_mask(npy, meta);
    CHECK(back.n_slices == m.n_slices);
    CHECK(back.n_rows == m.n_rows);
    CHECK(back.n_cols == m.n_cols);
    CHECK(back.voxels == m.voxels);
    CHECK(back.spacing == m.spacing);
    CHECK(back.origin == m.origin);
}

TEST_CASE("npy reader rejects what it cannot represent") {
    testutil::TempDir dir("llost_npy_bad");
    const std::string meta = dir.file("m.json");
    {
        std::ofstream out(meta);
        out << "{\"spacing\": [1, 1, 1], \"origin\": [0, 0, 0]}\n";
    }
    auto write_raw = [&](const std::string& name, const std::string& header) {
        const std::string path = dir.file(name);
        std::ofstream out(path, std::ios::binary);
        out.write("\x93NUMPY", 6);
        const char ver[2] = {1, 0};
        out.write(ver, 2);
        const std::uint16_t hlen = static_cast<std::uint16_t>(header.size());
        out.write(reinterpret_cast<const char*>(&hlen), 2);
        out.write(header.data(), static_cast<std::streamsize>(header.size()));
        const char payload[8] = {1, 0, 0, 0, 1, 0, 0, 0};
        out.write(payload, 8);
        return path;
    };

    SUBCASE("bad magic") {
        const std::string path = dir.file("bad.npy");
        std::ofstream(path, std::ios::binary) << "NOTNUMPY";
        CHECK_THROWS_WITH_AS(read_npy_mask(path, meta), doctest::Contains("bad magic"),
                             std::runtime_error);
    }
    SUBCASE("wide dtype") {
        const auto path =
            write_raw("f4.npy", "{'descr': '<f4', 'fortran_order': False, 'shape': (2, 1, 1), }\n");
        CHECK_THROWS_WITH_AS(read_npy_mask(path, meta), doctest::Contains("1-byte"),
                             std::runtime_error);
    }
    SUBCASE("wrong rank") {
        const auto path =
            write_raw("r2.npy", "{'descr': '|u1', 'fortran_order': False, 'shape': (2, 4), }\n");
        CHECK_THROWS_WITH_AS(read_npy_mask(path, meta), doctest::Contains("3-D"),
                             std::runtime_error);
    }
    SUBCASE("fortran order") {
        const auto path = write_raw(
            "f.npy", "{'descr': '|u1', 'fortran_order': True, 'shape': (2, 2, 2), }\n");
        CHECK_THROWS_WITH_AS(read_npy_mask(path, meta), doctest::Contains("fortran"),
                             std::runtime_error);
    }
    SUBCASE("missing sidecar") {
        const auto path = write_raw(
            "ok.npy", "{'descr': '|u1', 'fortran_order': False, 'shape': (2, 2, 2), }\n");
        CHECK_THROWS_WITH_AS(read_npy_mask(path, dir.file("nope.json")),
                             doctest::Contains("cannot open"), std::runtime_error);
    }
}

TEST_CASE("triangle and mesh areas match hand values") {
    const Eigen::Vector3d a(0, 0, 0), b(3, 0, 0), c(0, 4, 0);
    CHECK(triangle_area(a, b, c) == doctest::Approx(6.0));

    TriMesh m;
    m.vertices = {a, b, c, Eigen::Vector3d(0, 0, 2)};
    m.faces = {{0, 1, 2}, {0, 1, 3}};  // 6 + 3
    CHECK(mesh_area(m) == doctest::Approx(9.0));
}

TEST_CASE("icosphere refinement stays on the unit sphere") {
    const TriMesh m0 = icosphere(0);
    CHECK(m0.vertices.size() == 12);
    CHECK(m0.faces.size() == 20);

    const TriMesh m2 = icosphere(2);
    CHECK(m2.faces.size() == 320);
    CHECK(m2.vertices.size() == 162);
    for (const auto& v : m2.vertices) CHECK(std::abs(v.norm() - 1.0) < 1e-12);

    const double sphere = 4.0 * std::numbers::pi;
    CHECK(mesh_area(m2) < sphere);
    CHECK(mesh_area(m2) > 0.9 * sphere);
    CHECK_THROWS_AS(icosphere(-1), std::invalid_argument);
}

TEST_CASE("mesh sampling is area-proportional and stays on the triangles") {
    TriMesh m;
    m.vertices = {Eigen::Vector3d(0, 0, 0),  Eigen::Vector3d(1, 0, 0),  Eigen::Vector3d(0, 2, 0),
                  Eigen::Vector3d(10, 0, 0), Eigen::Vector3d(12, 0, 0), Eigen::Vector3d(10, 3, 0)};
    m.faces = {{0, 1, 2}, {3, 4, 5}};  // areas 1 and 3

    Rng rng(6);
    const int n = 40000;
    const Cloud pts = sample_mesh_surface(m, n, rng);
    int big = 0;
    for (int i = 0; i < n; ++i) {
        CHECK(pts(i, 2) == 0.0);  // barycentric combinations stay in the z=0 plane
        if (pts(i, 0) > 5.0) {
            ++big;
            CHECK((pts(i, 0) - 10.0) / 2.0 + pts(i, 1) / 3.0 <= 1.0 + 1e-12);
        } else {
            CHECK(pts(i, 0) + pts(i, 1) / 2.0 <= 1.0 + 1e-12);
        }
        CHECK(pts(i, 1) >= -1e-12);
    }
    // Expected 3/4 of the draws on the big triangle; +-400 is about 4.6 sigma.
    CHECK(big > 30000 - 400);
    CHECK(big < 30000 + 400);

    CHECK_THROWS_AS(sample_mesh_surface(m, 0, rng), std::invalid_argument);
    TriMesh degenerate;
    degenerate.vertices = {Eigen::Vector3d(0, 0, 0), Eigen::Vector3d(1, 1, 1),
                           Eigen::Vector3d(2, 2, 2)};
    degenerate.faces = {{0, 1, 2}};
    CHECK_THROWS_AS(sample_mesh_surface(degenerate, 5, rng), std::runtime_error);
}

TEST_CASE("tetrahedral isosurface of an analytic sphere lands on the sphere") {
    ScalarGrid g;
    g.nx = g.ny = g.nz = 21;
    g.origin = Eigen::Vector3d(-5, -5, -5);
    g.spacing = Eigen::Vector3d(0.5, 0.5, 0.5);
    g.values.resize(static_cast<size_t>(21) * 21 * 21);
    const double radius = 3.2;
    for (int z = 0; z < 21; ++z) {
        for (int y = 0; y < 21; ++y) {
            for (int x = 0; x < 21; ++x) g.at(x, y, z) = g.world(x, y, z).norm() - radius;
        }
    }

    const TriMesh mesh = extract_isosurface(g, 0.0);
    REQUIRE(mesh.faces.size() > 100);
    for (const auto& v : mesh.vertices) CHECK(std::abs(v.norm() - radius) < 0.1);
    const double sphere = 4.0 * std::numbers::pi * radius * radius;
    CHECK(std::abs(mesh_area(mesh) - sphere) / sphere < 0.05);

    ScalarGrid tiny;
    tiny.nx = tiny.ny = 1;
    tiny.nz = 2;
    tiny.values.assign(2, 0.0);
    CHECK_THROWS_AS(extract_isosurface(tiny, 0.0), std::invalid_argument);
}

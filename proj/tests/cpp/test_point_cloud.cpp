#include <doctest.h>

#include <Eigen/Dense>
#include <fstream>
#include <string>

#include "llost/point_cloud.hpp"
#include "llost/rng.hpp"
#include "test_helpers.hpp"

using namespace llost;
using testutil::TempDir;

namespace {

Cloud random_cloud(int n, std::uint64_t seed, double scale = 1.0) {
    Rng rng(seed);
    Cloud c(n, 3);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < 3; ++j) c(i, j) = scale * rng.normal();
    }
    return c;
}

Cloud shuffled(const Cloud& c, std::uint64_t seed) {
    Rng rng(seed);
    const std::vector<int> perm = rng.permutation(static_cast<int>(c.rows()));
    Cloud out(c.rows(), 3);
    for (Eigen::Index i = 0; i < c.rows(); ++i) out.row(i) = c.row(perm[static_cast<size_t>(i)]);
    return out;
}

}  // namespace

TEST_CASE("chamfer identity, hand value, and permutation invariance") {
    const Cloud a = random_cloud(50, 3);
    CHECK(chamfer(a, a) == 0.0);

    Cloud p1(1, 3), p2(1, 3);
    p1 << 0, 0, 0;
    p2 << 1, 0, 0;
    CHECK(chamfer(p1, p2) == doctest::Approx(2.0).epsilon(1e-12));

    const Cloud b = random_cloud(70, 4);
    const double base = chamfer(a, b);
    CHECK(chamfer(shuffled(a, 9), b) == doctest::Approx(base).epsilon(1e-12));
    CHECK(chamfer(a, shuffled(b, 10)) == doctest::Approx(base).epsilon(1e-12));
    CHECK(chamfer(b, a) == doctest::Approx(base).epsilon(1e-12));
    CHECK(base > 0.0);

    CHECK_THROWS(chamfer(Cloud(0, 3), a));
    CHECK_THROWS(chamfer(a, Cloud(2, 2)));
}

TEST_CASE("normalize_cloud centers, bounds, and inverts") {
    const Cloud c = random_cloud(40, 5, 7.0);
    CloudFrame frame;
    const Cloud n = normalize_cloud(c, &frame);
    CHECK(n.colwise().mean().cwiseAbs().maxCoeff() < 1e-12);
    CHECK(n.rowwise().norm().maxCoeff() == doctest::Approx(1.0).epsilon(1e-12));

    const Cloud back = denormalize_cloud(n, frame);
    CHECK((back - c).cwiseAbs().maxCoeff() < 1e-9);

    // A degenerate single-point cloud must not divide by zero.
    Cloud one(1, 3);
    one << 4.0, -2.0, 0.5;
    const Cloud n1 = normalize_cloud(one);
    CHECK(n1.allFinite());
}

TEST_CASE("ply binary round-trip is exact at float32") {
    TempDir tmp("ply_bin");
    const Cloud c = random_cloud(123, 11, 20.0);
    write_ply(c, tmp.file("c.ply"), /*binary=*/true);
    const Cloud r = read_ply(tmp.file("c.ply"));
    REQUIRE(r.rows() == c.rows());
    for (Eigen::Index i = 0; i < c.rows(); ++i) {
        for (int j = 0; j < 3; ++j) {
            CHECK(r(i, j) == static_cast<double>(static_cast<float>(c(i, j))));
        }
    }
}

TEST_CASE("ply ascii round-trip is float32-accurate") {
    TempDir tmp("ply_ascii");
    const Cloud c = random_cloud(60, 13, 5.0);
    write_ply(c, tmp.file("c.ply"), /*binary=*/false);
    const Cloud r = read_ply(tmp.file("c.ply"));
    REQUIRE(r.rows() == c.rows());
    CHECK((r - c).cwiseAbs().maxCoeff() < 1e-5);
}

TEST_CASE("ply negative cases carry their cause") {
    TempDir tmp("ply_neg");

    SUBCASE("missing z property") {
        std::ofstream f(tmp.file("noz.ply"));
        f << "ply\nformat ascii 1.0\nelement vertex 2\n"
          << "property float x\nproperty float y\nend_header\n0 0\n1 1\n";
        f.close();
        CHECK_THROWS_WITH_AS(read_ply(tmp.file("noz.ply")),
                             doctest::Contains("missing property z"), std::runtime_error);
    }

    SUBCASE("zero-point file") {
        std::ofstream f(tmp.file("empty.ply"));
        f << "ply\nformat ascii 1.0\nelement vertex 0\n"
          << "property float x\nproperty float y\nproperty float z\nend_header\n";
        f.close();
        CHECK_THROWS_WITH_AS(read_ply(tmp.file("empty.ply")),
                             doctest::Contains("non-empty"), std::runtime_error);
    }

    SUBCASE("malformed header") {
        std::ofstream f(tmp.file("bad.ply"));
        f << "ply\nformat ascii 1.0\nelem vertex 2\nend_header\n";
        f.close();
        CHECK_THROWS(read_ply(tmp.file("bad.ply")));
    }

    SUBCASE("non-finite coordinates rejected on write") {
        Cloud c(2, 3);
        c.setZero();
        c(1, 1) = std::numeric_limits<double>::infinity();
        CHECK_THROWS(write_ply(c, tmp.file("inf.ply")));
    }

    SUBCASE("truncated binary payload") {
        const Cloud c = random_cloud(10, 17);
        write_ply(c, tmp.file("t.ply"), true);
        // chop the last 8 bytes off
        std::ifstream in(tmp.file("t.ply"), std::ios::binary);
        std::string data((std::istreambuf_iterator<char>(in)), {});
        in.close();
        std::ofstream out(tmp.file("t.ply"), std::ios::binary | std::ios::trunc);
        out.write(data.data(), static_cast<std::streamsize>(data.size() - 8));
        out.close();
        CHECK_THROWS_WITH_AS(read_ply(tmp.file("t.ply")),
                             doctest::Contains("truncated"), std::runtime_error);
    }
}

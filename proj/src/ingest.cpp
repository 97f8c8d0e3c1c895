#include "llost/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "llost/rng.hpp"

namespace llost {

namespace {
constexpr double kFar = 1e18;
}

void MaskVolume::validate() const {
    if (n_slices < 1 || n_rows < 1 || n_cols < 1) {
        throw std::invalid_argument("mask: all dimensions must be positive");
    }
    if (voxels.size() != static_cast<size_t>(n_slices) * n_rows * n_cols) {
        throw std::invalid_argument("mask: voxel buffer size mismatch");
    }
    if ((spacing.array() <= 0.0).any()) {
        throw std::invalid_argument("mask: spacing entries must be positive");
    }
    bool any = false;
    for (std::uint8_t v : voxels) {
        if (v > 1) throw std::invalid_argument("mask: voxels must be binary");
        any = any || v != 0;
    }
    if (!any) throw std::invalid_argument("mask: empty mask");
}

std::vector<Eigen::Vector3d> mask_to_world(const MaskVolume& mask) {
    mask.validate();
    const double dz = mask.spacing[0], dy = mask.spacing[1], dx = mask.spacing[2];
    std::vector<Eigen::Vector3d> out;
    for (int s = 0; s < mask.n_slices; ++s) {
        for (int r = 0; r < mask.n_rows; ++r) {
            for (int c = 0; c < mask.n_cols; ++c) {
                if (mask.at(s, r, c)) {
                    out.emplace_back(c * dx + mask.origin[0], r * dy + mask.origin[1],
                                     s * dz + mask.origin[2]);
                }
            }
        }
    }
    return out;
}

void sq_distance_1d(const std::vector<double>& f, double w, std::vector<double>& out) {
    const int n = static_cast<int>(f.size());
    out.assign(static_cast<size_t>(n), 0.0);
    std::vector<int> v(static_cast<size_t>(n));
    std::vector<double> z(static_cast<size_t>(n) + 1);
    const double w2 = w * w;
    int k = 0;
    v[0] = 0;
    z[0] = -kFar;
    z[1] = kFar;
    for (int q = 1; q < n; ++q) {
        double s;
        for (;;) {
            const int p = v[static_cast<size_t>(k)];
            s = ((f[static_cast<size_t>(q)] + w2 * q * q) -
                 (f[static_cast<size_t>(p)] + w2 * p * p)) /
                (2.0 * w2 * (q - p));
            if (s <= z[static_cast<size_t>(k)]) {
                --k;
            } else {
                break;
            }
        }
        ++k;
        v[static_cast<size_t>(k)] = q;
        z[static_cast<size_t>(k)] = s;
        z[static_cast<size_t>(k) + 1] = kFar;
    }
    k = 0;
    for (int q = 0; q < n; ++q) {
        // Boundaries are kept in index units, matching the s formula above.
        while (z[static_cast<size_t>(k) + 1] < static_cast<double>(q)) ++k;
        const int p = v[static_cast<size_t>(k)];
        out[static_cast<size_t>(q)] = w2 * (q - p) * (q - p) + f[static_cast<size_t>(p)];
    }
}

namespace {

// Squared EDT of a rows x cols boolean set with anisotropic spacing.
// sources[r*cols + c] true marks distance-zero cells.
std::vector<double> edt2d(const std::vector<bool>& sources, int rows, int cols, double dy,
                          double dx) {
    std::vector<double> d(static_cast<size_t>(rows) * cols);
    std::vector<double> buf, res;
    // Pass 1: along columns (x direction).
    for (int r = 0; r < rows; ++r) {
        buf.assign(static_cast<size_t>(cols), 0.0);
        for (int c = 0; c < cols; ++c) {
            buf[static_cast<size_t>(c)] = sources[static_cast<size_t>(r) * cols + c] ? 0.0 : kFar;
        }
        sq_distance_1d(buf, dx, res);
        for (int c = 0; c < cols; ++c) d[static_cast<size_t>(r) * cols + c] = res[static_cast<size_t>(c)];
    }
    // Pass 2: along rows (y direction).
    for (int c = 0; c < cols; ++c) {
        buf.assign(static_cast<size_t>(rows), 0.0);
        for (int r = 0; r < rows; ++r) buf[static_cast<size_t>(r)] = d[static_cast<size_t>(r) * cols + c];
        sq_distance_1d(buf, dy, res);
        for (int r = 0; r < rows; ++r) d[static_cast<size_t>(r) * cols + c] = res[static_cast<size_t>(r)];
    }
    return d;
}

// Signed distance of one slice: positive outside, negative inside.
std::vector<double> slice_sdf(const MaskVolume& mask, int slice) {
    const int rows = mask.n_rows, cols = mask.n_cols;
    std::vector<bool> inside(static_cast<size_t>(rows) * cols), outside(inside.size());
    bool any_in = false, any_out = false;
    for (int r = 0; r < rows; ++r) {
        for (int c = 0; c < cols; ++c) {
            const bool in = mask.at(slice, r, c);
            inside[static_cast<size_t>(r) * cols + c] = in;
            outside[static_cast<size_t>(r) * cols + c] = !in;
            any_in |= in;
            any_out |= !in;
        }
    }
    const double dy = mask.spacing[1], dx = mask.spacing[2];
    const double big = std::hypot(rows * dy, cols * dx) + 1.0;
    std::vector<double> sdf(inside.size());
    if (!any_in) {
        std::fill(sdf.begin(), sdf.end(), big);
        return sdf;
    }
    const auto d_in = edt2d(inside, rows, cols, dy, dx);
    std::vector<double> d_out;
    if (any_out) d_out = edt2d(outside, rows, cols, dy, dx);
    for (size_t i = 0; i < sdf.size(); ++i) {
        const double pos = std::sqrt(d_in[i]);
        const double neg = any_out ? std::sqrt(d_out[i]) : big;
        sdf[i] = inside[i] ? -neg : pos;
        sdf[i] = std::clamp(sdf[i], -big, big);
    }
    return sdf;
}

}  // namespace

InterpSurface interpolate_z(const MaskVolume& mask, double target_dz) {
    mask.validate();
    if (!(target_dz > 0.0)) throw std::invalid_argument("interpolate_z: target_dz must be > 0");

    std::vector<int> keys;
    for (int s = 0; s < mask.n_slices; ++s) {
        bool any = false;
        for (int r = 0; r < mask.n_rows && !any; ++r) {
            for (int c = 0; c < mask.n_cols && !any; ++c) any = mask.at(s, r, c);
        }
        if (any) keys.push_back(s);
    }
    // validate() guarantees at least one nonzero voxel, so keys is non-empty.

    const int rows = mask.n_rows, cols = mask.n_cols;
    std::vector<std::vector<double>> key_sdf(keys.size());
    for (size_t i = 0; i < keys.size(); ++i) key_sdf[i] = slice_sdf(mask, keys[i]);

    const double dz_mask = mask.spacing[0];
    InterpSurface out;
    out.grid.nx = cols;
    out.grid.ny = rows;

    double step = 0.0;
    std::vector<std::vector<double>> planes;
    double z_first = 0.0;

    if (keys.size() == 1) {
        // One nonempty slice: extrude it by one slice thickness.
        out.single_slice_extruded = true;
        step = 0.5 * dz_mask;
        z_first = keys[0] * dz_mask + mask.origin[2] - step;
        const auto& s = key_sdf[0];
        const double lift = -*std::min_element(s.begin(), s.end()) + step;
        std::vector<double> cap(s.size());
        for (size_t i = 0; i < s.size(); ++i) cap[i] = s[i] + lift;
        planes = {cap, s, cap};
    } else {
        const double zA = keys.front() * dz_mask;
        const double zB = keys.back() * dz_mask;
        const int m = std::max(1, static_cast<int>(std::ceil((zB - zA) / target_dz)));
        step = (zB - zA) / m;
        z_first = zA + mask.origin[2] - step;

        planes.reserve(static_cast<size_t>(m) + 3);
        std::vector<std::vector<double>> body;
        size_t hi = 1;  // key index bounding the current z from above
        for (int j = 0; j <= m; ++j) {
            const double z = zA + step * j;
            while (hi + 1 < keys.size() && keys[static_cast<size_t>(hi)] * dz_mask < z - 1e-9) ++hi;
            const size_t lo = hi - 1;
            const double z_lo = keys[lo] * dz_mask;
            const double z_hi = keys[hi] * dz_mask;
            const double t = std::clamp((z - z_lo) / (z_hi - z_lo), 0.0, 1.0);
            std::vector<double> plane(key_sdf[lo].size());
            for (size_t i = 0; i < plane.size(); ++i) {
                plane[i] = (1.0 - t) * key_sdf[lo][i] + t * key_sdf[hi][i];
            }
            body.push_back(std::move(plane));
        }
        // Caps: lift a copy of each end slice until it is entirely outside,
        // closing the surface within one z step.
        const auto make_cap = [step](const std::vector<double>& s) {
            const double lift = -*std::min_element(s.begin(), s.end()) + step;
            std::vector<double> cap(s.size());
            for (size_t i = 0; i < s.size(); ++i) cap[i] = s[i] + lift;
            return cap;
        };
        std::vector<double> cap_lo = make_cap(body.front());
        std::vector<double> cap_hi = make_cap(body.back());
        planes.push_back(std::move(cap_lo));
        for (auto& p : body) planes.push_back(std::move(p));
        planes.push_back(std::move(cap_hi));
    }

    out.grid.nz = static_cast<int>(planes.size());
    out.grid.spacing = Eigen::Vector3d(mask.spacing[2], mask.spacing[1], step);
    out.grid.origin = Eigen::Vector3d(mask.origin[0], mask.origin[1], z_first);
    out.grid.values.resize(static_cast<size_t>(out.grid.nx) * out.grid.ny * out.grid.nz);
    for (int z = 0; z < out.grid.nz; ++z) {
        for (int y = 0; y < rows; ++y) {
            for (int x = 0; x < cols; ++x) {
                out.grid.at(x, y, z) = planes[static_cast<size_t>(z)][static_cast<size_t>(y) * cols + x];
            }
        }
    }
    return out;
}

Cloud sample_surface(const InterpSurface& surface, int n_points, std::uint64_t seed) {
    const TriMesh mesh = extract_isosurface(surface.grid, 0.0);
    Rng rng(seed);
    return sample_mesh_surface(mesh, n_points, rng);
}

Cloud ingest_mask(const MaskVolume& mask, int n_points, double target_dz, std::uint64_t seed) {
    return sample_surface(interpolate_z(mask, target_dz), n_points, seed);
}

namespace {

[[noreturn]] void npy_fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("npy: " + path + ": " + what);
}

}  // namespace

MaskVolume read_npy_mask(const std::string& npy_path, const std::string& meta_path) {
    std::ifstream in(npy_path, std::ios::binary);
    if (!in) npy_fail(npy_path, "cannot open");
    char magic[6];
    if (!in.read(magic, 6) || std::memcmp(magic, "\x93NUMPY", 6) != 0) {
        npy_fail(npy_path, "bad magic");
    }
    char ver[2];
    in.read(ver, 2);
    std::uint16_t hlen = 0;
    in.read(reinterpret_cast<char*>(&hlen), 2);
    if (!in) npy_fail(npy_path, "truncated header");
    std::string header(hlen, '\0');
    in.read(header.data(), hlen);
    if (!in) npy_fail(npy_path, "truncated header dict");

    if (header.find("'fortran_order': True") != std::string::npos) {
        npy_fail(npy_path, "fortran order unsupported");
    }
    bool dtype_ok = false;
    for (const char* d : {"|u1", "|b1", "|i1"}) {
        if (header.find(std::string("'descr': '") + d + "'") != std::string::npos) dtype_ok = true;
    }
    if (!dtype_ok) npy_fail(npy_path, "dtype must be 1-byte (|u1, |b1, or |i1)");

    const auto sp = header.find("'shape': (");
    if (sp == std::string::npos) npy_fail(npy_path, "missing shape");
    const auto ep = header.find(')', sp);
    std::string shape_str = header.substr(sp + 10, ep - sp - 10);
    for (char& c : shape_str) {
        if (c == ',') c = ' ';
    }
    std::istringstream ss(shape_str);
    std::vector<long long> dims;
    long long d;
    while (ss >> d) dims.push_back(d);
    if (dims.size() != 3) npy_fail(npy_path, "mask must be 3-D");

    MaskVolume mask;
    mask.n_slices = static_cast<int>(dims[0]);
    mask.n_rows = static_cast<int>(dims[1]);
    mask.n_cols = static_cast<int>(dims[2]);
    const size_t total = static_cast<size_t>(dims[0]) * dims[1] * dims[2];
    mask.voxels.resize(total);
    in.read(reinterpret_cast<char*>(mask.voxels.data()), static_cast<std::streamsize>(total));
    if (!in) npy_fail(npy_path, "truncated voxel data");

    std::ifstream meta(meta_path);
    if (!meta) throw std::runtime_error("cannot open " + meta_path);
    nlohmann::json j = nlohmann::json::parse(meta);
    const auto spacing = j.at("spacing").get<std::vector<double>>();
    const auto origin = j.at("origin").get<std::vector<double>>();
    if (spacing.size() != 3 || origin.size() != 3) {
        throw std::runtime_error(meta_path + ": spacing and origin must have 3 entries");
    }
    mask.spacing = Eigen::Vector3d(spacing[0], spacing[1], spacing[2]);
    mask.origin = Eigen::Vector3d(origin[0], origin[1], origin[2]);
    mask.validate();
    return mask;
}

void write_npy_u8(const std::string& path, int n_slices, int n_rows, int n_cols,
                  const std::vector<std::uint8_t>& data) {
    if (data.size() != static_cast<size_t>(n_slices) * n_rows * n_cols) {
        throw std::invalid_argument("write_npy_u8: size mismatch");
    }
    std::ostringstream dict;
    dict << "{'descr': '|u1', 'fortran_order': False, 'shape': (" << n_slices << ", " << n_rows
         << ", " << n_cols << "), }";
    std::string h = dict.str();
    const size_t unpadded = 10 + h.size() + 1;
    const size_t pad = (64 - unpadded % 64) % 64;
    h.append(pad, ' ');
    h.push_back('\n');

    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_npy_u8: cannot open " + path);
    out.write("\x93NUMPY", 6);
    const char ver[2] = {1, 0};
    out.write(ver, 2);
    const std::uint16_t hlen = static_cast<std::uint16_t>(h.size());
    out.write(reinterpret_cast<const char*>(&hlen), 2);
    out.write(h.data(), static_cast<std::streamsize>(h.size()));
    out.write(reinterpret_cast<const char*>(data.data()), static_cast<std::streamsize>(data.size()));
    if (!out) throw std::runtime_error("write_npy_u8: write failed");
}

}  // namespace llost

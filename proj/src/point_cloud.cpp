#include "llost/point_cloud.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <vector>

namespace llost {

double chamfer(const Cloud& a, const Cloud& b) {
    if (a.rows() == 0 || b.rows() == 0) throw std::invalid_argument("chamfer: empty cloud");
    if (a.cols() != 3 || b.cols() != 3) throw std::invalid_argument("chamfer: clouds must be Nx3");
    double acc_ab = 0.0;
    std::vector<double> best_b(static_cast<size_t>(b.rows()),
                               std::numeric_limits<double>::infinity());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < b.rows(); ++j) {
            const double d = (a.row(i) - b.row(j)).squaredNorm();
            if (d < best) best = d;
            if (d < best_b[static_cast<size_t>(j)]) best_b[static_cast<size_t>(j)] = d;
        }
        acc_ab += best;
    }
    double acc_ba = 0.0;
    for (double d : best_b) acc_ba += d;
    return acc_ab / static_cast<double>(a.rows()) + acc_ba / static_cast<double>(b.rows());
}

Cloud normalize_cloud(const Cloud& cloud, CloudFrame* frame) {
    if (cloud.rows() == 0) throw std::invalid_argument("normalize_cloud: empty cloud");
    CloudFrame f;
    f.center = cloud.colwise().mean();
    Cloud out = cloud.rowwise() - f.center.transpose();
    f.scale = out.rowwise().norm().maxCoeff();
    if (f.scale <= 0.0) f.scale = 1.0;  // single point or fully degenerate
    out /= f.scale;
    if (frame) *frame = f;
    return out;
}

Cloud denormalize_cloud(const Cloud& cloud, const CloudFrame& frame) {
    return (cloud * frame.scale).rowwise() + frame.center.transpose();
}

namespace {

struct PlyProperty {
    std::string name;
    int byte_size = 4;
    bool is_double = false;
};

[[noreturn]] void ply_fail(const std::string& path, const std::string& what) {
    throw std::runtime_error("ply: " + path + ": " + what);
}

int property_size(const std::string& type, const std::string& path) {
    if (type == "float" || type == "float32" || type == "int" || type == "int32" ||
        type == "uint" || type == "uint32") {
        return 4;
    }
    if (type == "double" || type == "float64") return 8;
    if (type == "short" || type == "ushort" || type == "int16" || type == "uint16") return 2;
    if (type == "char" || type == "uchar" || type == "int8" || type == "uint8") return 1;
    ply_fail(path, "unsupported property type '" + type + "'");
}

}  // namespace

Cloud read_ply(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) ply_fail(path, "cannot open");

    std::string line;
    if (!std::getline(in, line) || line.substr(0, 3) != "ply") ply_fail(path, "missing ply magic");

    bool binary = false;
    long long n_vertex = -1;
    std::vector<PlyProperty> props;
    bool in_vertex_element = false;
    bool have_format = false;

    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::istringstream ls(line);
        std::string tok;
        ls >> tok;
        if (tok == "comment" || tok.empty()) continue;
        if (tok == "format") {
            std::string fmt;
            ls >> fmt;
            if (fmt == "ascii") {
                binary = false;
            } else if (fmt == "binary_little_endian") {
                binary = true;
            } else {
                ply_fail(path, "unsupported format '" + fmt + "'");
            }
            have_format = true;
        } else if (tok == "element") {
            std::string name;
            long long count = 0;
            ls >> name >> count;
            in_vertex_element = (name == "vertex");
            if (in_vertex_element) n_vertex = count;
            else if (count > 0) ply_fail(path, "unsupported element '" + name + "'");
        } else if (tok == "property") {
            if (!in_vertex_element) continue;
            std::string type, name;
            ls >> type >> name;
            if (type == "list") ply_fail(path, "list properties unsupported");
            PlyProperty p;
            p.name = name;
            p.byte_size = property_size(type, path);
            p.is_double = (p.byte_size == 8);
            if ((name == "x" || name == "y" || name == "z") && type != "float" &&
                type != "float32") {
                ply_fail(path, "property " + name + " must be float32");
            }
            props.push_back(p);
        } else if (tok == "end_header") {
            break;
        } else {
            ply_fail(path, "unexpected header token '" + tok + "'");
        }
    }
    if (!have_format) ply_fail(path, "missing format line");
    if (n_vertex < 0) ply_fail(path, "missing vertex element");
    if (n_vertex == 0) ply_fail(path, "clouds must be non-empty");

    int ix = -1, iy = -1, iz = -1;
    for (size_t i = 0; i < props.size(); ++i) {
        if (props[i].name == "x") ix = static_cast<int>(i);
        if (props[i].name == "y") iy = static_cast<int>(i);
        if (props[i].name == "z") iz = static_cast<int>(i);
    }
    if (ix < 0) ply_fail(path, "missing property x");
    if (iy < 0) ply_fail(path, "missing property y");
    if (iz < 0) ply_fail(path, "missing property z");

    Cloud out(n_vertex, 3);
    if (binary) {
        for (long long v = 0; v < n_vertex; ++v) {
            for (size_t i = 0; i < props.size(); ++i) {
                char buf[8];
                if (!in.read(buf, props[i].byte_size)) ply_fail(path, "truncated vertex data");
                const int idx = static_cast<int>(i);
                if (idx == ix || idx == iy || idx == iz) {
                    float f;
                    std::memcpy(&f, buf, 4);
                    out(v, idx == ix ? 0 : (idx == iy ? 1 : 2)) = static_cast<double>(f);
                }
            }
        }
    } else {
        for (long long v = 0; v < n_vertex; ++v) {
            if (!std::getline(in, line)) ply_fail(path, "truncated vertex data");
            std::istringstream ls(line);
            for (size_t i = 0; i < props.size(); ++i) {
                double val;
                if (!(ls >> val)) ply_fail(path, "bad vertex line");
                const int idx = static_cast<int>(i);
                if (idx == ix || idx == iy || idx == iz) {
                    out(v, idx == ix ? 0 : (idx == iy ? 1 : 2)) = val;
                }
            }
        }
    }
    if (!out.allFinite()) ply_fail(path, "non-finite coordinates");
    return out;
}

void write_ply(const Cloud& cloud, const std::string& path, bool binary) {
    if (cloud.rows() == 0) throw std::invalid_argument("write_ply: empty cloud");
    if (cloud.cols() != 3) throw std::invalid_argument("write_ply: cloud must be Nx3");
    if (!cloud.allFinite()) throw std::invalid_argument("write_ply: non-finite coordinates");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("write_ply: cannot open " + path);
    out << "ply\n"
        << (binary ? "format binary_little_endian 1.0\n" : "format ascii 1.0\n")
        << "element vertex " << cloud.rows() << "\n"
        << "property float x\nproperty float y\nproperty float z\n"
        << "end_header\n";
    if (binary) {
        for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
            float xyz[3] = {static_cast<float>(cloud(i, 0)), static_cast<float>(cloud(i, 1)),
                            static_cast<float>(cloud(i, 2))};
            out.write(reinterpret_cast<const char*>(xyz), sizeof(xyz));
        }
    } else {
        out.precision(9);
        for (Eigen::Index i = 0; i < cloud.rows(); ++i) {
            out << static_cast<float>(cloud(i, 0)) << ' ' << static_cast<float>(cloud(i, 1)) << ' '
                << static_cast<float>(cloud(i, 2)) << '\n';
        }
    }
    if (!out) throw std::runtime_error("write_ply: write failed for " + path);
}

}  // namespace llost

// Copyright (c) 2026 The uniloss authors
// SPDX-License-Identifier: Apache-2.0

#include "uniloss/data.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <utility>

#include "uniloss/rng.hpp"

namespace uniloss::data {

// ---------------------------------------------------------------------------
// IDX I/O
// ---------------------------------------------------------------------------

namespace {

constexpr std::uint32_t kImagesMagic = 0x00000803;
constexpr std::uint32_t kLabelsMagic = 0x00000801;

std::vector<unsigned char> read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    require(in.good(), "cannot open IDX file: " + path);
    return std::vector<unsigned char>(std::istreambuf_iterator<char>(in),
                                      std::istreambuf_iterator<char>());
}

std::uint32_t be32(const unsigned char* p) {
    return (std::uint32_t(p[0]) << 24) | (std::uint32_t(p[1]) << 16) |
           (std::uint32_t(p[2]) << 8) | std::uint32_t(p[3]);
}

void put_be32(std::ofstream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

struct ParsedIdx {
    IdxInfo info;
    std::size_t payload_offset = 0;
    std::vector<unsigned char> bytes;
};

ParsedIdx parse_idx(const std::string& path) {
    ParsedIdx idx;
    idx.bytes = read_file(path);
    const auto& b = idx.bytes;
    require(b.size() >= 4, "IDX file " + path + " truncated in magic: only " +
                               std::to_string(b.size()) + " bytes at offset 0");
    idx.info.magic = be32(b.data());
    require(b[0] == 0 && b[1] == 0,
            "bad IDX magic at offset 0 in " + path + ": first two bytes must be zero");
    const unsigned dtype = b[2];
    const unsigned ndims = b[3];
    require(dtype == 0x08, "unsupported IDX element type 0x" + std::to_string(dtype) +
                               " at offset 2 in " + path + " (only ubyte 0x08 is supported)");
    require(ndims >= 1, "IDX file " + path + " declares zero dimensions at offset 3");
    require(b.size() >= 4 + 4ull * ndims,
            "IDX file " + path + " truncated in dimension list at offset " +
                std::to_string(b.size()));
    std::size_t expected = 1;
    for (unsigned i = 0; i < ndims; ++i) {
        idx.info.dims.push_back(be32(b.data() + 4 + 4 * i));
        expected *= idx.info.dims.back();
    }
    idx.payload_offset = 4 + 4ull * ndims;
    const std::size_t actual = b.size() - idx.payload_offset;
    require(actual == expected,
            "IDX payload size mismatch in " + path + ": header declares " +
                std::to_string(expected) + " bytes, file has " + std::to_string(actual) +
                " after offset " + std::to_string(idx.payload_offset));
    return idx;
}

}  // namespace

IdxInfo read_idx_info(const std::string& path) { return parse_idx(path).info; }

Tensor load_idx_images(const std::string& path) {
    ParsedIdx idx = parse_idx(path);
    require(idx.info.magic == kImagesMagic,
            "expected image magic 0x00000803 in " + path + ", found 0x" +
                [&] {
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "%08x", idx.info.magic);
                    return std::string(buf);
                }());
    const std::size_t n = idx.info.dims[0];
    const std::size_t pixels = idx.info.dims[1] * idx.info.dims[2];
    Tensor out({n, pixels});
    const unsigned char* p = idx.bytes.data() + idx.payload_offset;
    for (std::size_t i = 0; i < n * pixels; ++i)
        out[i] = static_cast<double>(p[i]) / 255.0;
    return out;
}

std::vector<int> load_idx_labels(const std::string& path) {
    ParsedIdx idx = parse_idx(path);
    require(idx.info.magic == kLabelsMagic,
            "expected label magic 0x00000801 in " + path + ", found 0x" +
                [&] {
                    char buf[16];
                    std::snprintf(buf, sizeof buf, "%08x", idx.info.magic);
                    return std::string(buf);
                }());
    const std::size_t n = idx.info.dims[0];
    const unsigned char* p = idx.bytes.data() + idx.payload_offset;
    return std::vector<int>(p, p + n);
}

void write_idx_images(const std::string& path, const Tensor& images, std::size_t rows,
                      std::size_t cols) {
    require(images.ndim() == 2 && images.cols() == rows * cols,
            "image tensor " + images.shape_str() + " does not match " + std::to_string(rows) +
                "x" + std::to_string(cols) + " pixels");
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open for write: " + path);
    put_be32(out, kImagesMagic);
    put_be32(out, static_cast<std::uint32_t>(images.rows()));
    put_be32(out, static_cast<std::uint32_t>(rows));
    put_be32(out, static_cast<std::uint32_t>(cols));
    std::vector<unsigned char> bytes(images.numel());
    for (std::size_t i = 0; i < images.numel(); ++i) {
        const double v = std::min(1.0, std::max(0.0, images[i]));
        bytes[i] = static_cast<unsigned char>(std::lround(v * 255.0));
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    require(out.good(), "short write to " + path);
}

void write_idx_labels(const std::string& path, const std::vector<int>& labels) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot open for write: " + path);
    put_be32(out, kLabelsMagic);
    put_be32(out, static_cast<std::uint32_t>(labels.size()));
    std::vector<unsigned char> bytes(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
        require(labels[i] >= 0 && labels[i] <= 255,
                "label " + std::to_string(labels[i]) + " does not fit a ubyte IDX file");
        bytes[i] = static_cast<unsigned char>(labels[i]);
    }
    out.write(reinterpret_cast<const char*>(bytes.data()),
              static_cast<std::streamsize>(bytes.size()));
    require(out.good(), "short write to " + path);
}

std::vector<std::uint8_t> make_binary_labels(const std::vector<int>& digit_labels) {
    std::vector<std::uint8_t> out(digit_labels.size());
    for (std::size_t i = 0; i < digit_labels.size(); ++i) {
        require(digit_labels[i] >= 0 && digit_labels[i] <= 9,
                "digit label " + std::to_string(digit_labels[i]) + " outside 0..9");
        out[i] = digit_labels[i] == 0 ? 1 : 0;
    }
    return out;
}

// ---------------------------------------------------------------------------
// synthetic digits
// ---------------------------------------------------------------------------

namespace {

struct Seg {
    double x1, y1, x2, y2;
};

// Stroke prototypes in the unit square (x right, y down).
std::vector<Seg> digit_strokes(int d) {
    auto loop = [](std::vector<std::pair<double, double>> pts) {
        std::vector<Seg> segs;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            const auto& a = pts[i];
            const auto& b = pts[(i + 1) % pts.size()];
            segs.push_back({a.first, a.second, b.first, b.second});
        }
        return segs;
    };
    switch (d) {
        case 0: {
            std::vector<std::pair<double, double>> pts;
            for (int k = 0; k < 8; ++k) {
                const double th = 2.0 * 3.14159265358979323846 * k / 8.0;
                pts.emplace_back(0.5 + 0.20 * std::cos(th), 0.5 + 0.30 * std::sin(th));
            }
            return loop(pts);
        }
        case 1:
            return {{0.38, 0.26, 0.54, 0.12}, {0.54, 0.12, 0.54, 0.88}};
        case 2:
            return {{0.30, 0.28, 0.38, 0.14},
                    {0.38, 0.14, 0.62, 0.12},
                    {0.62, 0.12, 0.70, 0.28},
                    {0.70, 0.28, 0.30, 0.86},
                    {0.30, 0.86, 0.72, 0.86}};
        case 3:
            return {{0.32, 0.14, 0.66, 0.14},
                    {0.66, 0.14, 0.66, 0.48},
                    {0.46, 0.48, 0.66, 0.48},
                    {0.66, 0.48, 0.66, 0.84},
                    {0.32, 0.84, 0.66, 0.84}};
        case 4:
            return {{0.60, 0.12, 0.60, 0.88}, {0.60, 0.12, 0.30, 0.60}, {0.30, 0.60, 0.78, 0.60}};
        case 5:
            return {{0.68, 0.14, 0.34, 0.14},
                    {0.34, 0.14, 0.34, 0.46},
                    {0.34, 0.46, 0.64, 0.46},
                    {0.64, 0.46, 0.66, 0.84},
                    {0.66, 0.84, 0.32, 0.84}};
        case 6:
            return {{0.62, 0.12, 0.40, 0.34},
                    {0.40, 0.34, 0.34, 0.62},
                    {0.34, 0.62, 0.40, 0.84},
                    {0.40, 0.84, 0.60, 0.84},
                    {0.60, 0.84, 0.64, 0.64},
                    {0.64, 0.64, 0.52, 0.52},
                    {0.52, 0.52, 0.36, 0.56}};
        case 7:
            return {{0.28, 0.14, 0.72, 0.14}, {0.72, 0.14, 0.44, 0.88}};
        case 8: {
            auto upper = loop({{0.50, 0.12}, {0.34, 0.30}, {0.50, 0.48}, {0.66, 0.30}});
            auto lower = loop({{0.50, 0.48}, {0.32, 0.68}, {0.50, 0.88}, {0.68, 0.68}});
            upper.insert(upper.end(), lower.begin(), lower.end());
            return upper;
        }
        case 9: {
            auto head = loop({{0.52, 0.12}, {0.36, 0.28}, {0.52, 0.44}, {0.68, 0.28}});
            head.push_back({0.68, 0.28, 0.60, 0.88});
            return head;
        }
        default:
            throw Error("digit out of range: " + std::to_string(d));
    }
}

double dist2_to_segment(double px, double py, const Seg& s) {
    const double vx = s.x2 - s.x1, vy = s.y2 - s.y1;
    const double wx = px - s.x1, wy = py - s.y1;
    const double vv = vx * vx + vy * vy;
    double t = vv > 0.0 ? (wx * vx + wy * vy) / vv : 0.0;
    t = std::min(1.0, std::max(0.0, t));
    const double dx = wx - t * vx, dy = wy - t * vy;
    return dx * dx + dy * dy;
}

}  // namespace

Dataset gen_digits(std::size_t count, std::uint64_t seed) {
    constexpr std::size_t side = 28;
    Dataset ds;
    ds.input_dim = side * side;
    ds.inputs = Tensor({count, side * side});
    ds.labels.resize(count);
    Rng rng(seed);

    for (std::size_t s = 0; s < count; ++s) {
        const int label = static_cast<int>(rng.below(10));
        ds.labels[s] = label;

        // per-sample jitter: shear -> anisotropic scale -> rotation -> shift
        const double theta = rng.uniform(-0.18, 0.18);
        const double sx = rng.uniform(0.80, 1.16);
        const double sy = rng.uniform(0.80, 1.16);
        const double shear = rng.uniform(-0.12, 0.12);
        const double tx = rng.uniform(-0.08, 0.08);
        const double ty = rng.uniform(-0.08, 0.08);
        const double amp = rng.uniform(0.70, 1.0);
        const double thick = rng.uniform(0.038, 0.058);
        const double ct = std::cos(theta), st = std::sin(theta);

        auto warp = [&](double x, double y) {
            double u = x - 0.5, v = y - 0.5;
            u += shear * v;
            u *= sx;
            v *= sy;
            const double u2 = u * ct - v * st;
            const double v2 = u * st + v * ct;
            return std::pair<double, double>{u2 + 0.5 + tx, v2 + 0.5 + ty};
        };

        std::vector<Seg> segs;
        for (const Seg& proto : digit_strokes(label)) {
            auto [ax, ay] = warp(proto.x1, proto.y1);
            auto [bx, by] = warp(proto.x2, proto.y2);
            segs.push_back({ax, ay, bx, by});
        }

        const double inv2t2 = 1.0 / (2.0 * thick * thick);
        double* row = ds.inputs.data() + s * side * side;
        for (std::size_t r = 0; r < side; ++r) {
            const double py = (static_cast<double>(r) + 0.5) / side;
            for (std::size_t c = 0; c < side; ++c) {
                const double px = (static_cast<double>(c) + 0.5) / side;
                double d2 = 1e9;
                for (const Seg& sg : segs) d2 = std::min(d2, dist2_to_segment(px, py, sg));
                row[r * side + c] = amp * std::exp(-d2 * inv2t2);
            }
        }
        for (std::size_t i = 0; i < side * side; ++i) {
            double v = row[i] + 0.10 * rng.normal();
            v = std::min(1.0, std::max(0.0, v));
            // quantize like the IDX writer so in-memory data and a
            // write/load round trip are bit-identical
            row[i] = static_cast<double>(std::lround(v * 255.0)) / 255.0;
        }
    }
    return ds;
}

void write_digit_files(const std::string& dir, std::size_t train_count, std::size_t test_count,
                       std::uint64_t seed) {
    Rng rng(seed);
    Rng train_rng = rng.spawn();
    Rng test_rng = rng.spawn();
    Dataset train = gen_digits(train_count, train_rng.next_u64());
    Dataset test = gen_digits(test_count, test_rng.next_u64());
    write_idx_images(dir + "/train-images-idx3-ubyte", train.inputs, 28, 28);
    write_idx_labels(dir + "/train-labels-idx1-ubyte", train.labels);
    write_idx_images(dir + "/t10k-images-idx3-ubyte", test.inputs, 28, 28);
    write_idx_labels(dir + "/t10k-labels-idx1-ubyte", test.labels);
}

Dataset load_image_split(const std::string& dir, const std::string& prefix) {
    Dataset ds;
    ds.inputs = load_idx_images(dir + "/" + prefix + "-images-idx3-ubyte");
    ds.labels = load_idx_labels(dir + "/" + prefix + "-labels-idx1-ubyte");
    require(ds.inputs.rows() == ds.labels.size(),
            "image/label count mismatch in " + dir + " (" + prefix + ")");
    ds.input_dim = ds.inputs.cols();
    return ds;
}

// ---------------------------------------------------------------------------
// toy pose
// ---------------------------------------------------------------------------

Dataset gen_toy_pose(const PoseGenConfig& cfg) {
    require(cfg.grid >= 4, "pose grid must be at least 4");
    require(cfg.count >= 1, "pose dataset needs at least one image");
    const std::size_t m = cfg.grid * cfg.grid;
    Dataset ds;
    ds.input_dim = m;
    ds.inputs = Tensor({cfg.count, m});
    ds.labels.resize(cfg.count);
    Rng rng(cfg.seed);
    const double inv2s2 = 1.0 / (2.0 * cfg.blob_sigma * cfg.blob_sigma);
    for (std::size_t k = 0; k < cfg.count; ++k) {
        const auto joint = static_cast<int>(rng.below(m));
        ds.labels[k] = joint;

        struct Blob {
            double row, col, amp, inv2s2;
        };
        std::vector<Blob> blobs;
        // noise-free images keep a deterministic argmax at the joint
        const bool clean = cfg.noise <= 0.0;
        blobs.push_back({static_cast<double>(joint / static_cast<int>(cfg.grid)),
                         static_cast<double>(joint % static_cast<int>(cfg.grid)),
                         clean ? 1.0 : rng.uniform(0.75, 1.0), inv2s2});
        if (!clean) {
            const double decoy_inv2s2 =
                1.0 / (2.0 * cfg.decoy_sigma * cfg.decoy_sigma);
            for (std::size_t d = 0; d < cfg.decoys; ++d) {
                const auto p = static_cast<int>(rng.below(m));
                blobs.push_back({static_cast<double>(p / static_cast<int>(cfg.grid)),
                                 static_cast<double>(p % static_cast<int>(cfg.grid)),
                                 rng.uniform(0.40, 0.68), decoy_inv2s2});
            }
        }

        double* row = ds.inputs.data() + k * m;
        for (std::size_t r = 0; r < cfg.grid; ++r)
            for (std::size_t c = 0; c < cfg.grid; ++c) {
                double v = 0.0;
                for (const Blob& b : blobs) {
                    const double dr = static_cast<double>(r) - b.row;
                    const double dc = static_cast<double>(c) - b.col;
                    v = std::max(v, b.amp * std::exp(-(dr * dr + dc * dc) * b.inv2s2));
                }
                if (cfg.noise > 0.0) v += cfg.noise * rng.normal();
                v = std::min(1.0, std::max(0.0, v));
                row[r * cfg.grid + c] = static_cast<double>(std::lround(v * 255.0)) / 255.0;
            }
    }
    return ds;
}

void write_pose_files(const std::string& dir, const std::string& prefix,
                      const PoseGenConfig& cfg) {
    require(cfg.grid <= 16, "pose IDX export needs grid <= 16 so pixel labels fit a byte");
    Dataset ds = gen_toy_pose(cfg);
    write_idx_images(dir + "/" + prefix + "-images-idx3-ubyte", ds.inputs, cfg.grid, cfg.grid);
    write_idx_labels(dir + "/" + prefix + "-labels-idx1-ubyte", ds.labels);
}

std::pair<Dataset, Dataset> split_off_validation(const Dataset& full, std::size_t reserve) {
    require(reserve >= 1 && reserve < full.size(),
            "validation reserve " + std::to_string(reserve) + " out of range for dataset of " +
                std::to_string(full.size()));
    Dataset val, train;
    val.input_dim = train.input_dim = full.input_dim;
    const std::size_t rest = full.size() - reserve;
    val.inputs = Tensor({reserve, full.input_dim});
    train.inputs = Tensor({rest, full.input_dim});
    std::copy_n(full.inputs.data(), reserve * full.input_dim, val.inputs.data());
    std::copy_n(full.inputs.data() + reserve * full.input_dim, rest * full.input_dim,
                train.inputs.data());
    val.labels.assign(full.labels.begin(), full.labels.begin() + static_cast<long>(reserve));
    train.labels.assign(full.labels.begin() + static_cast<long>(reserve), full.labels.end());
    return {std::move(train), std::move(val)};
}

Dataset take_prefix(const Dataset& full, std::size_t n) {
    if (n == 0 || n >= full.size()) return full;
    Dataset out;
    out.input_dim = full.input_dim;
    out.inputs = Tensor({n, full.input_dim});
    std::copy_n(full.inputs.data(), n * full.input_dim, out.inputs.data());
    out.labels.assign(full.labels.begin(), full.labels.begin() + static_cast<long>(n));
    return out;
}

}  // namespace uniloss::data

#include "nhl/dataset.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include "nhl/errors.hpp"

namespace nhl {

namespace {

constexpr char kMagic[4] = {'N', 'H', 'L', 'F'};
constexpr std::uint32_t kVersion = 1;

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is, const char* what) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (is.gcount() != 4) {
        throw data_error(std::string("truncated file while reading ") + what);
    }
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

void write_f32(std::ostream& os, float v) {
    std::uint32_t bits;
    std::memcpy(&bits, &v, 4);
    write_u32(os, bits);
}

}  // namespace

void validate_dataset(const Dataset& ds) {
    if (ds.features.rows != ds.labels.size()) {
        throw data_error("dataset: feature row count does not match label count");
    }
    if (ds.num_classes == 0) throw data_error("dataset: num_classes is zero");
    std::vector<bool> seen(ds.num_classes, false);
    for (std::uint32_t y : ds.labels) {
        if (y >= ds.num_classes) {
            throw data_error("dataset: label " + std::to_string(y) + " >= num_classes " +
                             std::to_string(ds.num_classes));
        }
        seen[y] = true;
    }
    for (std::uint32_t c = 0; c < ds.num_classes; ++c) {
        if (!seen[c]) throw data_error("dataset: class " + std::to_string(c) + " has no samples");
    }
    if (!all_finite(ds.features)) throw data_error("dataset: non-finite feature value");
}

Dataset gen_synthetic(std::uint32_t num_classes, std::size_t per_class, std::size_t dim,
                      double cluster_std, std::uint64_t seed) {
    if (num_classes < 2) throw config_error("gen_synthetic: num_classes must be >= 2");
    if (per_class < 4) throw config_error("gen_synthetic: per_class must be >= 4");
    if (dim < 2) throw config_error("gen_synthetic: dim must be >= 2");
    if (!(cluster_std >= 0.0)) throw config_error("gen_synthetic: cluster_std must be >= 0");

    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> center_dist(0.0, 4.0);
    std::normal_distribution<double> noise(0.0, 1.0);

    Matrix centers(num_classes, dim);
    for (double& v : centers.data) v = center_dist(rng);

    const std::size_t n = static_cast<std::size_t>(num_classes) * per_class;
    Dataset ds;
    ds.features = Matrix(n, dim);
    ds.labels.resize(n);
    ds.num_classes = num_classes;
    std::size_t r = 0;
    for (std::uint32_t c = 0; c < num_classes; ++c) {
        for (std::size_t s = 0; s < per_class; ++s, ++r) {
            double* dst = ds.features.row(r);
            const double* ctr = centers.row(c);
            for (std::size_t j = 0; j < dim; ++j) {
                dst[j] = ctr[j] + cluster_std * noise(rng);
            }
            ds.labels[r] = c;
        }
    }
    return ds;
}

void validate_split(const Dataset& ds, const Split& split) {
    const std::size_t n = ds.features.rows;
    auto check_set = [n](const std::vector<std::size_t>& idx, const char* name) {
        std::unordered_set<std::size_t> seen;
        for (std::size_t i : idx) {
            if (i >= n) throw data_error(std::string("split: ") + name + " index out of range");
            if (!seen.insert(i).second) {
                throw data_error(std::string("split: duplicate index in ") + name);
            }
        }
        return seen;
    };
    auto q = check_set(split.query_idx, "query");
    auto db = check_set(split.database_idx, "database");
    check_set(split.train_idx, "train");
    for (std::size_t i : split.query_idx) {
        if (db.count(i)) throw data_error("split: query and database overlap");
    }
    for (std::size_t i : split.train_idx) {
        if (!db.count(i)) throw data_error("split: train index not in database");
    }
}

Split make_split(const Dataset& ds, std::size_t query_per_class, std::size_t train_per_class,
                 std::uint64_t seed) {
    validate_dataset(ds);
    std::vector<std::vector<std::size_t>> by_class(ds.num_classes);
    for (std::size_t i = 0; i < ds.labels.size(); ++i) by_class[ds.labels[i]].push_back(i);

    std::mt19937_64 rng(seed);
    Split split;
    for (std::uint32_t c = 0; c < ds.num_classes; ++c) {
        auto& idx = by_class[c];
        if (query_per_class >= idx.size()) {
            throw config_error("make_split: query_per_class leaves class " + std::to_string(c) +
                               " with an empty database");
        }
        if (train_per_class > idx.size() - query_per_class) {
            throw config_error("make_split: train_per_class infeasible for class " +
                               std::to_string(c));
        }
        std::shuffle(idx.begin(), idx.end(), rng);
        split.query_idx.insert(split.query_idx.end(), idx.begin(),
                               idx.begin() + static_cast<std::ptrdiff_t>(query_per_class));
        split.database_idx.insert(split.database_idx.end(),
                                  idx.begin() + static_cast<std::ptrdiff_t>(query_per_class),
                                  idx.end());
        split.train_idx.insert(
            split.train_idx.end(), idx.begin() + static_cast<std::ptrdiff_t>(query_per_class),
            idx.begin() + static_cast<std::ptrdiff_t>(query_per_class + train_per_class));
    }
    validate_split(ds, split);
    return split;
}

namespace {

void save_nhlf(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw data_error("cannot open for writing: " + path);
    os.write(kMagic, 4);
    write_u32(os, kVersion);
    write_u32(os, static_cast<std::uint32_t>(ds.features.rows));
    write_u32(os, static_cast<std::uint32_t>(ds.features.cols));
    write_u32(os, ds.num_classes);
    for (double v : ds.features.data) write_f32(os, static_cast<float>(v));
    for (std::uint32_t y : ds.labels) write_u32(os, y);
    if (!os) throw data_error("write failed: " + path);
}

Dataset load_nhlf(std::ifstream& is, const std::string& path) {
    const std::uint32_t version = read_u32(is, "version");
    if (version != kVersion) {
        throw data_error(path + ": unsupported NHLF version " + std::to_string(version));
    }
    const std::uint32_t n = read_u32(is, "sample count");
    const std::uint32_t d = read_u32(is, "feature dim");
    const std::uint32_t c = read_u32(is, "class count");
    Dataset ds;
    ds.features = Matrix(n, d);
    ds.labels.resize(n);
    ds.num_classes = c;

    const std::size_t payload = static_cast<std::size_t>(n) * d * 4;
    std::vector<unsigned char> raw(payload);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(payload));
    if (static_cast<std::size_t>(is.gcount()) != payload) {
        throw data_error(path + ": truncated feature payload, missing " +
                         std::to_string(payload - static_cast<std::size_t>(is.gcount())) +
                         " bytes");
    }
    for (std::size_t i = 0; i < ds.features.data.size(); ++i) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b) bits |= static_cast<std::uint32_t>(raw[i * 4 + b]) << (8 * b);
        float f;
        std::memcpy(&f, &bits, 4);
        ds.features.data[i] = static_cast<double>(f);
    }
    for (std::uint32_t i = 0; i < n; ++i) {
        const std::uint32_t y = read_u32(is, "label payload");
        if (y >= c) {
            throw data_error(path + ": label " + std::to_string(y) + " at row " +
                             std::to_string(i) + " >= class count " + std::to_string(c));
        }
        ds.labels[i] = y;
    }
    validate_dataset(ds);
    return ds;
}

void save_csv(const Dataset& ds, const std::string& path) {
    std::ofstream os(path, std::ios::trunc);
    if (!os) throw data_error("cannot open for writing: " + path);
    for (std::size_t j = 0; j < ds.features.cols; ++j) os << 'f' << j << ',';
    os << "label\n";
    os.precision(17);
    for (std::size_t i = 0; i < ds.features.rows; ++i) {
        const double* row = ds.features.row(i);
        for (std::size_t j = 0; j < ds.features.cols; ++j) os << row[j] << ',';
        os << ds.labels[i] << '\n';
    }
    if (!os) throw data_error("write failed: " + path);
}

Dataset load_csv(std::ifstream& is, const std::string& path) {
    std::string line;
    if (!std::getline(is, line)) throw data_error(path + ": empty file");
    std::vector<std::string> header;
    {
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) header.push_back(cell);
    }
    std::ptrdiff_t label_col = -1;
    for (std::size_t j = 0; j < header.size(); ++j) {
        if (header[j] == "label") label_col = static_cast<std::ptrdiff_t>(j);
    }
    if (label_col < 0) throw data_error(path + ": header has no column named 'label'");
    const std::size_t d = header.size() - 1;
    if (d == 0) throw data_error(path + ": no feature columns");

    std::vector<double> feats;
    std::vector<std::uint32_t> labels;
    std::size_t line_no = 1;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            try {
                if (static_cast<std::ptrdiff_t>(col) == label_col) {
                    const long y = std::stol(cell);
                    if (y < 0) throw data_error("negative label");
                    labels.push_back(static_cast<std::uint32_t>(y));
                } else {
                    feats.push_back(std::stod(cell));
                }
            } catch (const std::exception&) {
                throw data_error(path + ": line " + std::to_string(line_no) +
                                 ": cannot parse cell '" + cell + "'");
            }
            ++col;
        }
        if (col != header.size()) {
            throw data_error(path + ": line " + std::to_string(line_no) + ": expected " +
                             std::to_string(header.size()) + " cells, got " + std::to_string(col));
        }
    }
    Dataset ds;
    ds.features = Matrix(labels.size(), d);
    ds.features.data = std::move(feats);
    ds.labels = std::move(labels);
    std::uint32_t cmax = 0;
    for (std::uint32_t y : ds.labels) cmax = std::max(cmax, y);
    ds.num_classes = ds.labels.empty() ? 0 : cmax + 1;
    validate_dataset(ds);
    return ds;
}

}  // namespace

void save_features(const Dataset& ds, const std::string& path, FileFormat format) {
    validate_dataset(ds);
    if (format == FileFormat::nhlf) {
        save_nhlf(ds, path);
    } else {
        save_csv(ds, path);
    }
}

Dataset load_features(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("cannot open: " + path);
    char magic[4] = {0, 0, 0, 0};
    is.read(magic, 4);
    if (is.gcount() == 4 && std::memcmp(magic, kMagic, 4) == 0) {
        return load_nhlf(is, path);
    }
    is.close();
    std::ifstream text(path);
    if (!text) throw data_error("cannot open: " + path);
    return load_csv(text, path);
}

}  // namespace nhl

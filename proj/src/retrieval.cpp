#include "nhl/retrieval.hpp"

#include <algorithm>
#include <bit>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <numeric>
#include <thread>

#include "nhl/errors.hpp"
#include "nhl/hash_layer.hpp"

namespace nhl {

namespace {

void write_u32(std::ostream& os, std::uint32_t v) {
    unsigned char buf[4];
    for (int i = 0; i < 4; ++i) buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
    os.write(reinterpret_cast<const char*>(buf), 4);
}

std::uint32_t read_u32(std::istream& is, const std::string& what) {
    unsigned char buf[4];
    is.read(reinterpret_cast<char*>(buf), 4);
    if (is.gcount() != 4) throw data_error("code file truncated while reading " + what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(buf[i]) << (8 * i);
    return v;
}

std::size_t eval_threads(std::size_t work_items) {
    std::size_t n = std::max<std::size_t>(1, std::thread::hardware_concurrency());
    if (const char* env = std::getenv("NHL_THREADS")) {
        const long v = std::atol(env);
        if (v >= 1) n = static_cast<std::size_t>(v);
    }
    return std::min(n, std::max<std::size_t>(1, work_items));
}

// Per-query AP and top-k precision in one ranking pass.
void query_scores(const CodeDatabase& queries, const CodeDatabase& db, const SimilarityFn& similar,
                  std::size_t k, std::vector<double>& ap, std::vector<double>& prec) {
    const std::size_t nq = queries.n;
    ap.assign(nq, 0.0);
    prec.assign(nq, 0.0);
    const std::size_t threads = eval_threads(nq);
    auto worker = [&](std::size_t t) {
        std::vector<char> rel(db.n);
        for (std::size_t q = t; q < nq; q += threads) {
            const std::vector<std::size_t> order = rank(queries.row(q), db);
            for (std::size_t r = 0; r < order.size(); ++r) {
                rel[r] = similar(queries.labels[q], db.labels[order[r]]) ? 1 : 0;
            }
            ap[q] = average_precision_at_k(rel, k);
            const std::size_t top = std::min(k, db.n);
            std::size_t hits = 0;
            for (std::size_t r = 0; r < top; ++r) hits += rel[r] ? 1 : 0;
            prec[q] = top == 0 ? 0.0 : static_cast<double>(hits) / static_cast<double>(top);
        }
    };
    if (threads <= 1) {
        worker(0);
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker, t);
        for (auto& th : pool) th.join();
    }
}

}  // namespace

CodeDatabase pack_codes(const Matrix& signs, const std::vector<std::uint32_t>& labels) {
    if (signs.rows != labels.size()) throw std::invalid_argument("pack_codes: label count mismatch");
    CodeDatabase db;
    db.n = signs.rows;
    db.bits = static_cast<std::uint32_t>(signs.cols);
    db.words_per_row = (signs.cols + 63) / 64;
    db.words.assign(db.n * db.words_per_row, 0);
    db.labels = labels;
    for (std::size_t i = 0; i < signs.rows; ++i) {
        const double* row = signs.row(i);
        std::uint64_t* out = db.words.data() + i * db.words_per_row;
        for (std::size_t j = 0; j < signs.cols; ++j) {
            if (row[j] > 0.0) out[j / 64] |= std::uint64_t{1} << (j % 64);
        }
    }
    return db;
}

Matrix unpack_codes(const CodeDatabase& db) {
    Matrix out(db.n, db.bits);
    for (std::size_t i = 0; i < db.n; ++i) {
        const std::uint64_t* row = db.row(i);
        double* dst = out.row(i);
        for (std::uint32_t j = 0; j < db.bits; ++j) {
            dst[j] = (row[j / 64] >> (j % 64)) & 1 ? 1.0 : -1.0;
        }
    }
    return out;
}

CodeDatabase encode(const Checkpoint& ckpt, const Dataset& ds,
                    const std::vector<std::size_t>& indices, std::uint32_t length) {
    if (std::find(ckpt.layer.lengths.begin(), ckpt.layer.lengths.end(), length) ==
        ckpt.layer.lengths.end()) {
        throw config_error("encode: length " + std::to_string(length) +
                           " is not one of the checkpoint's trained lengths");
    }
    Matrix x(indices.size(), ds.features.cols);
    std::vector<std::uint32_t> labels(indices.size());
    for (std::size_t i = 0; i < indices.size(); ++i) {
        if (indices[i] >= ds.features.rows) throw data_error("encode: index out of range");
        std::copy(ds.features.row(indices[i]), ds.features.row(indices[i]) + ds.features.cols,
                  x.row(i));
        labels[i] = ds.labels[indices[i]];
    }
    auto [v, cache] = mlp_forward(ckpt.backbone, x);
    const Matrix u = nhl_forward(ckpt.layer, v);
    const Matrix h = binarize(slice_cols(u, length));
    return pack_codes(h, labels);
}

std::size_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words) {
    std::size_t acc = 0;
    for (std::size_t w = 0; w < words; ++w) acc += std::popcount(a[w] ^ b[w]);
    return acc;
}

std::vector<std::size_t> rank(const std::uint64_t* query, const CodeDatabase& db) {
    std::vector<std::size_t> dist(db.n);
    for (std::size_t i = 0; i < db.n; ++i) {
        dist[i] = hamming(query, db.row(i), db.words_per_row);
    }
    std::vector<std::size_t> order(db.n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&dist](std::size_t a, std::size_t b) { return dist[a] < dist[b]; });
    return order;
}

double average_precision_at_k(const std::vector<char>& rel, std::size_t k) {
    if (k == 0) throw std::invalid_argument("average_precision_at_k: k must be >= 1");
    const std::size_t top = std::min(k, rel.size());
    double sum = 0.0;
    std::size_t hits = 0;
    for (std::size_t r = 0; r < top; ++r) {
        if (rel[r]) {
            ++hits;
            sum += static_cast<double>(hits) / static_cast<double>(r + 1);
        }
    }
    if (hits == 0) return 0.0;
    return sum / static_cast<double>(hits);
}

double map_at_k(const CodeDatabase& queries, const CodeDatabase& db, const SimilarityFn& similar,
                std::size_t k) {
    if (queries.bits != db.bits) throw std::invalid_argument("map_at_k: code length mismatch");
    if (queries.n == 0) return 0.0;
    std::vector<double> ap, prec;
    query_scores(queries, db, similar, k, ap, prec);
    double sum = 0.0;
    for (double v : ap) sum += v;
    return sum / static_cast<double>(queries.n);
}

double precision_at_k(const CodeDatabase& queries, const CodeDatabase& db,
                      const SimilarityFn& similar, std::size_t k) {
    if (queries.bits != db.bits) throw std::invalid_argument("precision_at_k: code length mismatch");
    if (queries.n == 0) return 0.0;
    std::vector<double> ap, prec;
    query_scores(queries, db, similar, k, ap, prec);
    double sum = 0.0;
    for (double v : prec) sum += v;
    return sum / static_cast<double>(queries.n);
}

void save_codes(const CodeDatabase& db, const std::string& path) {
    std::ofstream os(path, std::ios::binary | std::ios::trunc);
    if (!os) throw data_error("cannot open for writing: " + path);
    os.write("NHLB", 4);
    write_u32(os, 1);
    write_u32(os, static_cast<std::uint32_t>(db.n));
    write_u32(os, db.bits);
    for (std::uint64_t w : db.words) {
        unsigned char buf[8];
        for (int i = 0; i < 8; ++i) buf[i] = static_cast<unsigned char>((w >> (8 * i)) & 0xff);
        os.write(reinterpret_cast<const char*>(buf), 8);
    }
    for (std::uint32_t y : db.labels) write_u32(os, y);
    if (!os) throw data_error("write failed: " + path);
}

CodeDatabase load_codes(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw data_error("cannot open: " + path);
    char magic[4];
    is.read(magic, 4);
    if (is.gcount() != 4 || std::memcmp(magic, "NHLB", 4) != 0) {
        throw data_error(path + ": not an NHLB code file");
    }
    const std::uint32_t version = read_u32(is, "version");
    if (version != 1) throw data_error(path + ": unsupported code file version");
    CodeDatabase db;
    db.n = read_u32(is, "row count");
    db.bits = read_u32(is, "code length");
    db.words_per_row = (db.bits + 63) / 64;
    const std::size_t total = db.n * db.words_per_row;
    db.words.resize(total);
    std::vector<unsigned char> raw(total * 8);
    is.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(is.gcount()) != raw.size()) {
        throw data_error(path + ": truncated code payload");
    }
    for (std::size_t i = 0; i < total; ++i) {
        std::uint64_t w = 0;
        for (int b = 0; b < 8; ++b) w |= static_cast<std::uint64_t>(raw[i * 8 + b]) << (8 * b);
        db.words[i] = w;
    }
    db.labels.resize(db.n);
    for (std::size_t i = 0; i < db.n; ++i) db.labels[i] = read_u32(is, "label payload");
    return db;
}

}  // namespace nhl

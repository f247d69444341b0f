#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "nhl/dataset.hpp"
#include "nhl/matrix.hpp"
#include "nhl/trainer.hpp"

namespace nhl {

// Bit-packed binary codes plus labels. Bit j of row i is set iff code bit
// j of item i is +1; trailing pad bits are zero.
struct CodeDatabase {
    std::size_t n = 0;
    std::uint32_t bits = 0;
    std::size_t words_per_row = 0;
    std::vector<std::uint64_t> words;  // n * words_per_row
    std::vector<std::uint32_t> labels;

    const std::uint64_t* row(std::size_t i) const { return words.data() + i * words_per_row; }
};

// Pack a matrix of +-1 codes.
CodeDatabase pack_codes(const Matrix& signs, const std::vector<std::uint32_t>& labels);

// Back to +-1 rows.
Matrix unpack_codes(const CodeDatabase& db);

// Binarized codes at the requested length for the given dataset rows.
CodeDatabase encode(const Checkpoint& ckpt, const Dataset& ds,
                    const std::vector<std::size_t>& indices, std::uint32_t length);

std::size_t hamming(const std::uint64_t* a, const std::uint64_t* b, std::size_t words);

// Database indices by ascending Hamming distance, ties by ascending index.
std::vector<std::size_t> rank(const std::uint64_t* query, const CodeDatabase& db);

// rel holds relevance flags in rank order.
double average_precision_at_k(const std::vector<char>& rel, std::size_t k);

using SimilarityFn = std::function<bool(std::uint32_t, std::uint32_t)>;

// Mean AP@K over queries; k >= db.n means mAP@ALL. Parallel over queries,
// capped by the NHL_THREADS environment variable.
double map_at_k(const CodeDatabase& queries, const CodeDatabase& db, const SimilarityFn& similar,
                std::size_t k);

// Precision@K averaged over queries, same conventions.
double precision_at_k(const CodeDatabase& queries, const CodeDatabase& db,
                      const SimilarityFn& similar, std::size_t k);

void save_codes(const CodeDatabase& db, const std::string& path);
CodeDatabase load_codes(const std::string& path);

}  // namespace nhl

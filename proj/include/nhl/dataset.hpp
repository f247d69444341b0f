#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nhl/matrix.hpp"

namespace nhl {

// Labeled feature set. Features are row vectors, labels are class ids 0..C-1.
struct Dataset {
    Matrix features;                   // N x d
    std::vector<std::uint32_t> labels; // length N
    std::uint32_t num_classes = 0;
};

// Disjoint query/database index sets plus a train subset of the database.
struct Split {
    std::vector<std::size_t> train_idx;
    std::vector<std::size_t> query_idx;
    std::vector<std::size_t> database_idx;
};

enum class FileFormat { nhlf, csv };

// Class clusters: centers uniform in [0,4]^d, isotropic Gaussian noise.
Dataset gen_synthetic(std::uint32_t num_classes, std::size_t per_class, std::size_t dim,
                      double cluster_std, std::uint64_t seed);

// Per-class stratified sampling: queries first, remainder is the database,
// train drawn from the database.
Split make_split(const Dataset& ds, std::size_t query_per_class, std::size_t train_per_class,
                 std::uint64_t seed);

// Throws data_error if the split violates its invariants for ds.
void validate_split(const Dataset& ds, const Split& split);

inline bool is_similar(std::uint32_t a, std::uint32_t b) { return a == b; }

// Multi-label hook: labels as bitmasks, similar when they share a set bit.
inline bool is_similar_multilabel(std::uint32_t a, std::uint32_t b) { return (a & b) != 0; }

void save_features(const Dataset& ds, const std::string& path, FileFormat format);
Dataset load_features(const std::string& path);

void validate_dataset(const Dataset& ds);

}  // namespace nhl

#pragma once
// Minimal row-major matrix used by the selection and router training code.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "rankroute/features.hpp"

namespace rr {

struct DataMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;  // row-major

    DataMatrix() = default;
    DataMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), data(r * c, 0.0) {}

    double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
    const double* row(std::size_t r) const { return data.data() + r * cols; }

    std::vector<double> column(std::size_t c) const {
        std::vector<double> out(rows);
        for (std::size_t r = 0; r < rows; ++r) out[r] = at(r, c);
        return out;
    }

    DataMatrix select_rows(const std::vector<std::size_t>& idx) const {
        DataMatrix out(idx.size(), cols);
        for (std::size_t r = 0; r < idx.size(); ++r)
            for (std::size_t c = 0; c < cols; ++c) out.at(r, c) = at(idx[r], c);
        return out;
    }

    DataMatrix select_cols(const std::vector<std::size_t>& idx) const {
        DataMatrix out(rows, idx.size());
        for (std::size_t r = 0; r < rows; ++r)
            for (std::size_t c = 0; c < idx.size(); ++c) out.at(r, c) = at(r, idx[c]);
        return out;
    }
};

// Stacks feature vectors sharing one schema into a matrix.
struct FeatureTable {
    std::vector<std::string> ids;
    std::vector<std::string> schema;
    DataMatrix x;

    static FeatureTable from_vectors(const std::vector<FeatureVector>& fvs) {
        if (fvs.empty()) throw std::invalid_argument("FeatureTable: no vectors");
        FeatureTable t;
        t.schema = fvs.front().names;
        t.x = DataMatrix(fvs.size(), t.schema.size());
        t.ids.reserve(fvs.size());
        for (std::size_t r = 0; r < fvs.size(); ++r) {
            if (fvs[r].names != t.schema)
                throw std::invalid_argument("FeatureTable: schema mismatch at row " + std::to_string(r));
            t.ids.push_back(fvs[r].instance_id);
            for (std::size_t c = 0; c < t.schema.size(); ++c) t.x.at(r, c) = fvs[r].values[c];
        }
        return t;
    }
};

}  // namespace rr

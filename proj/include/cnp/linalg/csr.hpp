#pragma once

#include "cnp/common.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace cnp::linalg {

/// Compressed sparse row matrix; columns sorted within each row, no duplicates.
struct CsrMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr{0};
    std::vector<int> col;
    std::vector<double> val;

    CsrMatrix() = default;
    CsrMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

    std::size_t nnz() const { return col.size(); }
    /// Entry (i, j) or 0 when outside the pattern.
    double at(std::size_t i, std::size_t j) const;
    /// Checks sorted, duplicate-free columns and consistent sizes; throws on violation.
    void validate() const;
};

struct Triplet {
    int row;
    int col;
    double value;
};

/// Sums duplicate entries.
CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries);
CsrMatrix identity(std::size_t n);
CsrMatrix from_dense(std::size_t rows, std::size_t cols, std::span<const double> row_major, double drop = 0.0);
std::vector<double> to_dense(const CsrMatrix& A);

/// y = A x (parallel over rows).
void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y);
std::vector<double> spmv(const CsrMatrix& A, std::span<const double> x);
/// y = b - A x
void residual(const CsrMatrix& A, std::span<const double> x, std::span<const double> b, std::span<double> r);

CsrMatrix transpose(const CsrMatrix& A);
CsrMatrix multiply(const CsrMatrix& A, const CsrMatrix& B);
/// P^T A P
CsrMatrix galerkin_product(const CsrMatrix& P, const CsrMatrix& A);
/// Principal submatrix on sorted index set `idx`.
CsrMatrix principal_submatrix(const CsrMatrix& A, std::span<const int> idx);
/// max |A - A^T| entry.
double asymmetry(const CsrMatrix& A);

void write_matrix_market(const CsrMatrix& A, std::ostream& os);
void write_matrix_market(const CsrMatrix& A, const std::string& path);
CsrMatrix read_matrix_market(std::istream& is);
CsrMatrix read_matrix_market(const std::string& path);

/// Square grid of sparse blocks, e.g. (Phi, c_1, ..., c_{m-1}) x (Phi, c_1, ...).
struct BlockMatrix {
    int num_blocks = 0;
    std::size_t block_size = 0;
    std::vector<CsrMatrix> blocks; // row-major
    std::vector<std::string> labels;

    BlockMatrix() = default;
    BlockMatrix(int n, std::size_t size);

    CsrMatrix& operator()(int i, int j) { return blocks[static_cast<std::size_t>(i) * num_blocks + j]; }
    const CsrMatrix& operator()(int i, int j) const { return blocks[static_cast<std::size_t>(i) * num_blocks + j]; }
    std::size_t size() const { return block_size * num_blocks; }

    void apply(std::span<const double> x, std::span<double> y) const;
    /// Single CSR matrix with the blocks laid out field after field.
    CsrMatrix merged() const;
};

// Small dense helpers shared by the kernels.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);
void axpy(double a, std::span<const double> x, std::span<double> y);

} // namespace cnp::linalg

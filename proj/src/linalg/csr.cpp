#include "cnp/linalg/csr.hpp"

#include "cnp/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <sstream>

namespace cnp::linalg {

double CsrMatrix::at(std::size_t i, std::size_t j) const
{
    const auto b = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i]);
    const auto e = col.begin() + static_cast<std::ptrdiff_t>(row_ptr[i + 1]);
    const auto it = std::lower_bound(b, e, static_cast<int>(j));
    if (it == e || *it != static_cast<int>(j))
        return 0.0;
    return val[static_cast<std::size_t>(it - col.begin())];
}

void CsrMatrix::validate() const
{
    if (row_ptr.size() != rows + 1 || row_ptr.front() != 0 || row_ptr.back() != col.size() || col.size() != val.size())
        throw InvalidArgument("CSR arrays have inconsistent sizes");
    for (std::size_t i = 0; i < rows; ++i) {
        if (row_ptr[i + 1] < row_ptr[i])
            throw InvalidArgument("CSR row pointers must be nondecreasing");
        for (std::size_t k = row_ptr[i]; k < row_ptr[i + 1]; ++k) {
            if (col[k] < 0 || static_cast<std::size_t>(col[k]) >= cols)
                throw InvalidArgument("CSR column index out of range in row " + std::to_string(i));
            if (k > row_ptr[i] && col[k] <= col[k - 1])
                throw InvalidArgument("CSR columns unsorted or duplicated in row " + std::to_string(i));
        }
    }
}

CsrMatrix from_triplets(std::size_t rows, std::size_t cols, std::vector<Triplet> entries)
{
    std::sort(entries.begin(), entries.end(),
              [](const Triplet& a, const Triplet& b) { return a.row != b.row ? a.row < b.row : a.col < b.col; });
    CsrMatrix A(rows, cols);
    int last_row = -1, last_col = -1;
    for (const auto& t : entries) {
        if (t.row < 0 || static_cast<std::size_t>(t.row) >= rows || t.col < 0 || static_cast<std::size_t>(t.col) >= cols)
            throw InvalidArgument("triplet index out of range");
        if (t.row == last_row && t.col == last_col) {
            A.val.back() += t.value;
            continue;
        }
        A.col.push_back(t.col);
        A.val.push_back(t.value);
        ++A.row_ptr[static_cast<std::size_t>(t.row) + 1];
        last_row = t.row;
        last_col = t.col;
    }
    std::partial_sum(A.row_ptr.begin(), A.row_ptr.end(), A.row_ptr.begin());
    return A;
}

CsrMatrix identity(std::size_t n)
{
    CsrMatrix A(n, n);
    A.col.resize(n);
    A.val.assign(n, 1.0);
    for (std::size_t i = 0; i < n; ++i) {
        A.col[i] = static_cast<int>(i);
        A.row_ptr[i + 1] = i + 1;
    }
    return A;
}

CsrMatrix from_dense(std::size_t rows, std::size_t cols, std::span<const double> a, double drop)
{
    CsrMatrix A(rows, cols);
    for (std::size_t i = 0; i < rows; ++i) {
        for (std::size_t j = 0; j < cols; ++j) {
            const double v = a[i * cols + j];
            if (std::abs(v) > drop || (i == j && rows == cols)) {
                A.col.push_back(static_cast<int>(j));
                A.val.push_back(v);
            }
        }
        A.row_ptr[i + 1] = A.col.size();
    }
    return A;
}

std::vector<double> to_dense(const CsrMatrix& A)
{
    std::vector<double> d(A.rows * A.cols, 0.0);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            d[i * A.cols + A.col[k]] = A.val[k];
    return d;
}

void spmv(const CsrMatrix& A, std::span<const double> x, std::span<double> y)
{
    if (x.size() != A.cols || y.size() != A.rows)
        throw InvalidArgument("spmv dimension mismatch");
    constexpr std::size_t chunk = 1024;
    const std::size_t nchunks = (A.rows + chunk - 1) / chunk;
    parallel_for(0, nchunks, [&](std::size_t c) {
        const std::size_t hi = std::min(A.rows, (c + 1) * chunk);
        for (std::size_t i = c * chunk; i < hi; ++i) {
            double s = 0.0;
            for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
                s += A.val[k] * x[A.col[k]];
            y[i] = s;
        }
    });
}

std::vector<double> spmv(const CsrMatrix& A, std::span<const double> x)
{
    std::vector<double> y(A.rows);
    spmv(A, x, y);
    return y;
}

void residual(const CsrMatrix& A, std::span<const double> x, std::span<const double> b, std::span<double> r)
{
    spmv(A, x, r);
    for (std::size_t i = 0; i < r.size(); ++i)
        r[i] = b[i] - r[i];
}

CsrMatrix transpose(const CsrMatrix& A)
{
    CsrMatrix T(A.cols, A.rows);
    for (int c : A.col)
        ++T.row_ptr[static_cast<std::size_t>(c) + 1];
    std::partial_sum(T.row_ptr.begin(), T.row_ptr.end(), T.row_ptr.begin());
    T.col.resize(A.nnz());
    T.val.resize(A.nnz());
    std::vector<std::size_t> next(T.row_ptr.begin(), T.row_ptr.end() - 1);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
            const std::size_t pos = next[A.col[k]]++;
            T.col[pos] = static_cast<int>(i);
            T.val[pos] = A.val[k];
        }
    return T;
}

CsrMatrix multiply(const CsrMatrix& A, const CsrMatrix& B)
{
    if (A.cols != B.rows)
        throw InvalidArgument("matrix product dimension mismatch");
    CsrMatrix C(A.rows, B.cols);
    std::vector<double> acc(B.cols, 0.0);
    std::vector<int> marker(B.cols, -1);
    std::vector<int> cols;
    for (std::size_t i = 0; i < A.rows; ++i) {
        cols.clear();
        for (std::size_t ka = A.row_ptr[i]; ka < A.row_ptr[i + 1]; ++ka) {
            const int k = A.col[ka];
            const double a = A.val[ka];
            for (std::size_t kb = B.row_ptr[k]; kb < B.row_ptr[k + 1]; ++kb) {
                const int j = B.col[kb];
                if (marker[j] != static_cast<int>(i)) {
                    marker[j] = static_cast<int>(i);
                    acc[j] = 0.0;
                    cols.push_back(j);
                }
                acc[j] += a * B.val[kb];
            }
        }
        std::sort(cols.begin(), cols.end());
        for (int j : cols) {
            C.col.push_back(j);
            C.val.push_back(acc[j]);
        }
        C.row_ptr[i + 1] = C.col.size();
    }
    return C;
}

CsrMatrix galerkin_product(const CsrMatrix& P, const CsrMatrix& A)
{
    return multiply(transpose(P), multiply(A, P));
}

CsrMatrix principal_submatrix(const CsrMatrix& A, std::span<const int> idx)
{
    std::vector<int> local(A.cols, -1);
    for (std::size_t i = 0; i < idx.size(); ++i)
        local[idx[i]] = static_cast<int>(i);
    CsrMatrix S(idx.size(), idx.size());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const std::size_t r = static_cast<std::size_t>(idx[i]);
        for (std::size_t k = A.row_ptr[r]; k < A.row_ptr[r + 1]; ++k) {
            const int j = local[A.col[k]];
            if (j >= 0) {
                S.col.push_back(j);
                S.val.push_back(A.val[k]);
            }
        }
        S.row_ptr[i + 1] = S.col.size();
    }
    return S;
}

double asymmetry(const CsrMatrix& A)
{
    const CsrMatrix T = transpose(A);
    double m = 0.0;
    for (std::size_t i = 0; i < A.rows; ++i) {
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            m = std::max(m, std::abs(A.val[k] - T.at(i, A.col[k])));
        for (std::size_t k = T.row_ptr[i]; k < T.row_ptr[i + 1]; ++k)
            m = std::max(m, std::abs(T.val[k] - A.at(i, T.col[k])));
    }
    return m;
}

void write_matrix_market(const CsrMatrix& A, std::ostream& os)
{
    os << "%%MatrixMarket matrix coordinate real general\n";
    os << A.rows << ' ' << A.cols << ' ' << A.nnz() << '\n';
    os << std::setprecision(17);
    for (std::size_t i = 0; i < A.rows; ++i)
        for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k)
            os << i + 1 << ' ' << A.col[k] + 1 << ' ' << A.val[k] << '\n';
}

void write_matrix_market(const CsrMatrix& A, const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw Error("cannot open '" + path + "' for writing");
    write_matrix_market(A, os);
}

CsrMatrix read_matrix_market(std::istream& is)
{
    std::string line;
    if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0)
        throw InvalidArgument("missing Matrix Market banner");
    const bool symmetric = line.find("symmetric") != std::string::npos;
    if (line.find("coordinate") == std::string::npos || line.find("complex") != std::string::npos)
        throw InvalidArgument("only real coordinate Matrix Market files are supported");
    while (std::getline(is, line) && (line.empty() || line[0] == '%')) {
    }
    std::istringstream head(line);
    std::size_t rows = 0, cols = 0, nnz = 0;
    if (!(head >> rows >> cols >> nnz))
        throw InvalidArgument("bad Matrix Market size line");
    std::vector<Triplet> t;
    t.reserve(symmetric ? 2 * nnz : nnz);
    for (std::size_t k = 0; k < nnz; ++k) {
        long i = 0, j = 0;
        double v = 0.0;
        if (!(is >> i >> j >> v))
            throw InvalidArgument("truncated Matrix Market data");
        t.push_back({static_cast<int>(i - 1), static_cast<int>(j - 1), v});
        if (symmetric && i != j)
            t.push_back({static_cast<int>(j - 1), static_cast<int>(i - 1), v});
    }
    return from_triplets(rows, cols, std::move(t));
}

CsrMatrix read_matrix_market(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw Error("cannot open '" + path + "'");
    return read_matrix_market(is);
}

BlockMatrix::BlockMatrix(int n, std::size_t size)
    : num_blocks(n), block_size(size), blocks(static_cast<std::size_t>(n) * n, CsrMatrix(size, size)), labels(n)
{
}

void BlockMatrix::apply(std::span<const double> x, std::span<double> y) const
{
    if (x.size() != size() || y.size() != size())
        throw InvalidArgument("block apply dimension mismatch");
    std::vector<double> tmp(block_size);
    std::fill(y.begin(), y.end(), 0.0);
    for (int i = 0; i < num_blocks; ++i)
        for (int j = 0; j < num_blocks; ++j) {
            const auto& A = (*this)(i, j);
            if (A.nnz() == 0)
                continue;
            spmv(A, x.subspan(j * block_size, block_size), tmp);
            auto yi = y.subspan(i * block_size, block_size);
            for (std::size_t k = 0; k < block_size; ++k)
                yi[k] += tmp[k];
        }
}

CsrMatrix BlockMatrix::merged() const
{
    const std::size_t n = size();
    CsrMatrix M(n, n);
    for (int bi = 0; bi < num_blocks; ++bi)
        for (std::size_t i = 0; i < block_size; ++i) {
            for (int bj = 0; bj < num_blocks; ++bj) {
                const auto& A = (*this)(bi, bj);
                for (std::size_t k = A.row_ptr[i]; k < A.row_ptr[i + 1]; ++k) {
                    M.col.push_back(static_cast<int>(bj * block_size + A.col[k]));
                    M.val.push_back(A.val[k]);
                }
            }
            M.row_ptr[bi * block_size + i + 1] = M.col.size();
        }
    return M;
}

double dot(std::span<const double> a, std::span<const double> b)
{
    // Fixed-size partial sums keep the result independent of the worker count.
    constexpr std::size_t chunk = 4096;
    const std::size_t n = a.size();
    const std::size_t nchunks = (n + chunk - 1) / chunk;
    if (nchunks <= 1) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            s += a[i] * b[i];
        return s;
    }
    std::vector<double> part(nchunks, 0.0);
    parallel_for(0, nchunks, [&](std::size_t c) {
        const std::size_t hi = std::min(n, (c + 1) * chunk);
        double s = 0.0;
        for (std::size_t i = c * chunk; i < hi; ++i)
            s += a[i] * b[i];
        part[c] = s;
    });
    return std::accumulate(part.begin(), part.end(), 0.0);
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void axpy(double a, std::span<const double> x, std::span<double> y)
{
    for (std::size_t i = 0; i < x.size(); ++i)
        y[i] += a * x[i];
}

} // namespace cnp::linalg

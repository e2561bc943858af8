#include <batchfact/matrix.hpp>

#include "kernels.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace batchfact {

namespace {

std::string shape(index_t r, index_t c) {
    return std::to_string(r) + "x" + std::to_string(c);
}

} // namespace

template <typename T>
Matrix<T>::Matrix(index_t rows, index_t cols) : rows_(rows), cols_(cols) {
    if (rows < 0 || cols < 0)
        throw dimension_error("negative matrix dimension " + shape(rows, cols));
    data_.assign(static_cast<std::size_t>(rows * cols), T(0));
}

template <typename T>
Matrix<T>::Matrix(index_t rows, index_t cols, std::vector<T> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (rows < 0 || cols < 0 || static_cast<index_t>(data_.size()) != rows * cols)
        throw dimension_error("storage size does not match " + shape(rows, cols));
}

template <typename T>
Matrix<T> Matrix<T>::from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    const auto m = static_cast<index_t>(rows.size());
    const auto n = m == 0 ? index_t(0) : static_cast<index_t>(rows.begin()->size());
    Matrix M(m, n);
    index_t i = 0;
    for (const auto& row : rows) {
        if (static_cast<index_t>(row.size()) != n)
            throw dimension_error("ragged row in matrix literal");
        index_t j = 0;
        for (const auto& v : row)
            M(i, j++) = v;
        ++i;
    }
    return M;
}

template <typename T>
Matrix<T> Matrix<T>::identity(index_t rows, index_t cols) {
    Matrix I(rows, cols);
    for (index_t i = 0; i < std::min(rows, cols); ++i)
        I(i, i) = T(1);
    return I;
}

template <typename T>
Matrix<T> Matrix<T>::block(index_t row0, index_t col0, index_t nrows, index_t ncols) const {
    if (row0 < 0 || col0 < 0 || row0 + nrows > rows_ || col0 + ncols > cols_)
        throw dimension_error("block out of range of " + shape(rows_, cols_));
    Matrix B(nrows, ncols);
    for (index_t j = 0; j < ncols; ++j)
        std::copy_n(data_.data() + row0 + (col0 + j) * rows_, nrows, B.data() + j * nrows);
    return B;
}

template <typename T>
void Matrix<T>::set_block(index_t row0, index_t col0, const Matrix& src) {
    if (row0 < 0 || col0 < 0 || row0 + src.rows() > rows_ || col0 + src.cols() > cols_)
        throw dimension_error("block " + shape(src.rows(), src.cols()) + " does not fit into " + shape(rows_, cols_));
    for (index_t j = 0; j < src.cols(); ++j)
        std::copy_n(src.data() + j * src.rows(), src.rows(), data_.data() + row0 + (col0 + j) * rows_);
}

template <typename T>
Matrix<T> Matrix<T>::transpose() const {
    Matrix R(cols_, rows_);
    for (index_t j = 0; j < cols_; ++j)
        for (index_t i = 0; i < rows_; ++i)
            R(j, i) = (*this)(i, j);
    return R;
}

template <typename T>
void Matrix<T>::fill(T value) {
    std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
bool MatrixBatch<T>::is_uniform() const noexcept {
    return std::all_of(entries_.begin(), entries_.end(), [&](const Matrix<T>& m) {
        return m.rows() == entries_.front().rows() && m.cols() == entries_.front().cols();
    });
}

template <typename T>
void gemm(T alpha, const Matrix<T>& A, op_t opA, const Matrix<T>& B, op_t opB, T beta, Matrix<T>& C) {
    const index_t m = opA == op_t::normal ? A.rows() : A.cols();
    const index_t k = opA == op_t::normal ? A.cols() : A.rows();
    const index_t kb = opB == op_t::normal ? B.rows() : B.cols();
    const index_t n = opB == op_t::normal ? B.cols() : B.rows();

    if (k != kb || C.rows() != m || C.cols() != n)
        throw dimension_error("gemm: op(A) is " + shape(m, k) + ", op(B) is " + shape(kb, n) + ", C is " +
                              shape(C.rows(), C.cols()));

    for (index_t j = 0; j < n; ++j) {
        T* c = C.data() + j * m;
        if (beta == T(0))
            std::fill_n(c, m, T(0));
        else if (beta != T(1))
            for (index_t i = 0; i < m; ++i)
                c[i] *= beta;
    }
    if (alpha == T(0) || k == 0)
        return;

    auto b_at = [&](index_t p, index_t j) { return opB == op_t::normal ? B(p, j) : B(j, p); };

    if (opA == op_t::normal) {
        // column-oriented axpy form
        for (index_t j = 0; j < n; ++j) {
            T* c = C.data() + j * m;
            for (index_t p = 0; p < k; ++p) {
                const T s = alpha * b_at(p, j);
                if (s == T(0))
                    continue;
                const T* a = A.data() + p * m;
                for (index_t i = 0; i < m; ++i)
                    c[i] += s * a[i];
            }
        }
    } else {
        // dot form over contiguous columns of A
        std::vector<T> bj(static_cast<std::size_t>(k));
        for (index_t j = 0; j < n; ++j) {
            for (index_t p = 0; p < k; ++p)
                bj[p] = b_at(p, j);
            for (index_t i = 0; i < m; ++i) {
                C(i, j) += alpha * kernels::dot(A.data() + i * k, bj.data(), k);
            }
        }
    }
}

template <typename T>
Matrix<T> multiply(const Matrix<T>& A, const Matrix<T>& B, op_t opA, op_t opB) {
    const index_t m = opA == op_t::normal ? A.rows() : A.cols();
    const index_t n = opB == op_t::normal ? B.cols() : B.rows();
    Matrix<T> C(m, n);
    gemm(T(1), A, opA, B, opB, T(0), C);
    return C;
}

template <typename T>
Matrix<T> syrk(const Matrix<T>& A) {
    const index_t n = A.cols();
    Matrix<T> G(n, n);
    for (index_t j = 0; j < n; ++j) {
        const auto aj = A.col(j);
        for (index_t i = 0; i <= j; ++i) {
            const T s = dot<T>(A.col(i), aj);
            G(i, j) = s;
            G(j, i) = s;
        }
    }
    return G;
}

template <typename T>
T dot(std::span<const T> x, std::span<const T> y) {
    if (x.size() != y.size())
        throw dimension_error("dot: length mismatch");
    return kernels::dot(x.data(), y.data(), static_cast<index_t>(x.size()));
}

template <typename T>
T norm2(std::span<const T> x) {
    return std::sqrt(dot(x, x));
}

template <typename T>
T frobenius(const Matrix<T>& A) {
    T s(0);
    for (const T v : A.storage())
        s += v * v;
    return std::sqrt(s);
}

template <typename T>
T frobenius_diff(const Matrix<T>& A, const Matrix<T>& B) {
    if (A.rows() != B.rows() || A.cols() != B.cols())
        throw dimension_error("frobenius_diff: " + shape(A.rows(), A.cols()) + " vs " + shape(B.rows(), B.cols()));
    T s(0);
    for (index_t i = 0; i < A.size(); ++i) {
        const T d = A.data()[i] - B.data()[i];
        s += d * d;
    }
    return std::sqrt(s);
}

template <typename T>
T orthogonality_error(const Matrix<T>& A) {
    auto G = syrk(A);
    for (index_t i = 0; i < G.rows(); ++i)
        G(i, i) -= T(1);
    return frobenius(G);
}

template <typename T>
T trace(const Matrix<T>& A) {
    T s(0);
    for (index_t i = 0; i < std::min(A.rows(), A.cols()); ++i)
        s += A(i, i);
    return s;
}

template <typename T>
std::vector<T> matvec(const Matrix<T>& A, std::span<const T> x, op_t opA) {
    const index_t xn = static_cast<index_t>(x.size());
    if (opA == op_t::normal) {
        if (xn != A.cols())
            throw dimension_error("matvec: x has length " + std::to_string(xn));
        std::vector<T> y(static_cast<std::size_t>(A.rows()), T(0));
        for (index_t j = 0; j < A.cols(); ++j) {
            const T s = x[j];
            const T* a = A.data() + j * A.rows();
            for (index_t i = 0; i < A.rows(); ++i)
                y[i] += s * a[i];
        }
        return y;
    }
    if (xn != A.rows())
        throw dimension_error("matvec: x has length " + std::to_string(xn));
    std::vector<T> y(static_cast<std::size_t>(A.cols()));
    for (index_t j = 0; j < A.cols(); ++j)
        y[j] = dot<T>(A.col(j), x);
    return y;
}

template <typename T>
Matrix<T> scale_columns(const Matrix<T>& A, std::span<const T> d) {
    if (static_cast<index_t>(d.size()) != A.cols())
        throw dimension_error("scale_columns: diagonal length mismatch");
    Matrix<T> B = A;
    for (index_t j = 0; j < A.cols(); ++j)
        for (auto& v : B.col(j))
            v *= d[j];
    return B;
}

template <typename T>
void write_matrix(std::ostream& os, const Matrix<T>& A) {
    const auto flags = os.flags();
    const auto prec = os.precision();
    os << A.rows() << ' ' << A.cols() << '\n';
    os << std::setprecision(std::numeric_limits<T>::max_digits10);
    for (index_t i = 0; i < A.rows(); ++i) {
        for (index_t j = 0; j < A.cols(); ++j) {
            if (j > 0)
                os << ' ';
            os << A(i, j);
        }
        os << '\n';
    }
    os.flags(flags);
    os.precision(prec);
}

template <typename T>
Matrix<T> read_matrix(std::istream& is) {
    index_t rows = -1, cols = -1;
    if (!(is >> rows >> cols) || rows < 0 || cols < 0)
        throw std::runtime_error("matrix text: missing or invalid 'rows cols' header");
    Matrix<T> A(rows, cols);
    for (index_t i = 0; i < rows; ++i)
        for (index_t j = 0; j < cols; ++j) {
            // parse as double so that float files written with max_digits10 round-trip
            double v;
            if (!(is >> v))
                throw std::runtime_error("matrix text: expected " + std::to_string(rows * cols) + " values");
            A(i, j) = static_cast<T>(v);
        }
    return A;
}

template <typename T>
void save_matrix(const std::string& path, const Matrix<T>& A) {
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("cannot open " + path + " for writing");
    write_matrix(os, A);
}

template <typename T>
Matrix<T> load_matrix(const std::string& path) {
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("cannot open " + path);
    return read_matrix<T>(is);
}

#define BATCHFACT_INSTANTIATE(T)                                                                     \
    template class Matrix<T>;                                                                        \
    template class MatrixBatch<T>;                                                                   \
    template void gemm<T>(T, const Matrix<T>&, op_t, const Matrix<T>&, op_t, T, Matrix<T>&);        \
    template Matrix<T> multiply<T>(const Matrix<T>&, const Matrix<T>&, op_t, op_t);                  \
    template Matrix<T> syrk<T>(const Matrix<T>&);                                                    \
    template T frobenius<T>(const Matrix<T>&);                                                       \
    template T frobenius_diff<T>(const Matrix<T>&, const Matrix<T>&);                                \
    template T orthogonality_error<T>(const Matrix<T>&);                                             \
    template T trace<T>(const Matrix<T>&);                                                           \
    template T dot<T>(std::span<const T>, std::span<const T>);                                       \
    template T norm2<T>(std::span<const T>);                                                         \
    template std::vector<T> matvec<T>(const Matrix<T>&, std::span<const T>, op_t);                   \
    template Matrix<T> scale_columns<T>(const Matrix<T>&, std::span<const T>);                       \
    template void write_matrix<T>(std::ostream&, const Matrix<T>&);                                  \
    template Matrix<T> read_matrix<T>(std::istream&);                                                \
    template void save_matrix<T>(const std::string&, const Matrix<T>&);                              \
    template Matrix<T> load_matrix<T>(const std::string&);

BATCHFACT_INSTANTIATE(float)
BATCHFACT_INSTANTIATE(double)

} // namespace batchfact

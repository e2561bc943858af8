#pragma once

//
// Dense column-major matrices, homogeneous batches of them and the
// level-3 primitives the factorizations are built on.
//

#include <cstddef>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace batchfact {

using index_t = std::ptrdiff_t;

// thrown when operand shapes do not conform
class dimension_error : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class op_t { normal, transposed };

template <typename T>
class Matrix {
public:
    using value_type = T;

    Matrix() = default;
    Matrix(index_t rows, index_t cols);
    Matrix(index_t rows, index_t cols, std::vector<T> data);

    // row-major nested initializer, convenient for small literals
    static Matrix from_rows(std::initializer_list<std::initializer_list<T>> rows);
    static Matrix identity(index_t n) { return identity(n, n); }
    static Matrix identity(index_t rows, index_t cols);

    index_t rows() const noexcept { return rows_; }
    index_t cols() const noexcept { return cols_; }
    index_t size() const noexcept { return rows_ * cols_; }
    bool empty() const noexcept { return size() == 0; }

    T& operator()(index_t i, index_t j) noexcept { return data_[i + j * rows_]; }
    const T& operator()(index_t i, index_t j) const noexcept { return data_[i + j * rows_]; }

    T* data() noexcept { return data_.data(); }
    const T* data() const noexcept { return data_.data(); }

    std::span<T> col(index_t j) noexcept { return {data_.data() + j * rows_, static_cast<std::size_t>(rows_)}; }
    std::span<const T> col(index_t j) const noexcept {
        return {data_.data() + j * rows_, static_cast<std::size_t>(rows_)};
    }

    const std::vector<T>& storage() const noexcept { return data_; }

    // copies of sub-blocks; views are intentionally not offered
    Matrix block(index_t row0, index_t col0, index_t nrows, index_t ncols) const;
    Matrix columns(index_t col0, index_t ncols) const { return block(0, col0, rows_, ncols); }
    void set_block(index_t row0, index_t col0, const Matrix& src);

    Matrix transpose() const;

    void fill(T value);

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    index_t rows_ = 0;
    index_t cols_ = 0;
    std::vector<T> data_;
};

template <typename T>
class MatrixBatch {
public:
    MatrixBatch() = default;
    explicit MatrixBatch(std::vector<Matrix<T>> entries) : entries_(std::move(entries)) {}

    std::size_t count() const noexcept { return entries_.size(); }
    bool empty() const noexcept { return entries_.empty(); }

    Matrix<T>& operator[](std::size_t i) { return entries_[i]; }
    const Matrix<T>& operator[](std::size_t i) const { return entries_[i]; }

    void push_back(Matrix<T> m) { entries_.push_back(std::move(m)); }

    // true when every entry has the same shape (also for empty batches)
    bool is_uniform() const noexcept;

    std::span<const Matrix<T>> entries() const noexcept { return entries_; }
    std::vector<Matrix<T>>& entries() noexcept { return entries_; }

    auto begin() const noexcept { return entries_.begin(); }
    auto end() const noexcept { return entries_.end(); }

private:
    std::vector<Matrix<T>> entries_;
};

//
// C <- alpha * op(A) * op(B) + beta * C
//
template <typename T>
void gemm(T alpha, const Matrix<T>& A, op_t opA, const Matrix<T>& B, op_t opB, T beta, Matrix<T>& C);

// convenience form allocating C = op(A) * op(B)
template <typename T>
Matrix<T> multiply(const Matrix<T>& A, const Matrix<T>& B, op_t opA = op_t::normal, op_t opB = op_t::normal);

// G = A^T A; the upper triangle is computed and mirrored
template <typename T>
Matrix<T> syrk(const Matrix<T>& A);

template <typename T>
T frobenius(const Matrix<T>& A);

// ||A - B||_F
template <typename T>
T frobenius_diff(const Matrix<T>& A, const Matrix<T>& B);

// ||A^T A - I||_F
template <typename T>
T orthogonality_error(const Matrix<T>& A);

template <typename T>
T trace(const Matrix<T>& A);

template <typename T>
T dot(std::span<const T> x, std::span<const T> y);

template <typename T>
T norm2(std::span<const T> x);

template <typename T>
std::vector<T> matvec(const Matrix<T>& A, std::span<const T> x, op_t opA = op_t::normal);

// A * diag(d)
template <typename T>
Matrix<T> scale_columns(const Matrix<T>& A, std::span<const T> d);

//
// Text format: first line "rows cols", then the entries one matrix row per
// line (row-major reading order). Storage remains column-major.
//
template <typename T>
void write_matrix(std::ostream& os, const Matrix<T>& A);

template <typename T>
Matrix<T> read_matrix(std::istream& is);

template <typename T>
void save_matrix(const std::string& path, const Matrix<T>& A);

template <typename T>
Matrix<T> load_matrix(const std::string& path);

} // namespace batchfact

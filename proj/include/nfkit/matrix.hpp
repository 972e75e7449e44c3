#pragma once

#include <vector>

#include "nfkit/errors.hpp"
#include "nfkit/scalar.hpp"

namespace nfkit {

// Small dense row-major matrix over an arbitrary scalar.
template <class S>
class DenseMatrix {
public:
    DenseMatrix() = default;
    DenseMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, ScalarTraits<S>::zero()) {}

    static DenseMatrix identity(int n) {
        DenseMatrix m(n, n);
        for (int i = 0; i < n; ++i) m(i, i) = ScalarTraits<S>::one();
        return m;
    }

    int rows() const { return rows_; }
    int cols() const { return cols_; }
    bool empty() const { return rows_ == 0 || cols_ == 0; }

    S& operator()(int i, int j) { return data_[static_cast<std::size_t>(i) * cols_ + j]; }
    const S& operator()(int i, int j) const { return data_[static_cast<std::size_t>(i) * cols_ + j]; }

    friend DenseMatrix operator*(const DenseMatrix& a, const DenseMatrix& b) {
        if (a.cols_ != b.rows_) throw DimensionError("matrix product shape mismatch");
        DenseMatrix c(a.rows_, b.cols_);
        for (int i = 0; i < a.rows_; ++i)
            for (int k = 0; k < a.cols_; ++k)
                for (int j = 0; j < b.cols_; ++j) c(i, j) += a(i, k) * b(k, j);
        return c;
    }

    friend DenseMatrix operator-(const DenseMatrix& a) {
        DenseMatrix c = a;
        for (auto& v : c.data_) v = -v;
        return c;
    }

    bool is_upper_triangular() const {
        for (int i = 0; i < rows_; ++i)
            for (int j = 0; j < i && j < cols_; ++j)
                if (!ScalarTraits<S>::is_zero((*this)(i, j))) return false;
        return true;
    }

private:
    int rows_ = 0;
    int cols_ = 0;
    std::vector<S> data_;
};

template <class To, class From>
DenseMatrix<To> convert_matrix(const DenseMatrix<From>& m) {
    DenseMatrix<To> r(m.rows(), m.cols());
    for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
            r(i, j) = ScalarTraits<To>::from_complex(ScalarTraits<From>::to_complex(m(i, j)));
    return r;
}

using CMatrix = DenseMatrix<Complex>;

}  // namespace nfkit

// SPDX-License-Identifier: Apache-2.0
//
// raindoa - array simulation and multi-task DoA / rain-rate estimation toolkit
// Copyright (C) 2026 raindoa developers
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef raindoa_linalg_H
#define raindoa_linalg_H

// Dense matrix helpers and the solvers the estimators are built on:
// complex Hermitian Jacobi eigendecomposition, pivoted Cholesky for
// positive semidefinite matrices, HPD Cholesky solves and Laguerre
// polynomial root finding. Matrices here are small (M ~ 10), so the
// implementations favor robustness and determinism over blocking.

#include <cstddef>
#include <vector>

#include "raindoa/common.hpp"

namespace raindoa::linalg
{
    class RealMatrix
    {
    public:
        RealMatrix() = default;
        RealMatrix(std::size_t rows, std::size_t cols, double fill = 0.0)
            : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

        static RealMatrix identity(std::size_t n)
        {
            RealMatrix m(n, n);
            for (std::size_t i = 0; i < n; ++i)
                m(i, i) = 1.0;
            return m;
        }
        static RealMatrix ones(std::size_t rows, std::size_t cols)
        {
            return RealMatrix(rows, cols, 1.0);
        }

        double &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
        double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

        std::size_t rows() const { return rows_; }
        std::size_t cols() const { return cols_; }
        double *data() { return data_.data(); }
        const double *data() const { return data_.data(); }

        double trace() const
        {
            double t = 0.0;
            for (std::size_t i = 0; i < rows_ && i < cols_; ++i)
                t += (*this)(i, i);
            return t;
        }

    private:
        std::size_t rows_ = 0, cols_ = 0;
        std::vector<double> data_;
    };

    class ComplexMatrix
    {
    public:
        ComplexMatrix() = default;
        ComplexMatrix(std::size_t rows, std::size_t cols, cplx fill = {})
            : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

        static ComplexMatrix identity(std::size_t n)
        {
            ComplexMatrix m(n, n);
            for (std::size_t i = 0; i < n; ++i)
                m(i, i) = 1.0;
            return m;
        }

        cplx &operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
        cplx operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

        std::size_t rows() const { return rows_; }
        std::size_t cols() const { return cols_; }
        cplx *data() { return data_.data(); }
        const cplx *data() const { return data_.data(); }

        cplx trace() const
        {
            cplx t = 0.0;
            for (std::size_t i = 0; i < rows_ && i < cols_; ++i)
                t += (*this)(i, i);
            return t;
        }

        ComplexMatrix adjoint() const
        {
            ComplexMatrix m(cols_, rows_);
            for (std::size_t i = 0; i < rows_; ++i)
                for (std::size_t j = 0; j < cols_; ++j)
                    m(j, i) = std::conj((*this)(i, j));
            return m;
        }

    private:
        std::size_t rows_ = 0, cols_ = 0;
        std::vector<cplx> data_;
    };

    ComplexMatrix multiply(const ComplexMatrix &a, const ComplexMatrix &b);
    double frobenius(const ComplexMatrix &a);
    double frobenius(const RealMatrix &a);
    double max_abs_diff(const ComplexMatrix &a, const ComplexMatrix &b);
    double max_abs_diff(const RealMatrix &a, const RealMatrix &b);

    // max_{ij} |A - A^H| entrywise; zero for an exactly Hermitian matrix.
    double max_hermitian_defect(const ComplexMatrix &a);

    // Eigendecomposition of a Hermitian matrix by cyclic Jacobi rotations.
    // Eigenvalues are returned in descending order; eigenvectors (columns of
    // `vectors`) are unit norm with the first component of significant
    // magnitude rotated to be real nonnegative so the output is deterministic.
    struct HermitianEig
    {
        std::vector<double> values;
        ComplexMatrix vectors;
    };
    HermitianEig hermitian_eig(const ComplexMatrix &a);

    struct SymmetricEig
    {
        std::vector<double> values;
        RealMatrix vectors;
    };
    SymmetricEig symmetric_eig(const RealMatrix &a);

    // Pivoted Cholesky factor F (n x rank) of a real PSD matrix, F * F^T = A.
    // Diagonal entries below rel_floor * trace are treated as zero; entries
    // below -rel_floor * trace mean the matrix is not PSD and raise ModelError.
    RealMatrix psd_cholesky_factor(const RealMatrix &a, double rel_floor = 1e-10);

    // Lower-triangular L with L * L^H = A for Hermitian positive definite A.
    ComplexMatrix hpd_cholesky(const ComplexMatrix &a);

    // Solves A x = b given the factor from hpd_cholesky.
    std::vector<cplx> hpd_solve(const ComplexMatrix &chol_lower, const std::vector<cplx> &b);

    // All roots of p(z) = sum_k coeffs[k] z^k (ascending powers) via Laguerre
    // iteration with deflation, then a polishing pass on the original
    // polynomial. Leading zero coefficients are stripped.
    std::vector<cplx> poly_roots(const std::vector<cplx> &coeffs);
}

#endif

// SPDX-License-Identifier: Apache-2.0
//
// Little-endian CSR stream:
//   "CSR1" | u32 rows | u32 cols | u64 nnz | u8 scalar width (4 or 8)
//   | u64 indptr[rows+1] | u32 indices[nnz] | scalar data[nnz]
#pragma once

#include <filesystem>
#include <iosfwd>
#include <variant>

#include "scanprop/sparse.hpp"

namespace scanprop::sparse {

using AnyCsr = std::variant<CsrMatrix<float>, CsrMatrix<double>>;

template <typename T>
void write_csr(std::ostream& out, const CsrMatrix<T>& m);

/// Throws FormatError on a bad magic, unsupported width, truncation or
/// structurally invalid content.
AnyCsr read_csr(std::istream& in);

/// Reads either width and converts the values to T.
template <typename T>
CsrMatrix<T> read_csr_as(std::istream& in);

template <typename T>
void save_csr(const std::filesystem::path& path, const CsrMatrix<T>& m);
AnyCsr load_csr(const std::filesystem::path& path);

}  // namespace scanprop::sparse

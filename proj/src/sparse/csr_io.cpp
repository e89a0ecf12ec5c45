// SPDX-License-Identifier: Apache-2.0
#include "scanprop/csr_io.hpp"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <limits>
#include <istream>
#include <ostream>
#include <string>

#include "scanprop/error.hpp"
#include "../byte_io.hpp"

namespace scanprop::sparse {

namespace {

using detail::put_le;
template <typename U>
U get_le(std::istream& in) { return detail::get_le<U>(in, "CSR"); }
template <typename T>
using Bits = detail::BitsOf<T>;

constexpr std::array<char, 4> kMagic{'C', 'S', 'R', '1'};

template <typename T>
CsrMatrix<T> read_body(std::istream& in, std::uint32_t rows, std::uint32_t cols, std::uint64_t nnz) {
    std::vector<Offset> indptr(static_cast<std::size_t>(rows) + 1);
    for (auto& p : indptr) p = get_le<std::uint64_t>(in);
    std::vector<Index> indices(nnz);
    for (auto& c : indices) c = get_le<std::uint32_t>(in);
    std::vector<T> data(nnz);
    for (auto& v : data) v = std::bit_cast<T>(get_le<Bits<T>>(in));
    return CsrMatrix<T>(rows, cols, std::move(indptr), std::move(indices), std::move(data));
}

template <typename To, typename From>
CsrMatrix<To> convert(const CsrMatrix<From>& m) {
    std::vector<To> data(m.data().begin(), m.data().end());
    return CsrMatrix<To>(m.shared_pattern(), std::move(data));
}

}  // namespace

template <typename T>
void write_csr(std::ostream& out, const CsrMatrix<T>& m) {
    out.write(kMagic.data(), kMagic.size());
    put_le<std::uint32_t>(out, m.rows());
    put_le<std::uint32_t>(out, m.cols());
    put_le<std::uint64_t>(out, m.nnz());
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(sizeof(T)));
    for (const Offset p : m.indptr()) put_le<std::uint64_t>(out, p);
    for (const Index c : m.indices()) put_le<std::uint32_t>(out, c);
    for (const T v : m.data()) put_le<Bits<T>>(out, std::bit_cast<Bits<T>>(v));
    if (!out) throw FormatError("failed writing CSR stream");
}

AnyCsr read_csr(std::istream& in) {
    std::array<char, 4> magic{};
    in.read(magic.data(), magic.size());
    if (!in || magic != kMagic) throw FormatError("not a CSR1 stream");
    const auto rows = get_le<std::uint32_t>(in);
    const auto cols = get_le<std::uint32_t>(in);
    const auto nnz = get_le<std::uint64_t>(in);
    const auto width = get_le<std::uint8_t>(in);
    if (nnz > std::numeric_limits<std::uint32_t>::max()) throw FormatError("CSR nnz exceeds 32-bit column ids");
    if (width == 4) return read_body<float>(in, rows, cols, nnz);
    if (width == 8) return read_body<double>(in, rows, cols, nnz);
    throw FormatError("unsupported CSR scalar width " + std::to_string(width));
}

template <typename T>
CsrMatrix<T> read_csr_as(std::istream& in) {
    return std::visit([](const auto& m) { return convert<T>(m); }, read_csr(in));
}

template <typename T>
void save_csr(const std::filesystem::path& path, const CsrMatrix<T>& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open " + path.string() + " for writing");
    write_csr(out, m);
}

AnyCsr load_csr(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open " + path.string());
    return read_csr(in);
}

template void write_csr<float>(std::ostream&, const CsrMatrix<float>&);
template void write_csr<double>(std::ostream&, const CsrMatrix<double>&);
template CsrMatrix<float> read_csr_as<float>(std::istream&);
template CsrMatrix<double> read_csr_as<double>(std::istream&);
template void save_csr<float>(const std::filesystem::path&, const CsrMatrix<float>&);
template void save_csr<double>(const std::filesystem::path&, const CsrMatrix<double>&);

}  // namespace scanprop::sparse

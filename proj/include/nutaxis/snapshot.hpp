#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "nutaxis/csv.hpp"
#include "nutaxis/errors.hpp"
#include "nutaxis/grid.hpp"
#include "nutaxis/solver.hpp"

namespace nutaxis {

// Binary state snapshot, little-endian throughout:
//   "NTX1" | u8 dim | u64 cells[dim] | f64 lengths[dim] | f64 time
//   | f64 u values (row-major) | f64 v values
// Round trips are bit exact.

static_assert(std::endian::native == std::endian::little,
              "snapshot layout assumes a little-endian host");

namespace detail {

template <class T>
void put_raw(std::string& buf, const T& v) {
    char tmp[sizeof(T)];
    std::memcpy(tmp, &v, sizeof(T));
    buf.append(tmp, sizeof(T));
}

template <class T>
T get_raw(const std::string& buf, std::size_t& off) {
    if (off + sizeof(T) > buf.size())
        throw SnapshotError(SnapshotError::Kind::Truncated, "snapshot: unexpected end of file");
    T v;
    std::memcpy(&v, buf.data() + off, sizeof(T));
    off += sizeof(T);
    return v;
}

} // namespace detail

inline void write_snapshot(const SimState& s, const std::filesystem::path& path) {
    const Grid& g = s.u.grid;
    std::string buf;
    buf.reserve(16 + static_cast<std::size_t>(g.cell_count) * 16);
    buf.append("NTX1", 4);
    detail::put_raw<std::uint8_t>(buf, static_cast<std::uint8_t>(g.dim));
    for (int a = 0; a < g.dim; ++a)
        detail::put_raw<std::uint64_t>(buf, static_cast<std::uint64_t>(g.cells[a]));
    for (int a = 0; a < g.dim; ++a) detail::put_raw<double>(buf, g.lengths[a]);
    detail::put_raw<double>(buf, s.t);
    for (double v : s.u.values) detail::put_raw<double>(buf, v);
    for (double v : s.v.values) detail::put_raw<double>(buf, v);
    atomic_write_bytes(path, buf);
}

inline SimState read_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw SnapshotError(SnapshotError::Kind::Io, "cannot open " + path.string());
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

    if (buf.size() < 5 || buf.compare(0, 4, "NTX1") != 0)
        throw SnapshotError(SnapshotError::Kind::BadMagic, "snapshot: bad magic in " + path.string());
    std::size_t off = 4;

    const auto dim = detail::get_raw<std::uint8_t>(buf, off);
    if (dim < 1 || dim > 3)
        throw SnapshotError(SnapshotError::Kind::DimMismatch,
                            "snapshot: dimension " + std::to_string(int(dim)) + " not in {1,2,3}");

    std::vector<index_t> cells(dim);
    for (int a = 0; a < dim; ++a) {
        const auto c = detail::get_raw<std::uint64_t>(buf, off);
        if (c < 2 || c > (1ull << 40))
            throw SnapshotError(SnapshotError::Kind::Malformed, "snapshot: bad cell count");
        cells[a] = static_cast<index_t>(c);
    }
    std::vector<double> lengths(dim);
    for (int a = 0; a < dim; ++a) {
        lengths[a] = detail::get_raw<double>(buf, off);
        if (!(lengths[a] > 0.0))
            throw SnapshotError(SnapshotError::Kind::Malformed, "snapshot: bad length");
    }
    const Grid g = make_grid(dim, cells, lengths);

    SimState s;
    s.t = detail::get_raw<double>(buf, off);
    if (!(s.t >= 0.0))
        throw SnapshotError(SnapshotError::Kind::Malformed, "snapshot: negative time");
    s.u = Field(g);
    s.v = Field(g);
    for (index_t i = 0; i < g.cell_count; ++i) s.u[i] = detail::get_raw<double>(buf, off);
    for (index_t i = 0; i < g.cell_count; ++i) s.v[i] = detail::get_raw<double>(buf, off);
    if (off != buf.size())
        throw SnapshotError(SnapshotError::Kind::Malformed, "snapshot: trailing bytes");
    for (double x : s.u.values)
        if (!(x >= 0.0))
            throw SnapshotError(SnapshotError::Kind::Malformed, "snapshot: negative u value");
    for (double x : s.v.values)
        if (!(x >= 0.0))
            throw SnapshotError(SnapshotError::Kind::Malformed, "snapshot: negative v value");
    return s;
}

} // namespace nutaxis

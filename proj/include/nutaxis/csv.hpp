#pragma once

#include <charconv>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "nutaxis/diagnostics.hpp"
#include "nutaxis/errors.hpp"

namespace nutaxis {

// Shortest decimal representation that parses back to the same double, so
// verdicts recomputed from CSV match the in-memory ones bit for bit.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view s) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Error("not a real number: '" + std::string(s) + "'");
    return v;
}

// Write-then-rename so readers never observe a partial file.
inline void atomic_write_bytes(const std::filesystem::path& path, std::string_view bytes) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) {
        std::error_code ec;
        fs::create_directories(path.parent_path(), ec);
    }
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw SnapshotError(SnapshotError::Kind::Io, "cannot open " + tmp.string());
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw SnapshotError(SnapshotError::Kind::Io, "short write to " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw SnapshotError(SnapshotError::Kind::Io,
                                "rename " + tmp.string() + " -> " + path.string() + ": " + ec.message());
}

inline constexpr const char* kSeriesHeader =
    "t,a,b,a_plus_xi_b,u_linf,v_linf,grad_v_linf,energy_E,lyapunov_F,res_u,res_v";

inline std::string series_csv_text(const DiagnosticsRecord& rec) {
    std::string out(kSeriesHeader);
    out += '\n';
    for (std::size_t i = 0; i < rec.size(); ++i) {
        out += format_double(rec.times[i]);
        for (const std::vector<double>* col :
             {&rec.a, &rec.b, &rec.combined, &rec.u_linf, &rec.v_linf, &rec.grad_v_linf,
              &rec.energy_E, &rec.lyapunov_F, &rec.res_u, &rec.res_v}) {
            out += ',';
            out += format_double((*col)[i]);
        }
        out += '\n';
    }
    return out;
}

inline void write_series_csv(const std::filesystem::path& path, const DiagnosticsRecord& rec) {
    atomic_write_bytes(path, series_csv_text(rec));
}

inline DiagnosticsRecord read_series_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SnapshotError(SnapshotError::Kind::Io, "cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line)) throw Error("series csv: empty file " + path.string());
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != kSeriesHeader)
        throw Error("series csv: unexpected header '" + line + "'");

    DiagnosticsRecord rec;
    std::vector<std::vector<double>*> cols{&rec.times,  &rec.a,        &rec.b,
                                           &rec.combined, &rec.u_linf, &rec.v_linf,
                                           &rec.grad_v_linf, &rec.energy_E, &rec.lyapunov_F,
                                           &rec.res_u,  &rec.res_v};
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::size_t start = 0, col = 0;
        while (col < cols.size()) {
            const std::size_t comma = line.find(',', start);
            const std::string_view cell(line.data() + start,
                                        (comma == std::string::npos ? line.size() : comma) - start);
            double v;
            if (cell == "nan" || cell == "-nan")
                v = std::numeric_limits<double>::quiet_NaN();
            else
                v = parse_double(cell);
            cols[col]->push_back(v);
            ++col;
            if (comma == std::string::npos) break;
            start = comma + 1;
        }
        if (col != cols.size())
            throw Error("series csv: wrong column count at line " + std::to_string(line_no));
    }
    return rec;
}

} // namespace nutaxis

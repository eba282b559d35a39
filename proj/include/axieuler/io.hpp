#pragma once

#include "axieuler/euler.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace axieuler {

// ---------------------------------------------------------------------------
// Hashing
// ---------------------------------------------------------------------------

using Digest = std::array<unsigned char, 32>;

inline Digest sha256(const void* data, std::size_t n) {
    Digest d{};
    unsigned len = 0;
    if (EVP_Digest(data, n, d.data(), &len, EVP_sha256(), nullptr) != 1 || len != d.size())
        throw RuntimeFailure("sha256: digest failed");
    return d;
}
inline Digest sha256(const std::string& s) { return sha256(s.data(), s.size()); }

inline std::string hex(const Digest& d) {
    static const char* k = "0123456789abcdef";
    std::string s;
    for (unsigned char c : d) {
        s += k[c >> 4];
        s += k[c & 15];
    }
    return s;
}

/// Git-style content address: sha256 of "blob <size>\0" + content.
inline std::string content_hash(const std::string& content) {
    std::string h = "blob " + std::to_string(content.size());
    h.push_back('\0');
    h += content;
    return hex(sha256(h));
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw RuntimeFailure("cannot open " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& bytes) {
    if (p.has_parent_path()) std::filesystem::create_directories(p.parent_path());
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw RuntimeFailure("cannot write " + p.string());
    out.write(bytes.data(), std::streamsize(bytes.size()));
    if (!out) throw RuntimeFailure("write failed: " + p.string());
}

// ---------------------------------------------------------------------------
// Snapshot files
// ---------------------------------------------------------------------------

inline constexpr std::uint32_t snapshot_version = 1;

/// Layout (little-endian): "AXEU", u32 version, u32 nr, u32 nz, f64 r_max,
/// f64 z_min, f64 z_max, f64 t, then Gamma, chi, u_r, u_theta, u_z as
/// nr*nz f64 each (r fastest), then the 32-byte sha256 of everything before.
struct Snapshot {
    AxiGrid grid;
    double t = 0.0;
    AxiField gamma, chi, ur, utheta, uz;

    static Snapshot of(const FlowState& s) {
        return {s.grid(), s.t, s.gamma, s.chi, s.u.ur, s.u.utheta, s.u.uz};
    }
    /// Consistent state from (Gamma, chi); the velocity is recomputed by `solver`.
    FlowState state(EulerSolver& solver) const { return solver.make_state(gamma, chi, t); }
};

namespace detail {

inline void put_u32(std::string& b, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}
inline void put_f64(std::string& b, double x) {
    std::uint64_t v;
    std::memcpy(&v, &x, 8);
    for (int i = 0; i < 8; ++i) b.push_back(char((v >> (8 * i)) & 0xff));
}
inline std::uint32_t get_u32(const std::string& b, std::size_t& at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t(static_cast<unsigned char>(b[at + i])) << (8 * i);
    at += 4;
    return v;
}
inline double get_f64(const std::string& b, std::size_t& at) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t(static_cast<unsigned char>(b[at + i])) << (8 * i);
    at += 8;
    double x;
    std::memcpy(&x, &v, 8);
    return x;
}

} // namespace detail

inline std::string encode_snapshot(const Snapshot& s) {
    const AxiGrid& g = s.grid;
    for (const AxiField* f : {&s.gamma, &s.chi, &s.ur, &s.utheta, &s.uz})
        if (!(f->grid() == g)) throw ValidationError("encode_snapshot: field grid differs from header");
    std::string b = "AXEU";
    detail::put_u32(b, snapshot_version);
    detail::put_u32(b, std::uint32_t(g.nr));
    detail::put_u32(b, std::uint32_t(g.nz));
    detail::put_f64(b, g.r_max);
    detail::put_f64(b, g.z_min);
    detail::put_f64(b, g.z_max);
    detail::put_f64(b, s.t);
    for (const AxiField* f : {&s.gamma, &s.chi, &s.ur, &s.utheta, &s.uz})
        for (int k = 0; k < g.nz; ++k)
            for (int j = 0; j < g.nr; ++j) detail::put_f64(b, (*f)(j, k));
    const Digest d = sha256(b);
    b.append(reinterpret_cast<const char*>(d.data()), d.size());
    return b;
}

inline Snapshot decode_snapshot(const std::string& b, const std::string& name = "snapshot") {
    const std::size_t header = 4 + 3 * 4 + 4 * 8;
    if (b.size() < header + 32) throw ValidationError(name + ": truncated header");
    if (b.compare(0, 4, "AXEU") != 0) throw ValidationError(name + ": bad magic");
    std::size_t at = 4;
    const std::uint32_t ver = detail::get_u32(b, at);
    if (ver != snapshot_version) throw ValidationError(name + ": unsupported version " + std::to_string(ver));
    const std::uint32_t nr = detail::get_u32(b, at), nz = detail::get_u32(b, at);
    const double r_max = detail::get_f64(b, at), z_min = detail::get_f64(b, at), z_max = detail::get_f64(b, at);
    const double t = detail::get_f64(b, at);
    const std::uint64_t n = std::uint64_t(nr) * nz;
    if (nr == 0 || nz == 0 || b.size() != header + 5 * 8 * n + 32)
        throw ValidationError(name + ": size does not match the header (" + std::to_string(nr) + " x " +
                              std::to_string(nz) + ")");
    const Digest d = sha256(b.data(), b.size() - 32);
    if (std::memcmp(d.data(), b.data() + b.size() - 32, 32) != 0) throw ValidationError(name + ": checksum mismatch");
    Snapshot s;
    s.grid = make_grid(r_max, z_min, z_max, int(nr), int(nz));
    s.t = t;
    const Parity par[5] = {Parity::even, Parity::even, Parity::odd, Parity::odd, Parity::even};
    AxiField* out[5] = {&s.gamma, &s.chi, &s.ur, &s.utheta, &s.uz};
    for (int f = 0; f < 5; ++f) {
        *out[f] = AxiField(s.grid, par[f]);
        for (std::uint32_t k = 0; k < nz; ++k)
            for (std::uint32_t j = 0; j < nr; ++j) (*out[f])(int(j), int(k)) = detail::get_f64(b, at);
    }
    return s;
}

inline void write_snapshot(const std::filesystem::path& p, const Snapshot& s) { write_file(p, encode_snapshot(s)); }
inline Snapshot read_snapshot(const std::filesystem::path& p) { return decode_snapshot(read_file(p), p.string()); }

inline std::string snapshot_name(std::size_t index) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "snap_%06zu.axeu", index);
    return buf;
}

/// Snapshot files of a directory in name order.
inline std::vector<std::filesystem::path> list_snapshots(const std::filesystem::path& dir) {
    if (!std::filesystem::is_directory(dir)) throw ValidationError("snapshot directory not found: " + dir.string());
    std::vector<std::filesystem::path> v;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.is_regular_file() && e.path().extension() == ".axeu") v.push_back(e.path());
    std::sort(v.begin(), v.end());
    return v;
}

// ---------------------------------------------------------------------------
// CSV
// ---------------------------------------------------------------------------

inline constexpr int csv_schema_version = 1;

/// Shortest round-trip decimal of x ("inf", "-inf", "nan" for non-finite).
inline std::string format_number(double x) {
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, x);
        if (std::strtod(buf, nullptr) == x) break;
    }
    return buf;
}

/// A versioned CSV document: "# axieuler-csv v<version> kind=<kind>", then a
/// header row and data rows; ',' separator, '.' decimal point, LF endings.
class CsvTable {
public:
    CsvTable(std::string kind, std::vector<std::string> columns) : kind_(std::move(kind)), columns_(std::move(columns)) {}

    const std::string& kind() const { return kind_; }
    const std::vector<std::string>& columns() const { return columns_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }
    std::size_t size() const { return rows_.size(); }
    const std::vector<std::string>& notes() const { return notes_; }

    /// Free-text line written as "# <text>" between the schema line and the header.
    void add_note(const std::string& text) {
        if (text.find_first_of("\n\r") != std::string::npos) throw RuntimeFailure("CsvTable: note spans lines");
        notes_.push_back(text);
    }

    void add_row(std::vector<std::string> cells) {
        if (cells.size() != columns_.size())
            throw RuntimeFailure("CsvTable(" + kind_ + "): row has " + std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(columns_.size()));
        for (const auto& c : cells)
            if (c.find_first_of(",\n\r") != std::string::npos) throw RuntimeFailure("CsvTable: cell contains a separator");
        rows_.push_back(std::move(cells));
    }
    void add_row(const std::vector<double>& v) {
        std::vector<std::string> c;
        for (double x : v) c.push_back(format_number(x));
        add_row(std::move(c));
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns_.size(); ++i)
            if (columns_[i] == name) return i;
        throw ValidationError("CsvTable(" + kind_ + "): no column '" + name + "'");
    }
    /// Column as numbers; errors give the file line of the offending row.
    std::vector<double> numbers(const std::string& name) const {
        const std::size_t c = column(name);
        std::vector<double> v;
        for (std::size_t i = 0; i < rows_.size(); ++i) {
            const std::string& s = rows_[i][c];
            char* end = nullptr;
            const double x = std::strtod(s.c_str(), &end);
            if (s.empty() || end != s.c_str() + s.size())
                throw ValidationError("Csv(" + kind_ + "): line " + std::to_string(i + 3 + notes_.size()) + ", column '" + name +
                                      "': not a number: '" + s + "'");
            v.push_back(x);
        }
        return v;
    }

    std::string str() const {
        std::string out = "# axieuler-csv v" + std::to_string(csv_schema_version) + " kind=" + kind_ + "\n";
        auto line = [&](const std::vector<std::string>& cells) {
            for (std::size_t i = 0; i < cells.size(); ++i) {
                if (i) out += ',';
                out += cells[i];
            }
            out += '\n';
        };
        for (const auto& n : notes_) out += "# " + n + "\n";
        line(columns_);
        for (const auto& r : rows_) line(r);
        return out;
    }

    void write(const std::filesystem::path& p) const { write_file(p, str()); }

    /// Parses a document; errors name the file line.
    static CsvTable parse(const std::string& text, const std::string& name = "csv") {
        std::vector<std::string> lines;
        std::size_t at = 0;
        while (at < text.size()) {
            std::size_t e = text.find('\n', at);
            if (e == std::string::npos) e = text.size();
            lines.push_back(text.substr(at, e - at));
            at = e + 1;
        }
        auto fail = [&](std::size_t line, const std::string& m) {
            return ValidationError(name + ":" + std::to_string(line) + ": " + m);
        };
        if (lines.empty()) throw fail(1, "empty file");
        const std::string prefix = "# axieuler-csv v";
        if (lines[0].rfind(prefix, 0) != 0) throw fail(1, "missing schema line '" + prefix + "N kind=...'");
        const std::string rest = lines[0].substr(prefix.size());
        const auto sp = rest.find(" kind=");
        if (sp == std::string::npos) throw fail(1, "schema line has no kind");
        int ver = 0;
        try {
            std::size_t used = 0;
            ver = std::stoi(rest.substr(0, sp), &used);
            if (used != sp) throw std::invalid_argument("version");
        } catch (const std::logic_error&) {
            throw fail(1, "bad schema version");
        }
        if (ver != csv_schema_version)
            throw fail(1, "schema version " + std::to_string(ver) + " is not supported (expected " +
                              std::to_string(csv_schema_version) + ")");
        std::vector<std::string> notes;
        std::size_t h = 1;
        for (; h < lines.size() && lines[h].rfind('#', 0) == 0; ++h)
            notes.push_back(lines[h].substr(lines[h].rfind("# ", 0) == 0 ? 2 : 1));
        if (lines.size() <= h || lines[h].empty()) throw fail(h + 1, "missing header row");
        auto split = [](const std::string& s) {
            std::vector<std::string> c;
            std::size_t a = 0;
            for (;;) {
                const std::size_t e = s.find(',', a);
                c.push_back(s.substr(a, e == std::string::npos ? std::string::npos : e - a));
                if (e == std::string::npos) break;
                a = e + 1;
            }
            return c;
        };
        for (std::size_t i = 0; i < lines.size(); ++i)
            if (!lines[i].empty() && lines[i].back() == '\r') throw fail(i + 1, "CR line endings are not accepted");
        CsvTable t(rest.substr(sp + 6), split(lines[h]));
        t.notes_ = std::move(notes);
        for (std::size_t i = h + 1; i < lines.size(); ++i) {
            if (lines[i].empty()) {
                if (i + 1 == lines.size()) break;
                throw fail(i + 1, "empty row");
            }
            auto cells = split(lines[i]);
            if (cells.size() != t.columns_.size())
                throw fail(i + 1, "expected " + std::to_string(t.columns_.size()) + " cells, found " +
                                      std::to_string(cells.size()));
            t.rows_.push_back(std::move(cells));
        }
        return t;
    }
    static CsvTable read(const std::filesystem::path& p) { return parse(read_file(p), p.string()); }

private:
    std::string kind_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
    std::vector<std::string> notes_;
};

} // namespace axieuler

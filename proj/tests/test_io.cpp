#include "axieuler/io.hpp"
#include "axieuler/flows.hpp"

#include <gtest/gtest.h>

using namespace axieuler;

namespace {

std::filesystem::path scratch(const std::string& name) {
    const auto d = std::filesystem::temp_directory_path() / ("axieuler_io_" + name);
    std::filesystem::remove_all(d);
    std::filesystem::create_directories(d);
    return d;
}

Snapshot ring_snapshot() {
    EulerSolver solver(make_grid(1.0, -0.5, 0.75, 24, 20));
    FlowParams fp;
    fp.perturbation = 0.1;
    return Snapshot::of(analytic_flow(solver, "gaussian_swirl_ring", fp));
}

bool same_bits(const AxiField& a, const AxiField& b) {
    return a.size() == b.size() && std::memcmp(a.values().data(), b.values().data(), a.size() * sizeof(double)) == 0;
}

} // namespace

TEST(Sha256, KnownVectors) {
    EXPECT_EQ(hex(sha256("")), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
    EXPECT_EQ(hex(sha256("abc")), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    // git hash-object --stdin with sha256 object format
    EXPECT_EQ(content_hash(""), hex(sha256(std::string("blob 0") + '\0')));
}

TEST(Snapshot, LayoutIsLittleEndianRFastest) {
    const AxiGrid g = make_grid(2.0, -1.0, 1.0, 8, 8);
    Snapshot s{g, 0.25, AxiField(g), AxiField(g), AxiField(g), AxiField(g), AxiField(g)};
    for (int k = 0; k < 8; ++k)
        for (int j = 0; j < 8; ++j) s.gamma(j, k) = j + 10.0 * k;
    const std::string b = encode_snapshot(s);
    ASSERT_EQ(b.size(), 4 + 3 * 4 + 4 * 8 + 5 * 64 * 8 + 32u);
    EXPECT_EQ(b.substr(0, 4), "AXEU");
    EXPECT_EQ(static_cast<unsigned char>(b[4]), 1u);
    EXPECT_EQ(b[5], 0);
    EXPECT_EQ(static_cast<unsigned char>(b[8]), 8u);
    auto f64 = [&](std::size_t at) {
        unsigned char raw[8];
        for (int i = 0; i < 8; ++i) raw[i] = static_cast<unsigned char>(b[at + i]);
        std::uint64_t u = 0;
        for (int i = 7; i >= 0; --i) u = (u << 8) | raw[i];
        double x;
        std::memcpy(&x, &u, 8);
        return x;
    };
    EXPECT_EQ(f64(16), 2.0);
    EXPECT_EQ(f64(24), -1.0);
    EXPECT_EQ(f64(32), 1.0);
    EXPECT_EQ(f64(40), 0.25);
    EXPECT_EQ(f64(48 + 8 * 1), 1.0);
    EXPECT_EQ(f64(48 + 8 * 8), 10.0);
    EXPECT_EQ(b.substr(b.size() - 32), std::string(reinterpret_cast<const char*>(sha256(b.substr(0, b.size() - 32)).data()), 32));
}

TEST(Snapshot, RoundTripIsBitExact) {
    const Snapshot s = ring_snapshot();
    const auto dir = scratch("rt");
    write_snapshot(dir / snapshot_name(3), s);
    const Snapshot r = read_snapshot(dir / snapshot_name(3));
    EXPECT_EQ(r.t, s.t);
    EXPECT_EQ(r.grid.nr, s.grid.nr);
    EXPECT_EQ(r.grid.z_min, s.grid.z_min);
    EXPECT_TRUE(same_bits(r.gamma, s.gamma));
    EXPECT_TRUE(same_bits(r.chi, s.chi));
    EXPECT_TRUE(same_bits(r.ur, s.ur));
    EXPECT_TRUE(same_bits(r.utheta, s.utheta));
    EXPECT_TRUE(same_bits(r.uz, s.uz));
    EXPECT_EQ(encode_snapshot(r), read_file(dir / snapshot_name(3)));
    EXPECT_EQ(list_snapshots(dir).size(), 1u);
    EXPECT_EQ(snapshot_name(3), "snap_000003.axeu");
}

TEST(Snapshot, CorruptionIsDetected) {
    const std::string good = encode_snapshot(ring_snapshot());
    std::string bad = good;
    bad[100] ^= 1;
    EXPECT_THROW(decode_snapshot(bad), ValidationError);
    bad = good;
    bad[0] = 'X';
    EXPECT_THROW(decode_snapshot(bad), ValidationError);
    bad = good;
    bad[4] = 9;
    EXPECT_THROW(decode_snapshot(bad), ValidationError);
    EXPECT_THROW(decode_snapshot(good.substr(0, good.size() - 1)), ValidationError);
    EXPECT_THROW(decode_snapshot(good + "x"), ValidationError);
    EXPECT_THROW(decode_snapshot("AXEU"), ValidationError);
}

TEST(FormatNumber, ShortestRoundTrip) {
    for (double x : {0.0, 1.0, -2.5, 0.1, 1.0 / 3.0, 6.02214076e23, 5e-324, 1.7976931348623157e308}) {
        const std::string s = format_number(x);
        EXPECT_EQ(std::strtod(s.c_str(), nullptr), x) << s;
        EXPECT_EQ(s.find(','), std::string::npos);
    }
    EXPECT_EQ(format_number(0.1), "0.1");
    EXPECT_EQ(format_number(2.0), "2");
    EXPECT_EQ(format_number(infinity), "inf");
    EXPECT_EQ(format_number(-infinity), "-inf");
    EXPECT_EQ(format_number(std::nan("")), "nan");
}

TEST(Csv, RoundTripWithNotes) {
    CsvTable t("ledger", {"t", "value", "verdict"});
    t.add_note("params a=1/2 b=1/2");
    t.add_row({"0", "1.5", "bounded_so_far"});
    t.add_row({"0.1", "2", "bounded_so_far"});
    const std::string text = t.str();
    EXPECT_EQ(text, "# axieuler-csv v1 kind=ledger\n# params a=1/2 b=1/2\nt,value,verdict\n0,1.5,bounded_so_far\n"
                    "0.1,2,bounded_so_far\n");
    const CsvTable r = CsvTable::parse(text);
    EXPECT_EQ(r.kind(), "ledger");
    EXPECT_EQ(r.notes(), t.notes());
    EXPECT_EQ(r.rows(), t.rows());
    EXPECT_EQ(r.numbers("value"), (std::vector<double>{1.5, 2.0}));
    EXPECT_EQ(r.str(), text);
}

TEST(Csv, ErrorsNameTheLine) {
    auto message = [](const std::string& text) {
        try {
            CsvTable::parse(text, "f.csv");
        } catch (const ValidationError& e) {
            return std::string(e.what());
        }
        return std::string();
    };
    EXPECT_NE(message("# axieuler-csv v2 kind=x\na\n1\n").find("f.csv:1: schema version 2"), std::string::npos);
    EXPECT_NE(message("a,b\n1,2\n").find("f.csv:1:"), std::string::npos);
    EXPECT_NE(message("").find("f.csv:1:"), std::string::npos);
    EXPECT_NE(message("# axieuler-csv v1 kind=x\n# n\na,b\n1,2\n3\n").find("f.csv:5: expected 2 cells"), std::string::npos);
    EXPECT_NE(message("# axieuler-csv v1 kind=x\na\r\n1\n").find("f.csv:2: CR"), std::string::npos);
    const CsvTable t = CsvTable::parse("# axieuler-csv v1 kind=x\n# n\na\n1\nzz\n");
    try {
        t.numbers("a");
        FAIL();
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("line 5"), std::string::npos) << e.what();
    }
    CsvTable w("x", {"a", "b"});
    EXPECT_THROW(w.add_row(std::vector<std::string>{"1"}), RuntimeFailure);
    EXPECT_THROW(w.add_row(std::vector<std::string>{"1,2", "3"}), RuntimeFailure);
}

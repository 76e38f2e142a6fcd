#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>

#include "hypac/io.hpp"

using namespace hypac;
namespace fs = std::filesystem;

namespace {

struct TempFile {
    fs::path path;
    explicit TempFile(const char* name) : path(fs::temp_directory_path() / name) {}
    ~TempFile() {
        std::error_code ec;
        fs::remove(path, ec);
    }
    std::string str() const { return path.string(); }
};

ScalarField sample_field(const CayleyBall& ball) {
    ScalarField f(ball, 0.0025, 0.0);
    for (std::uint32_t g = 0; g < f.size(); ++g)
        f.values[g] = 0.125 * static_cast<double>(g) - 1.0;
    for (std::uint32_t g = ball.sphere_begin(ball.radius()); g < f.size(); ++g) f.frozen.set(g);
    return f;
}

} // namespace

TEST_CASE("fnv1a64 pins and chaining") {
    CHECK(fnv1a64("", 0) == 0xcbf29ce484222325ULL);
    CHECK(fnv1a64("a", 1) == 0xaf63dc4c8601ec8cULL);
    CHECK(fnv1a64("ab", 2) == fnv1a64("b", 1, fnv1a64("a", 1)));
    CHECK(fnv1a64("ab", 2) != fnv1a64("ba", 2));
}

TEST_CASE("hex64 formatting") {
    CHECK(hex64(0) == "0000000000000000");
    CHECK(hex64(0xdeadbeefULL) == "00000000deadbeef");
    CHECK(hex64(~0ULL) == "ffffffffffffffff");
    CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("group specs survive the json round trip") {
    for (auto spec : {GroupSpec::free_group(2), GroupSpec::free_group(3),
                      GroupSpec::free_product({2, 3}), GroupSpec::free_product({3, 3}),
                      GroupSpec::free_product({2, 4})}) {
        GroupSpec back = group_from_json(group_to_json(spec));
        CHECK(back.describe() == spec.describe());
        CHECK(back.num_generators() == spec.num_generators());
    }

    json f2 = group_to_json(GroupSpec::free_group(2));
    CHECK(f2["kind"] == "free");
    CHECK(f2["rank"] == 2);
    json z23 = group_to_json(GroupSpec::free_product({2, 3}));
    CHECK(z23["kind"] == "free_product");
    CHECK(z23["orders"] == json::array({2, 3}));

    CHECK_THROWS_AS(group_from_json(json{{"kind", "braid"}}), std::invalid_argument);
}

TEST_CASE("text files round trip binary content") {
    TempFile tmp("hypac_test_text.bin");
    std::string blob("head\0mid\x7f tail\n", 15);
    blob.push_back('\0');
    write_text_file(tmp.str(), blob);
    CHECK(read_text_file(tmp.str()) == blob);
    CHECK_THROWS_AS(read_text_file(tmp.str() + ".missing"), std::runtime_error);
}

TEST_CASE("field artifacts round trip exactly") {
    CayleyBall ball(GroupSpec::free_group(2), 3);
    ScalarField f = sample_field(ball);

    TempFile one("hypac_test_field1.acf");
    TempFile two("hypac_test_field2.acf");
    TempFile three("hypac_test_field3.acf");
    write_field(one.str(), f, json{{"note", "probe"}});

    FieldArtifact art = load_field(one.str());
    CHECK(art.header["format"] == "ACF1");
    CHECK(art.header["note"] == "probe");
    CHECK(art.header["radius"] == 3);
    CHECK(art.ball->radius() == 3);
    CHECK(art.field.rho == f.rho);
    REQUIRE(art.field.size() == f.size());
    for (std::uint32_t g = 0; g < f.size(); ++g) {
        CHECK(art.field.values[g] == f.values[g]);
        CHECK(art.field.frozen.test(g) == f.frozen.test(g));
    }

    write_field(two.str(), f, json{{"note", "probe"}});
    CHECK(read_text_file(one.str()) == read_text_file(two.str()));

    write_field(three.str(), art.field, art.header);
    CHECK(read_text_file(one.str()) == read_text_file(three.str()));
}

TEST_CASE("field artifacts reject corruption") {
    CayleyBall ball(GroupSpec::free_group(2), 2);
    ScalarField f = sample_field(ball);
    TempFile tmp("hypac_test_field_bad.acf");

    write_field(tmp.str(), f);
    std::string raw = read_text_file(tmp.str());

    std::string flipped = raw;
    flipped.back() = static_cast<char>(flipped.back() ^ 0x01);
    write_text_file(tmp.str(), flipped);
    CHECK_THROWS_WITH(load_field(tmp.str()), Catch::Matchers::ContainsSubstring("checksum"));

    std::string magic = raw;
    magic[0] = 'X';
    write_text_file(tmp.str(), magic);
    CHECK_THROWS_WITH(load_field(tmp.str()), Catch::Matchers::ContainsSubstring("not a field"));

    std::string hlen = raw;
    hlen[4] = '\xff';
    hlen[5] = '\xff';
    hlen[6] = '\xff';
    hlen[7] = '\x7f';
    write_text_file(tmp.str(), hlen);
    CHECK_THROWS_WITH(load_field(tmp.str()), Catch::Matchers::ContainsSubstring("truncated"));

    std::string rehash = raw;
    std::size_t at = rehash.find("\"ball_hash\":\"");
    REQUIRE(at != std::string::npos);
    std::size_t digit = at + 13;
    rehash[digit] = rehash[digit] == '0' ? '1' : '0';
    write_text_file(tmp.str(), rehash);
    CHECK_THROWS_WITH(load_field(tmp.str()), Catch::Matchers::ContainsSubstring("ball hash"));
}

TEST_CASE("csv numbers round trip at full precision") {
    for (double v : {0.1, 1.0 / 3.0, 1e-300, -2.5, 12345.678901234567, 0.0025}) {
        const std::string s = csv_num(v);
        CHECK(std::strtod(s.c_str(), nullptr) == v);
    }
    CHECK(csv_num(0.0) == "0");
    CHECK(csv_num(2.0) == "2");
}

TEST_CASE("csv writer emits plain rows") {
    TempFile tmp("hypac_test_table.csv");
    {
        CsvWriter w(tmp.str(), {"rho", "sigma"});
        w.row({"0.0025", "0.01"});
        w.row({csv_num(2.0), "x"});
    }
    CHECK(read_text_file(tmp.str()) == "rho,sigma\n0.0025,0.01\n2,x\n");
}

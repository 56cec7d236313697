#include <cstdint>
#include <string>

#include "doctest.h"
#include "iatfp/errors.hpp"
#include "iatfp/util.hpp"
#include "test_support.hpp"

using namespace iatfp;

namespace {

// Brute search for the integer m with m - 1/2 <= num/den < m + 1/2,
// checked in exact integer arithmetic.
int64_t rhu_ratio_oracle(int64_t num, int64_t den) {
    REQUIRE(den > 0);
    for (int64_t m = -400; m <= 400; ++m) {
        if (2 * den * m - den <= 2 * num && 2 * num < 2 * den * m + den) {
            return m;
        }
    }
    FAIL("oracle search range exhausted");
    return 0;
}

} // namespace

TEST_SUITE("util") {

TEST_CASE("round_half_up rounds .5 toward positive infinity") {
    CHECK(round_half_up(0.0) == 0);
    CHECK(round_half_up(0.5) == 1);
    CHECK(round_half_up(1.5) == 2);
    CHECK(round_half_up(2.5) == 3);
    CHECK(round_half_up(-0.5) == 0);
    CHECK(round_half_up(-1.5) == -1);
    CHECK(round_half_up(-2.5) == -2);
    CHECK(round_half_up(0.49999999999999994) == 0);
    CHECK(round_half_up(486.4) == 486);
    CHECK(round_half_up(508.8) == 509);
    CHECK(round_half_up(-3.0) == -3);
    CHECK(round_half_up(7.0) == 7);
}

TEST_CASE("floor_div floors toward negative infinity") {
    CHECK(floor_div(7, 2) == 3);
    CHECK(floor_div(-7, 2) == -4);
    CHECK(floor_div(7, -2) == -4);
    CHECK(floor_div(-7, -2) == 3);
    CHECK(floor_div(6, 3) == 2);
    CHECK(floor_div(-6, 3) == -2);
    CHECK(floor_div(0, 5) == 0);
}

TEST_CASE("round_half_up_ratio agrees with the exact integer oracle") {
    for (int64_t den = 1; den <= 60; ++den) {
        for (int64_t num = -300; num <= 300; ++num) {
            CAPTURE(num);
            CAPTURE(den);
            REQUIRE(round_half_up_ratio(num, den) == rhu_ratio_oracle(num, den));
        }
    }
}

TEST_CASE("fnv1a64 matches published vectors") {
    auto h = [](const std::string& s) {
        return fnv1a64(std::span(reinterpret_cast<const unsigned char*>(s.data()),
                                 s.size()));
    };
    CHECK(h("") == UINT64_C(0xcbf29ce484222325));
    CHECK(h("a") == UINT64_C(0xaf63dc4c8601ec8c));
    CHECK(h("foobar") == UINT64_C(0x85944171f73967e8));
}

TEST_CASE("to_hex prints 16 lowercase digits") {
    CHECK(to_hex(0) == "0000000000000000");
    CHECK(to_hex(UINT64_C(0xdeadbeef01020304)) == "deadbeef01020304");
}

TEST_CASE("binary and text file round trips") {
    testsup::TempDir tmp;
    const std::vector<unsigned char> payload = {0, 1, 2, 255, 128, 7};
    write_binary_file(tmp.file("blob.bin"), payload);
    CHECK(read_binary_file(tmp.file("blob.bin")) == payload);

    const std::string text = "line one\nline two\n";
    write_text_file(tmp.file("note.txt"), text);
    CHECK(read_text_file(tmp.file("note.txt")) == text);
}

TEST_CASE("missing files raise io_failure") {
    testsup::TempDir tmp;
    CHECK(testsup::thrown_code([&] { read_binary_file(tmp.file("absent")); }) ==
          Errc::io_failure);
    CHECK(testsup::thrown_code([&] { read_text_file(tmp.file("absent")); }) ==
          Errc::io_failure);
    const std::vector<unsigned char> one{1};
    CHECK(testsup::thrown_code([&] {
              write_binary_file(tmp.file("no/such/dir/x"), one);
          }) == Errc::io_failure);
}

} // TEST_SUITE

#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "momentum/io.hpp"
#include "support.hpp"

using namespace momentum;

TEST_SUITE("io") {
  TEST_CASE("format_double round-trips random doubles") {
    std::mt19937_64 rng(11);
    std::uniform_int_distribution<int> expo(-300, 300);
    std::normal_distribution<double> mant(0.0, 1.0);
    for (int i = 0; i < 5000; ++i) {
      const double v = std::ldexp(mant(rng), expo(rng));
      const auto back = io::parse_double(io::format_double(v));
      REQUIRE(back.has_value());
      CHECK(*back == v);
    }
    CHECK(io::format_double(0.5) == "0.5");
    CHECK(io::format_double(1500.0) == "1500");
    CHECK(io::format_double(std::nan("")) == "nan");
  }

  TEST_CASE("number parsing rejects partial input") {
    CHECK(io::parse_double("1.5x") == std::nullopt);
    CHECK(io::parse_double("") == std::nullopt);
    CHECK(io::parse_int("42") == 42);
    CHECK(io::parse_int("-7") == -7);
    CHECK(io::parse_int("4.2") == std::nullopt);
  }

  TEST_CASE("split and trim") {
    const auto parts = io::split("a,,b,", ',');
    REQUIRE(parts.size() == 4);
    CHECK(parts[0] == "a");
    CHECK(parts[1].empty());
    CHECK(parts[3].empty());
    CHECK(io::trim("  x y\t\r\n") == "x y");
    CHECK(io::lower("MiXeD") == "mixed");
    CHECK(io::join_row({"a", "b"}) == "a,b\n");
    CHECK(io::join_row({"a", "b"}, '\t') == "a\tb\n");
  }

  TEST_CASE("sha256 standard vectors") {
    CHECK(io::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    CHECK(io::sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  }

  TEST_CASE("file helpers") {
    const auto dir = test::scratch_dir("io");
    io::write_file(dir / "sub" / "f.txt", "abc");
    CHECK(io::read_file(dir / "sub" / "f.txt") == "abc");
    CHECK(io::sha256_file(dir / "sub" / "f.txt") == io::sha256_hex("abc"));
    CHECK_THROWS(io::read_file(dir / "missing.txt"));
  }
}

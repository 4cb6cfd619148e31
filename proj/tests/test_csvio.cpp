#include <cstdio>
#include <filesystem>
#include <string>

#include "doctest.h"

#include "evaq/csvio.hpp"
#include "evaq/errors.hpp"

using namespace evaq;

TEST_CASE("split_csv_line handles quoting") {
  CHECK(split_csv_line("a,b,c") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_csv_line("a,,c") == std::vector<std::string>{"a", "", "c"});
  CHECK(split_csv_line("\"a,b\",c") == std::vector<std::string>{"a,b", "c"});
  CHECK(split_csv_line("\"he said \"\"hi\"\"\",x") ==
        std::vector<std::string>{"he said \"hi\"", "x"});
  CHECK(split_csv_line("") == std::vector<std::string>{""});
}

TEST_CASE("csv_quote round-trips through split_csv_line") {
  const std::vector<std::string> fields = {"plain", "with,comma", "with\"quote",
                                           "", "POLYGON((1 2, 3 4))"};
  std::string line;
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) line += ',';
    line += csv_quote(fields[i]);
  }
  CHECK(split_csv_line(line) == fields);
}

TEST_CASE("strict numeric parsing rejects junk and names the field") {
  CHECK(parse_double_strict("1.5", "v") == 1.5);
  CHECK(parse_double_strict("-2e3", "v") == -2000.0);
  CHECK(parse_int_strict("42", "n") == 42);
  CHECK(parse_int_strict("-7", "n") == -7);

  CHECK_THROWS_WITH_AS(parse_double_strict("1.5x", "speed"),
                       doctest::Contains("speed"), DataError);
  CHECK_THROWS_AS(parse_double_strict("", "v"), DataError);
  CHECK_THROWS_AS(parse_double_strict("nan", "v"), DataError);
  CHECK_THROWS_AS(parse_int_strict("1.5", "n"), DataError);
  CHECK_THROWS_AS(parse_int_strict("", "n"), DataError);
}

TEST_CASE("fixed and general formatting are deterministic") {
  CHECK(fmt_fixed(1.0, 2) == "1.00");
  CHECK(fmt_fixed(-0.125, 3) == "-0.125");
  CHECK(fmt_fixed(2.675, 1) == "2.7");

  CHECK(fmt_general(0.5) == "0.5");
  CHECK(fmt_general(1e-9) == "1e-09");
  CHECK(fmt_general(0.0) == "0");
  // Round-trip exactness for an unrepresentable decimal.
  const double v = 0.1 + 0.2;
  double back = 0.0;
  std::sscanf(fmt_general(v).c_str(), "%lf", &back);
  CHECK(back == v);
}

TEST_CASE("fnv1a64 matches the published test vectors") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
  CHECK(hex64(0xcbf29ce484222325ULL) == "cbf29ce484222325");
}

TEST_CASE("atomic_write_file replaces content and leaves no temp files") {
  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "evaq_csvio_test";
  fs::create_directories(dir);
  const fs::path f = dir / "a.txt";

  atomic_write_file(f.string(), "first");
  CHECK(read_file(f.string()) == "first");
  atomic_write_file(f.string(), "second");
  CHECK(read_file(f.string()) == "second");

  std::size_t n_files = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    (void)e;
    ++n_files;
  }
  CHECK(n_files == 1);
  fs::remove_all(dir);

  CHECK_THROWS_AS(read_file((dir / "missing.txt").string()), DataError);
}

TEST_CASE("comment and blank detection") {
  CHECK(is_comment_or_blank(""));
  CHECK(is_comment_or_blank("   "));
  CHECK(is_comment_or_blank("# note"));
  CHECK_FALSE(is_comment_or_blank("a,b"));

  std::string line = "a,b\r";
  strip_cr(line);
  CHECK(line == "a,b");
}

TEST_CASE("artifact_header embeds tool, version and config digest") {
  const std::string h = artifact_header("00ff");
  CHECK(h == "# evaq 0.1.0 config=00ff\n");
}

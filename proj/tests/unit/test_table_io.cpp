#include <doctest.h>

#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "mse/kosovo.hpp"
#include "mse/table_io.hpp"
#include "properties.hpp"

using namespace mse;

namespace {

ObservedTable parse(const std::string& text, const CsvTableOptions& opts = {}) {
    std::istringstream in(text);
    return load_table_csv(in, opts);
}

}  // namespace

TEST_SUITE("table-io") {

TEST_CASE("Kosovo fixture matches the shipped CSV and its checksum") {
    CHECK(fnv1a64(kosovo_csv()) == kKosovoChecksum);
    const auto fixture = kosovo_table();
    CHECK(fixture.list_names() == std::vector<std::string>{"ABA", "EXH", "HRW", "OSCE"});
    CHECK(fixture.total() == 4400);
    const auto from_file = load_table_file(std::string(MSE_SOURCE_DIR) + "/data/kosovo.csv");
    CHECK(from_file == fixture);
    CHECK(fixture.count(1) == 845);
    CHECK(fixture.count(15) == 27);
}

TEST_CASE("small CSV with three rows") {
    const auto t = parse("A,B,count\n1,0,1\n0,1,1\n1,1,2\n");
    CHECK(t.total() == 4);
    CHECK(t.counts() == std::vector<std::int64_t>{1, 1, 2});
}

TEST_CASE("CSV tolerates CRLF, a BOM, blank lines and missing patterns") {
    const auto t = parse("\xEF\xBB\xBF" "A,B,count\r\n\r\n1,1,7\r\n0,1,3\r\n");
    CHECK(t.list_names() == std::vector<std::string>{"A", "B"});
    CHECK(t.counts() == std::vector<std::int64_t>{0, 3, 7});
}

TEST_CASE("CSV error reporting") {
    check_error(ErrorCode::IllegalCell, [] { parse("A,B,count\n0,0,5\n1,1,1\n"); });
    check_error(ErrorCode::DuplicateCell, [] { parse("A,B,count\n1,0,5\n1,0,1\n"); });
    check_error(ErrorCode::ParseError, [] { parse("A,B,count\n2,0,5\n"); });
    check_error(ErrorCode::ParseError, [] { parse("A,B,count\n1,0,x\n"); });
    check_error(ErrorCode::ParseError, [] { parse("A,B,count\n1,0,-3\n"); });
    check_error(ErrorCode::ParseError, [] { parse("A,B,n\n1,0,3\n"); });
    check_error(ErrorCode::ParseError, [] { parse(""); });
    check_error(ErrorCode::ParseError, [] { parse("A,B,count\n1,0\n"); });
    // An empty all-zero row marks the unobserved cell and is allowed.
    CHECK(parse("A,B,count\n0,0,\n1,1,2\n").total() == 2);
}

TEST_CASE("CSV column selection and custom count column") {
    CsvTableOptions opts;
    opts.count_column = "n";
    opts.list_columns = {"B", "A"};
    const auto t = parse("A,B,n\n1,0,4\n0,1,5\n1,1,6\n", opts);
    CHECK(t.list_names() == std::vector<std::string>{"B", "A"});
    CHECK(t.count(1) == 5);  // B only
    CHECK(t.count(2) == 4);  // A only
}

TEST_CASE("JSON tables") {
    const auto doc = nlohmann::json::parse(R"({"lists": ["X", "Y"],
        "cells": [{"pattern": [1, 0], "count": 3}, {"pattern": [0, 1], "count": 4},
                  {"pattern": [1, 1], "count": 5}, {"pattern": [0, 0], "count": null}]})");
    const auto t = load_table_json(doc);
    CHECK(t.counts() == std::vector<std::int64_t>{3, 4, 5});
    CHECK(load_table_json(table_to_json(t)) == t);

    check_error(ErrorCode::IllegalCell, [] {
        load_table_json(nlohmann::json::parse(R"({"lists": ["X", "Y"], "cells": [{"pattern": [0, 0], "count": 1}]})"));
    });
    check_error(ErrorCode::DuplicateCell, [] {
        load_table_json(nlohmann::json::parse(
            R"({"lists": ["X", "Y"], "cells": [{"pattern": [1, 0], "count": 1}, {"pattern": [1, 0], "count": 2}]})"));
    });
    check_error(ErrorCode::ParseError, [] { load_table_json(nlohmann::json::parse(R"({"cells": []})")); });
}

TEST_CASE("write then load reproduces random tables exactly") {
    auto rng = substream(21, Stream::Simulation, 0);
    for (int rep = 0; rep < 40; ++rep) {
        const auto t = testing::random_table(rng, 2 + rep % 5, 0, 100000);
        std::ostringstream out;
        write_table_csv(out, t);
        CHECK(parse(out.str()) == t);
        CHECK(load_table_json(table_to_json(t)) == t);
    }
}

TEST_CASE("file loading dispatches on the extension") {
    const std::string path = std::string(MSE_BINARY_DIR) + "/io_test_table.json";
    {
        std::ofstream f(path);
        f << table_to_json(kosovo_table()).dump();
    }
    CHECK(load_table_file(path) == kosovo_table());
    check_error(ErrorCode::ParseError, [] { load_table_file("/nonexistent/table.csv"); });
}

TEST_CASE("CSV field splitting") {
    CHECK(split_csv_line(" a , \"b,c\" ,d") == std::vector<std::string>{"a", "b,c", "d"});
    CHECK(trim("  x\r") == "x");
}

}  // TEST_SUITE

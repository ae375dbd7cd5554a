#include "mse/table_io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>

#include "mse/errors.hpp"

namespace mse {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    std::string out = s.substr(first, last - first + 1);
    if (out.size() >= 2 && out.front() == '"' && out.back() == '"') out = out.substr(1, out.size() - 2);
    return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
            current.push_back(c);
        } else if (c == ',' && !quoted) {
            fields.push_back(trim(current));
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    fields.push_back(trim(current));
    return fields;
}

namespace {

int parse_flag(const std::string& field, std::size_t line_no) {
    if (field == "0") return 0;
    if (field == "1") return 1;
    throw Error(ErrorCode::ParseError,
                "line " + std::to_string(line_no) + ": inclusion flag '" + field + "' is not 0 or 1");
}

std::int64_t parse_count(const std::string& field, std::size_t line_no) {
    std::int64_t value = 0;
    const auto* begin = field.data();
    const auto* end = field.data() + field.size();
    auto [ptr, ec] = std::from_chars(begin, end, value);
    if (ec != std::errc() || ptr != end || value < 0) {
        throw Error(ErrorCode::ParseError,
                    "line " + std::to_string(line_no) + ": count '" + field +
                        "' is not a nonnegative integer");
    }
    return value;
}

void place_count(std::vector<std::int64_t>& counts, std::vector<bool>& seen, std::uint32_t code,
                 std::int64_t value, const std::string& where) {
    if (seen[code - 1]) {
        throw Error(ErrorCode::DuplicateCell, where + ": pattern code " + std::to_string(code) +
                                                  " appears more than once");
    }
    seen[code - 1] = true;
    counts[code - 1] = value;
}

}  // namespace

ObservedTable load_table_csv(std::istream& in, const CsvTableOptions& options) {
    std::string line;
    std::size_t line_no = 0;
    // Header (skipping blank lines and a UTF-8 BOM).
    std::vector<std::string> header;
    while (std::getline(in, line)) {
        ++line_no;
        if (line_no == 1 && line.rfind("\xEF\xBB\xBF", 0) == 0) line = line.substr(3);
        if (!trim(line).empty()) {
            header = split_csv_line(line);
            break;
        }
    }
    if (header.empty()) throw Error(ErrorCode::ParseError, "empty table file");

    auto column_of = [&](const std::string& name) {
        auto it = std::find(header.begin(), header.end(), name);
        if (it == header.end()) throw Error(ErrorCode::ParseError, "missing column '" + name + "'");
        return static_cast<std::size_t>(it - header.begin());
    };
    const std::size_t count_col = column_of(options.count_column);
    std::vector<std::string> names = options.list_columns;
    if (names.empty()) {
        for (const auto& h : header) {
            if (h != options.count_column) names.push_back(h);
        }
    }
    std::vector<std::size_t> list_cols;
    for (const auto& name : names) list_cols.push_back(column_of(name));
    const int num_lists = static_cast<int>(names.size());
    if (num_lists < 2 || num_lists > kMaxLists) {
        throw Error(ErrorCode::ParseError, "table needs between 2 and " + std::to_string(kMaxLists) +
                                               " list columns");
    }

    std::vector<std::int64_t> counts(num_observed_cells(num_lists), 0);
    std::vector<bool> seen(counts.size(), false);
    bool zero_seen = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        if (fields.size() != header.size()) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": expected " +
                                                   std::to_string(header.size()) + " fields");
        }
        std::uint32_t code = 0;
        for (int k = 0; k < num_lists; ++k) {
            code |= static_cast<std::uint32_t>(parse_flag(fields[list_cols[k]], line_no)) << k;
        }
        const auto& count_field = fields[count_col];
        if (code == 0) {
            if (!count_field.empty()) {
                throw Error(ErrorCode::IllegalCell, "line " + std::to_string(line_no) +
                                                        ": the all-zero pattern cannot carry a count");
            }
            if (zero_seen) throw Error(ErrorCode::DuplicateCell, "all-zero pattern repeated");
            zero_seen = true;
            continue;
        }
        if (count_field.empty()) {
            throw Error(ErrorCode::ParseError, "line " + std::to_string(line_no) + ": missing count");
        }
        place_count(counts, seen, code, parse_count(count_field, line_no),
                    "line " + std::to_string(line_no));
    }
    return ObservedTable(std::move(names), std::move(counts));
}

ObservedTable load_table_json(const nlohmann::json& doc) {
    try {
        auto names = doc.at("lists").get<std::vector<std::string>>();
        const int num_lists = static_cast<int>(names.size());
        if (num_lists < 2 || num_lists > kMaxLists) {
            throw Error(ErrorCode::ParseError, "table needs between 2 and " +
                                                   std::to_string(kMaxLists) + " lists");
        }
        std::vector<std::int64_t> counts(num_observed_cells(num_lists), 0);
        std::vector<bool> seen(counts.size(), false);
        std::size_t index = 0;
        for (const auto& cell : doc.at("cells")) {
            const auto where = "cell " + std::to_string(index++);
            const auto bits = cell.at("pattern").get<std::vector<int>>();
            if (static_cast<int>(bits.size()) != num_lists) {
                throw Error(ErrorCode::ParseError, where + ": pattern length differs from list count");
            }
            std::uint32_t code = 0;
            for (int k = 0; k < num_lists; ++k) {
                code |= static_cast<std::uint32_t>(parse_flag(std::to_string(bits[k]), index)) << k;
            }
            const bool has_count = cell.contains("count") && !cell.at("count").is_null();
            if (code == 0) {
                if (has_count) {
                    throw Error(ErrorCode::IllegalCell, where + ": the all-zero pattern cannot carry a count");
                }
                continue;
            }
            if (!has_count) throw Error(ErrorCode::ParseError, where + ": missing count");
            const auto value = cell.at("count").get<std::int64_t>();
            if (value < 0) throw Error(ErrorCode::ParseError, where + ": negative count");
            place_count(counts, seen, code, value, where);
        }
        return ObservedTable(std::move(names), std::move(counts));
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::ParseError, std::string("malformed table JSON: ") + e.what());
    }
}

ObservedTable load_table_file(const std::string& path, const CsvTableOptions& options) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::ParseError, "cannot open '" + path + "'");
    const bool is_json = path.size() >= 5 && path.substr(path.size() - 5) == ".json";
    if (is_json) {
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw Error(ErrorCode::ParseError, std::string("invalid JSON: ") + e.what());
        }
        return load_table_json(doc);
    }
    return load_table_csv(in, options);
}

void write_table_csv(std::ostream& out, const ObservedTable& table) {
    for (const auto& name : table.list_names()) out << name << ',';
    out << "count\n";
    for (std::uint32_t code = 1; code <= table.counts().size(); ++code) {
        for (int k = 0; k < table.num_lists(); ++k) out << ((code >> k) & 1U) << ',';
        out << table.counts()[code - 1] << '\n';
    }
}

nlohmann::json table_to_json(const ObservedTable& table) {
    nlohmann::json cells = nlohmann::json::array();
    for (std::uint32_t code = 1; code <= table.counts().size(); ++code) {
        cells.push_back({{"pattern", InclusionPattern(code, table.num_lists()).bits()},
                         {"count", table.counts()[code - 1]}});
    }
    return {{"lists", table.list_names()}, {"cells", cells}};
}

}  // namespace mse

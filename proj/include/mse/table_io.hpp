#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mse/table.hpp"

namespace mse {

struct CsvTableOptions {
    std::vector<std::string> list_columns;  // empty: every column except the count column
    std::string count_column = "count";
};

// Reads `list1,...,listK,count` rows. Missing patterns are filled with 0.
ObservedTable load_table_csv(std::istream& in, const CsvTableOptions& options = {});

// Reads {"lists": [...], "cells": [{"pattern": [...], "count": n}, ...]}.
ObservedTable load_table_json(const nlohmann::json& doc);

// Dispatches on the file extension (.json, anything else is CSV).
ObservedTable load_table_file(const std::string& path, const CsvTableOptions& options = {});

void write_table_csv(std::ostream& out, const ObservedTable& table);
nlohmann::json table_to_json(const ObservedTable& table);

// Shared CSV helpers.
std::vector<std::string> split_csv_line(const std::string& line);
std::string trim(const std::string& s);

}  // namespace mse

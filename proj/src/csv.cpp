#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "condbias/core.hpp"

namespace condbias {

namespace {

// Splits RFC-4180 text into records. Quoted fields may contain separators,
// doubled quotes and line breaks. Each record remembers its starting line.
struct CsvRecord {
    std::size_t line = 0;
    std::vector<std::string> fields;
    std::vector<bool> quoted;
};

std::vector<CsvRecord> split_records(const std::string& text, const std::string& source) {
    std::vector<CsvRecord> records;
    CsvRecord current;
    std::string field;
    bool in_quotes = false;
    bool field_quoted = false;
    bool record_open = false;
    std::size_t line = 1;
    current.line = 1;

    auto end_field = [&] {
        current.fields.push_back(std::move(field));
        current.quoted.push_back(field_quoted);
        field.clear();
        field_quoted = false;
    };
    auto end_record = [&] {
        end_field();
        // A lone empty field is a blank line.
        if (!(current.fields.size() == 1 && current.fields[0].empty() && !current.quoted[0])) {
            records.push_back(std::move(current));
        }
        current = CsvRecord{};
        record_open = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (!record_open) {
            current.line = line;
            record_open = true;
        }
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                if (c == '\n') ++line;
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                in_quotes = true;
                field_quoted = true;
                break;
            case ',':
                end_field();
                break;
            case '\r':
                break;
            case '\n':
                end_record();
                ++line;
                break;
            default:
                field.push_back(c);
        }
    }
    if (in_quotes) {
        throw DataError(source + ": unterminated quoted field starting before line " + std::to_string(line));
    }
    if (record_open) end_record();
    return records;
}

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return s.substr(first, last - first + 1);
}

bool is_missing_cell(const std::string& cell, bool quoted) {
    return !quoted && (cell.empty() || cell == "?");
}

std::optional<double> parse_real(const std::string& cell) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (first != last && *first == '+') ++first;
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || !std::isfinite(value)) return std::nullopt;
    return value;
}

ColumnKind parse_kind(const std::string& text) {
    if (text == "numeric") return ColumnKind::numeric;
    if (text == "categorical") return ColumnKind::categorical;
    throw DataError("schema: unknown column kind '" + text + "' (expected numeric or categorical)");
}

}  // namespace

ColumnKind Schema::kind_of(const std::string& name) const {
    for (const auto& c : columns) {
        if (c.name == name) return c.kind;
    }
    return ColumnKind::numeric;
}

Schema parse_schema(const std::string& json_text) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(json_text);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("schema: invalid JSON: ") + e.what());
    }
    Schema schema;
    try {
        for (const auto& col : doc.value("columns", nlohmann::json::array())) {
            schema.columns.push_back({col.at("name").get<std::string>(),
                                      parse_kind(col.value("kind", std::string("numeric")))});
        }
        schema.target = doc.at("target").get<std::string>();
        schema.task = parse_task(doc.at("task").get<std::string>());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("schema: ") + e.what());
    } catch (const UsageError& e) {
        throw DataError(std::string("schema: ") + e.what());
    }
    return schema;
}

Schema load_schema(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read schema file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_schema(buffer.str());
}

RawTable parse_csv(const std::string& text, const Schema& schema, const std::string& source) {
    auto records = split_records(text, source);
    if (records.empty()) throw DataError(source + ": missing header row");

    const auto& header = records.front();
    std::vector<std::string> names;
    for (const auto& h : header.fields) names.push_back(trim(h));

    std::size_t target_index = names.size();
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (names[i] == schema.target) target_index = i;
    }
    if (target_index == names.size()) {
        throw DataError(source + ": unknown target column '" + schema.target + "'");
    }
    for (const auto& spec : schema.columns) {
        if (std::find(names.begin(), names.end(), spec.name) == names.end()) {
            throw DataError(source + ": schema column '" + spec.name + "' not found in header");
        }
    }

    RawTable table;
    std::vector<std::size_t> column_of(names.size(), 0);
    for (std::size_t i = 0; i < names.size(); ++i) {
        if (i == target_index) continue;
        column_of[i] = table.columns.size();
        table.columns.push_back({names[i], schema.kind_of(names[i]), {}});
    }

    for (std::size_t r = 1; r < records.size(); ++r) {
        const auto& rec = records[r];
        if (rec.fields.size() != names.size()) {
            throw DataError(source + ": line " + std::to_string(rec.line) + ": expected " +
                            std::to_string(names.size()) + " fields, found " +
                            std::to_string(rec.fields.size()));
        }
        for (std::size_t i = 0; i < names.size(); ++i) {
            const std::string cell = rec.quoted[i] ? rec.fields[i] : trim(rec.fields[i]);
            const bool missing = is_missing_cell(cell, rec.quoted[i]);
            if (i == target_index) {
                if (missing) {
                    throw DataError(source + ": line " + std::to_string(rec.line) + ", column '" +
                                    names[i] + "': missing target value");
                }
                table.target.push_back(cell);
                continue;
            }
            auto& column = table.columns[column_of[i]];
            if (missing) {
                column.values.emplace_back(Missing{});
            } else if (column.kind == ColumnKind::categorical) {
                column.values.emplace_back(cell);
            } else {
                auto value = parse_real(cell);
                if (!value) {
                    throw DataError(source + ": line " + std::to_string(rec.line) + ", column '" +
                                    names[i] + "': cannot parse '" + cell + "' as a finite number");
                }
                column.values.emplace_back(*value);
            }
        }
    }
    if (table.target.empty()) throw DataError(source + ": no data rows");
    return table;
}

RawTable load_csv(const std::filesystem::path& path, const Schema& schema) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot read data file " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    return parse_csv(buffer.str(), schema, path.string());
}

}  // namespace condbias

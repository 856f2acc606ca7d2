#pragma once

#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "bace/error.hpp"
#include "bace/types.hpp"

namespace bace {
namespace detail {

// Minimal RFC-4180 style parser: comma separated, double-quote escaping,
// LF or CRLF line endings, optional UTF-8 BOM on the first line.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool in_quotes = false;
    bool row_has_content = false;

    if (text.size() >= 3 && text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);

    auto end_field = [&] {
        row.push_back(field);
        field.clear();
    };
    auto end_row = [&] {
        end_field();
        rows.push_back(row);
        row.clear();
        row_has_content = false;
    };

    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (in_quotes) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    in_quotes = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        switch (c) {
            case '"':
                if (!field.empty()) throw invalid_input("malformed CSV: quote inside unquoted field");
                in_quotes = true;
                row_has_content = true;
                break;
            case ',':
                end_field();
                row_has_content = true;
                break;
            case '\r':
                break;
            case '\n':
                if (row_has_content || !field.empty() || !row.empty()) end_row();
                break;
            default:
                field.push_back(c);
                row_has_content = true;
        }
    }
    if (in_quotes) throw invalid_input("malformed CSV: unterminated quoted field");
    if (row_has_content || !field.empty() || !row.empty()) end_row();
    return rows;
}

inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out += "\"";
    return out;
}

inline void require_header(const std::vector<std::string>& row, const std::vector<std::string>& expected,
                           const char* what) {
    if (row != expected) {
        std::string want;
        for (std::size_t i = 0; i < expected.size(); ++i) want += (i ? "," : "") + expected[i];
        throw invalid_input(std::string(what) + ": expected header `" + want + "`");
    }
}

}  // namespace detail

// Parse long-form annotations (`item_id,coder_id,label`). When no label set
// is supplied, one is inferred from the distinct labels in first-appearance
// order; otherwise every label must already belong to the given set.
inline AnnotationTable parse_annotations(std::string_view csv_text,
                                         std::optional<LabelSet> label_set = std::nullopt) {
    const auto rows = detail::parse_csv(csv_text);
    if (rows.empty()) throw invalid_input("annotation CSV is empty");
    detail::require_header(rows[0], {"item_id", "coder_id", "label"}, "annotation CSV");

    std::vector<std::string> label_order;
    std::map<std::string, int> label_codes;
    if (label_set) {
        for (int c = 0; c < label_set->k(); ++c) label_codes[label_set->name(c)] = c;
    }

    std::vector<AnnotationRecord> records;
    std::set<std::string> coders;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 3)
            throw invalid_input("annotation CSV: malformed row " + std::to_string(r + 1));
        const std::string& item = row[0];
        const std::string& coder = row[1];
        const std::string& label = row[2];
        if (item.empty() || coder.empty() || label.empty())
            throw invalid_input("annotation CSV: empty field in row " + std::to_string(r + 1));

        int code;
        auto it = label_codes.find(label);
        if (it != label_codes.end()) {
            code = it->second;
        } else if (!label_set) {
            code = static_cast<int>(label_order.size());
            label_order.push_back(label);
            label_codes[label] = code;
        } else {
            throw invalid_input("annotation CSV: unknown label \"" + label + "\" in row " +
                                std::to_string(r + 1));
        }
        records.push_back({item, coder, code});
        coders.insert(coder);
    }

    if (coders.size() < 2) throw invalid_input("annotation CSV: fewer than 2 coders");

    LabelSet labels = label_set ? *label_set : LabelSet(std::move(label_order));
    return AnnotationTable(std::move(records), std::move(labels));
}

// Parse gold labels (`item_id,gold_label`).
inline GoldSet parse_gold(std::string_view csv_text, const LabelSet& label_set) {
    const auto rows = detail::parse_csv(csv_text);
    if (rows.empty()) throw invalid_input("gold CSV is empty");
    detail::require_header(rows[0], {"item_id", "gold_label"}, "gold CSV");

    std::map<std::string, int> entries;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() != 2) throw invalid_input("gold CSV: malformed row " + std::to_string(r + 1));
        const auto code = label_set.code(row[1]);
        if (!code)
            throw invalid_input("gold CSV: unknown label \"" + row[1] + "\" in row " +
                                std::to_string(r + 1));
        if (!entries.emplace(row[0], *code).second)
            throw invalid_input("gold CSV: duplicate item " + row[0]);
    }
    return GoldSet(std::move(entries), label_set);
}

inline std::string write_annotations_csv(const AnnotationTable& table) {
    std::ostringstream out;
    out << "item_id,coder_id,label\n";
    for (const auto& r : table.records())
        out << detail::csv_escape(r.item_id) << ',' << detail::csv_escape(r.coder_id) << ','
            << detail::csv_escape(table.labels().name(r.label)) << '\n';
    return out.str();
}

inline std::string write_gold_csv(const GoldSet& gold, const LabelSet& labels) {
    std::ostringstream out;
    out << "item_id,gold_label\n";
    for (const auto& [id, code] : gold.entries())
        out << detail::csv_escape(id) << ',' << detail::csv_escape(labels.name(code)) << '\n';
    return out.str();
}

}  // namespace bace

#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "bace/error.hpp"

namespace bace {

// Ordered set of category names. Integer codes are assigned by position
// (0..K-1), so callers control the coding by ordering the labels.
class LabelSet {
public:
    explicit LabelSet(std::vector<std::string> labels) : labels_(std::move(labels)) {
        if (labels_.size() < 2) throw invalid_input("label set needs at least 2 labels");
        for (std::size_t i = 0; i < labels_.size(); ++i) {
            if (labels_[i].empty()) throw invalid_input("label names must be non-empty");
            if (index_.count(labels_[i]))
                throw invalid_input("duplicate label name: " + labels_[i]);
            index_[labels_[i]] = static_cast<int>(i);
        }
    }

    int k() const { return static_cast<int>(labels_.size()); }
    const std::string& name(int code) const { return labels_.at(static_cast<std::size_t>(code)); }
    const std::vector<std::string>& names() const { return labels_; }

    std::optional<int> code(std::string_view label) const {
        auto it = index_.find(std::string(label));
        if (it == index_.end()) return std::nullopt;
        return it->second;
    }

    bool operator==(const LabelSet& other) const { return labels_ == other.labels_; }

private:
    std::vector<std::string> labels_;
    std::unordered_map<std::string, int> index_;
};

struct AnnotationRecord {
    std::string item_id;
    std::string coder_id;
    int label = 0;

    bool operator==(const AnnotationRecord&) const = default;
};

// Long-form view of the raw coding decisions, one record per (item, coder).
class AnnotationTable {
public:
    AnnotationTable(std::vector<AnnotationRecord> records, LabelSet labels)
        : records_(std::move(records)), labels_(std::move(labels)) {
        std::map<std::pair<std::string, std::string>, int> seen;
        for (const auto& r : records_) {
            if (r.label < 0 || r.label >= labels_.k())
                throw invalid_input("label code out of range for item " + r.item_id);
            if (!seen.emplace(std::make_pair(r.item_id, r.coder_id), 1).second)
                throw invalid_input("duplicate annotation for (" + r.item_id + ", " + r.coder_id + ")");
        }
    }

    const std::vector<AnnotationRecord>& records() const { return records_; }
    const LabelSet& labels() const { return labels_; }
    std::size_t n_records() const { return records_.size(); }

private:
    std::vector<AnnotationRecord> records_;
    LabelSet labels_;
};

// Dense item x coder grid; kMissing marks cells a coder did not annotate.
class AnnotationMatrix {
public:
    static constexpr int kMissing = -1;

    AnnotationMatrix(std::vector<std::string> items, std::vector<std::string> coders,
                     std::vector<int> cells, LabelSet labels)
        : items_(std::move(items)),
          coders_(std::move(coders)),
          cells_(std::move(cells)),
          labels_(std::move(labels)) {
        if (cells_.size() != items_.size() * coders_.size())
            throw invalid_input("annotation grid dimensions do not match item/coder counts");
        for (int c : cells_) {
            if (c != kMissing && (c < 0 || c >= labels_.k()))
                throw invalid_input("label code out of range in annotation grid");
        }
        for (std::size_t i = 0; i < items_.size(); ++i) item_index_[items_[i]] = static_cast<int>(i);
        for (std::size_t j = 0; j < coders_.size(); ++j) coder_index_[coders_[j]] = static_cast<int>(j);
        if (item_index_.size() != items_.size()) throw invalid_input("duplicate item id");
        if (coder_index_.size() != coders_.size()) throw invalid_input("duplicate coder id");
    }

    int n_items() const { return static_cast<int>(items_.size()); }
    int n_coders() const { return static_cast<int>(coders_.size()); }
    const std::vector<std::string>& items() const { return items_; }
    const std::vector<std::string>& coders() const { return coders_; }
    const LabelSet& labels() const { return labels_; }

    int cell(int item, int coder) const {
        return cells_[static_cast<std::size_t>(item) * coders_.size() + static_cast<std::size_t>(coder)];
    }
    bool has(int item, int coder) const { return cell(item, coder) != kMissing; }

    std::optional<int> item_index(std::string_view id) const {
        auto it = item_index_.find(std::string(id));
        if (it == item_index_.end()) return std::nullopt;
        return it->second;
    }

    int annotation_count(int item) const {
        int n = 0;
        for (int j = 0; j < n_coders(); ++j)
            if (has(item, j)) ++n;
        return n;
    }

    std::size_t n_decisions() const {
        std::size_t n = 0;
        for (int c : cells_)
            if (c != kMissing) ++n;
        return n;
    }

    // Inverse of build_matrix: the record set in item-major, coder order.
    std::vector<AnnotationRecord> flatten() const {
        std::vector<AnnotationRecord> out;
        out.reserve(n_decisions());
        for (int i = 0; i < n_items(); ++i)
            for (int j = 0; j < n_coders(); ++j)
                if (has(i, j)) out.push_back({items_[i], coders_[j], cell(i, j)});
        return out;
    }

private:
    std::vector<std::string> items_;
    std::vector<std::string> coders_;
    std::vector<int> cells_;  // row-major item x coder
    LabelSet labels_;
    std::unordered_map<std::string, int> item_index_;
    std::unordered_map<std::string, int> coder_index_;
};

// Expert-coded ground-truth labels, item_id -> label code.
class GoldSet {
public:
    GoldSet(std::map<std::string, int> entries, const LabelSet& labels)
        : entries_(std::move(entries)) {
        for (const auto& [id, code] : entries_)
            if (code < 0 || code >= labels.k())
                throw invalid_input("gold label code out of range for item " + id);
    }

    const std::map<std::string, int>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }

    std::optional<int> label(const std::string& item_id) const {
        auto it = entries_.find(item_id);
        if (it == entries_.end()) return std::nullopt;
        return it->second;
    }

private:
    std::map<std::string, int> entries_;
};

// Densify a table. Item and coder orderings follow first appearance in the
// record sequence, so identical input always yields identical layout.
inline AnnotationMatrix build_matrix(const AnnotationTable& table) {
    if (table.records().empty()) throw invalid_input("cannot build a matrix from an empty table");

    std::vector<std::string> items, coders;
    std::unordered_map<std::string, int> item_index, coder_index;
    for (const auto& r : table.records()) {
        if (item_index.emplace(r.item_id, static_cast<int>(items.size())).second)
            items.push_back(r.item_id);
        if (coder_index.emplace(r.coder_id, static_cast<int>(coders.size())).second)
            coders.push_back(r.coder_id);
    }

    std::vector<int> cells(items.size() * coders.size(), AnnotationMatrix::kMissing);
    for (const auto& r : table.records()) {
        const std::size_t i = static_cast<std::size_t>(item_index[r.item_id]);
        const std::size_t j = static_cast<std::size_t>(coder_index[r.coder_id]);
        cells[i * coders.size() + j] = r.label;
    }
    return AnnotationMatrix(std::move(items), std::move(coders), std::move(cells), table.labels());
}

}  // namespace bace

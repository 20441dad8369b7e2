#include "hscan/core/ris.hpp"

#include <fmt/format.h>

namespace hscan::ris {

namespace {

// Values are single-line; embedded line breaks would start a bogus tag.
std::string flatten(std::string_view v) {
    std::string out;
    out.reserve(v.size());
    for (char c : v) out.push_back(c == '\r' || c == '\n' ? ' ' : c);
    return out;
}

void tag(std::string& out, std::string_view name, std::string_view value) {
    if (value.empty()) return;
    out += name;
    out += "  - ";
    out += flatten(value);
    out += "\r\n";
}

}  // namespace

void write_entry(std::string& out, const Entry& e) {
    tag(out, "TY", e.type.empty() ? "GEN" : e.type);
    tag(out, "TI", e.title);
    tag(out, "JO", e.journal);
    if (e.date && e.date->ok()) {
        tag(out, "DA", fmt::format("{:04}/{:02}/{:02}/", static_cast<int>(e.date->year()),
                                   static_cast<unsigned>(e.date->month()), static_cast<unsigned>(e.date->day())));
    }
    tag(out, "UR", e.url);
    tag(out, "AB", e.abstract);
    for (const auto& n : e.notes) tag(out, "N1", n);
    out += "ER  - \r\n";
}

std::string write(std::span<const Entry> entries) {
    std::string out;
    for (const auto& e : entries) write_entry(out, e);
    return out;
}

std::string type_for(SourceKind kind) {
    switch (kind) {
        case SourceKind::news: return "NEWS";
        case SourceKind::journal_article: return "JOUR";
        case SourceKind::trial_registry: return "DBASE";
        case SourceKind::funding_call: return "GRANT";
        case SourceKind::other: break;
    }
    return "GEN";
}

Entry from_record(const RecordItem& record) {
    Entry e;
    e.type = type_for(record.source_kind);
    e.title = record.title.empty() ? record.id : record.title;
    e.abstract = record.reference_text;
    if (record.label != Label::unlabeled) e.notes.push_back(fmt::format("Label: {}", to_string(record.label)));
    if (record.llm_bit) e.notes.push_back(fmt::format("LLM: {}", *record.llm_bit));
    return e;
}

}  // namespace hscan::ris

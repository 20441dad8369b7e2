#pragma once

#include <chrono>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "hscan/core/types.hpp"

namespace hscan::ris {

/// One reference in tag order. Empty/absent fields produce no tag line.
struct Entry {
    std::string type = "NEWS";
    std::string title;
    std::string url;
    std::optional<std::chrono::year_month_day> date;
    std::string journal;   ///< outlet for news
    std::string abstract;  ///< scraped or reference text
    std::vector<std::string> notes;
};

/// Tag lines for one entry, each terminated by CRLF, ending with `ER  - `.
void write_entry(std::string& out, const Entry& entry);

std::string write(std::span<const Entry> entries);

/// RIS type for a record kind (news → NEWS, journal article → JOUR, …).
std::string type_for(SourceKind kind);

Entry from_record(const RecordItem& record);

}  // namespace hscan::ris

#include "hscan/core/project_io.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_map>

#include <fmt/format.h>

#include "hscan/core/csv.hpp"
#include "hscan/core/errors.hpp"
#include "hscan/core/utf8.hpp"

namespace hscan {

using nlohmann::json;

bool reserved_columns::is_reserved(std::string_view column) {
    return column == id || column == label || column == label_source || column == score || column == llm_bit;
}

namespace {

std::optional<std::size_t> column_index(const csv::Row& header, std::string_view name) {
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == name) return i;
    }
    return std::nullopt;
}

std::size_t require_column(const csv::Row& header, const std::string& name, std::string_view role) {
    auto idx = column_index(header, name);
    if (!idx) throw InputError(fmt::format("missing column '{}' ({})", name, role));
    return *idx;
}

std::string format_score(double v) { return fmt::format("{}", v); }

double parse_double(std::string_view s, std::string_view what) {
    double v = 0;
    const std::string tmp(s);
    char* end = nullptr;
    v = std::strtod(tmp.c_str(), &end);
    if (tmp.empty() || end != tmp.c_str() + tmp.size()) {
        throw InputError(fmt::format("invalid number '{}' in {}", s, what));
    }
    return v;
}

}  // namespace

Project import_csv(std::string_view bytes, const ImportMapping& mapping) {
    if (utf8::trim(bytes).empty()) throw InputError("empty file");
    csv::Table table = csv::parse(bytes);
    const csv::Row& header = table.header;

    std::set<std::string_view> seen;
    for (const auto& name : header) {
        if (!seen.insert(name).second) throw InputError(fmt::format("duplicate header name '{}'", name));
    }
    if (mapping.text_column.empty()) throw InputError("no text column selected");
    const std::size_t text_idx = require_column(header, mapping.text_column, "text column");

    std::optional<std::size_t> label_idx;
    if (mapping.label_column) {
        label_idx = require_column(header, *mapping.label_column, "label column");
        if (!mapping.positive_value) throw InputError("label column given without a positive value");
    }
    std::optional<std::size_t> title_idx;
    if (mapping.title_column) {
        title_idx = require_column(header, *mapping.title_column, "title column");
    } else if (auto t = column_index(header, "title")) {
        title_idx = t;
    } else if (auto t2 = column_index(header, "Title")) {
        title_idx = t2;
    }
    std::optional<std::size_t> id_idx;
    if (mapping.id_column) id_idx = require_column(header, *mapping.id_column, "id column");

    const auto r_id = column_index(header, reserved_columns::id);
    const auto r_label = column_index(header, reserved_columns::label);
    const auto r_source = column_index(header, reserved_columns::label_source);
    const auto r_score = column_index(header, reserved_columns::score);
    const auto r_bit = column_index(header, reserved_columns::llm_bit);

    if (table.rows.empty()) throw InputError("empty dataset");

    const std::string positive = mapping.positive_value ? std::string(utf8::trim(*mapping.positive_value)) : "";

    Project project;
    project.mapping = mapping;
    project.text_column_name = mapping.text_column;
    project.label_column_name = mapping.label_column.value_or("");
    project.label_positive_value = mapping.positive_value.value_or("");
    project.records.reserve(table.rows.size());

    std::unordered_map<std::string, std::size_t> ids;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        const csv::Row& row = table.rows[r];
        RecordItem rec;
        rec.source_kind = mapping.source_kind;
        for (std::size_t c = 0; c < header.size(); ++c) {
            if (reserved_columns::is_reserved(header[c])) continue;
            rec.metadata.emplace_back(header[c], row[c]);
        }
        if (r_id && !row[*r_id].empty()) rec.id = row[*r_id];
        else if (id_idx) rec.id = row[*id_idx];
        else rec.id = fmt::format("row-{}", r + 1);
        if (rec.id.empty()) throw InputError(fmt::format("empty id on data row {}", r + 1));
        if (!ids.emplace(rec.id, r).second) throw InputError(fmt::format("duplicate record id '{}'", rec.id));

        const std::string& text = row[text_idx];
        rec.reference_text = mapping.truncate ? std::string(utf8::truncate(text, mapping.truncate_to)) : text;
        if (title_idx) rec.title = row[*title_idx];

        if (label_idx) {
            const auto cell = utf8::trim(row[*label_idx]);
            if (!cell.empty()) {
                rec.label = cell == positive ? Label::include : Label::exclude;
                rec.label_source = LabelSource::gold_import;
            }
        }
        if (r_label) {
            const auto parsed = parse_label(utf8::trim(row[*r_label]));
            if (!parsed && !row[*r_label].empty()) {
                throw InputError(fmt::format("invalid {} '{}'", reserved_columns::label, row[*r_label]));
            }
            rec.label = parsed.value_or(Label::unlabeled);
            rec.label_source = LabelSource::human;
            if (r_source) {
                if (auto src = parse_label_source(row[*r_source])) rec.label_source = *src;
            }
        }
        if (r_score && !row[*r_score].empty()) rec.current_score = parse_double(row[*r_score], reserved_columns::score);
        if (r_bit && !row[*r_bit].empty()) {
            const auto& b = row[*r_bit];
            if (b != "0" && b != "1") throw InputError(fmt::format("invalid {} '{}'", reserved_columns::llm_bit, b));
            rec.llm_bit = b == "1" ? 1 : 0;
        }
        project.records.push_back(std::move(rec));
    }
    return project;
}

std::vector<std::size_t> viewed_order(const Project& project) {
    std::unordered_map<std::string_view, std::size_t> first_event;
    for (std::size_t e = 0; e < project.label_events.size(); ++e) {
        first_event.emplace(project.label_events[e].record_id, e);
    }
    struct Key {
        bool has_event;
        std::size_t pos;
        std::size_t index;
    };
    std::vector<Key> keys;
    for (std::size_t i = 0; i < project.records.size(); ++i) {
        const auto& rec = project.records[i];
        if (rec.label == Label::unlabeled) continue;
        auto it = first_event.find(rec.id);
        if (it == first_event.end()) keys.push_back({false, i, i});
        else keys.push_back({true, it->second, i});
    }
    std::sort(keys.begin(), keys.end(), [](const Key& a, const Key& b) {
        if (a.has_event != b.has_event) return !a.has_event;
        return a.pos < b.pos;
    });
    std::vector<std::size_t> out;
    out.reserve(keys.size());
    for (const auto& k : keys) out.push_back(k.index);
    return out;
}

std::vector<std::size_t> ranked_order(const Project& project) {
    std::vector<std::size_t> order = viewed_order(project);
    std::vector<bool> placed(project.records.size(), false);
    for (auto i : order) placed[i] = true;
    if (project.latest_ranking) {
        std::unordered_map<std::string_view, std::size_t> by_id;
        for (std::size_t i = 0; i < project.records.size(); ++i) by_id.emplace(project.records[i].id, i);
        for (const auto& id : project.latest_ranking->ordering) {
            auto it = by_id.find(id);
            if (it == by_id.end() || placed[it->second]) continue;
            if (project.records[it->second].label != Label::unlabeled) continue;
            placed[it->second] = true;
            order.push_back(it->second);
        }
    }
    for (std::size_t i = 0; i < project.records.size(); ++i) {
        if (!placed[i]) order.push_back(i);
    }
    return order;
}

namespace {

std::string records_csv(const Project& project, const std::vector<std::size_t>& order, bool include_scores) {
    std::string out;
    if (project.records.empty()) return out;
    const bool any_bit = std::any_of(project.records.begin(), project.records.end(),
                                     [](const RecordItem& r) { return r.llm_bit.has_value(); });
    csv::Row header;
    for (const auto& [name, value] : project.records.front().metadata) header.push_back(name);
    header.emplace_back(reserved_columns::id);
    header.emplace_back(reserved_columns::label);
    header.emplace_back(reserved_columns::label_source);
    if (include_scores) header.emplace_back(reserved_columns::score);
    if (any_bit) header.emplace_back(reserved_columns::llm_bit);
    csv::write_row(out, header);

    const std::size_t n_meta = project.records.front().metadata.size();
    csv::Row row;
    for (std::size_t i : order) {
        const RecordItem& rec = project.records[i];
        row.clear();
        for (std::size_t c = 0; c < n_meta; ++c) {
            row.push_back(c < rec.metadata.size() ? rec.metadata[c].second : std::string());
        }
        row.push_back(rec.id);
        row.emplace_back(rec.label == Label::unlabeled ? std::string_view() : to_string(rec.label));
        row.emplace_back(rec.label == Label::unlabeled ? std::string_view() : to_string(rec.label_source));
        if (include_scores) row.push_back(rec.current_score ? format_score(*rec.current_score) : "");
        if (any_bit) row.push_back(rec.llm_bit ? std::to_string(*rec.llm_bit) : "");
        csv::write_row(out, row);
    }
    return out;
}

}  // namespace

std::string export_csv(const Project& project, bool include_scores) {
    return records_csv(project, ranked_order(project), include_scores);
}

void apply_label(Project& project, std::string_view record_id, Label new_label, Timestamp at) {
    auto idx = project.index_of(record_id);
    if (!idx) throw NotFoundError(fmt::format("unknown record id '{}'", record_id));
    RecordItem& rec = project.records[*idx];
    rec.label = new_label;
    rec.label_source = LabelSource::human;
    project.label_events.push_back(LabelEvent{
        .record_id = std::string(record_id),
        .new_label = new_label,
        .timestamp = at,
        .rerank_iteration_at_time = project.current_iteration(),
    });
}

void apply_label(Project& project, std::string_view record_id, Label new_label) {
    apply_label(project, record_id, new_label,
                std::chrono::time_point_cast<std::chrono::milliseconds>(std::chrono::system_clock::now()));
}

std::map<std::string, Label> replay_labels(const Project& base, const std::vector<LabelEvent>& events) {
    std::map<std::string, Label> labels;
    for (const auto& rec : base.records) labels[rec.id] = rec.label;
    for (const auto& e : events) {
        auto it = labels.find(e.record_id);
        if (it == labels.end()) throw NotFoundError(fmt::format("event for unknown record '{}'", e.record_id));
        it->second = e.new_label;
    }
    return labels;
}

std::string format_timestamp(Timestamp t) {
    using namespace std::chrono;
    const auto day = floor<days>(t);
    const year_month_day ymd{day};
    const hh_mm_ss hms{t - day};
    return fmt::format("{:04}-{:02}-{:02}T{:02}:{:02}:{:02}.{:03}Z", static_cast<int>(ymd.year()),
                       static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()), hms.hours().count(),
                       hms.minutes().count(), hms.seconds().count(), hms.subseconds().count());
}

Timestamp parse_timestamp(std::string_view s) {
    using namespace std::chrono;
    int y = 0;
    unsigned mo = 0, d = 0, h = 0, mi = 0, sec = 0, ms = 0;
    const std::string tmp(s);
    if (std::sscanf(tmp.c_str(), "%d-%u-%uT%u:%u:%u.%uZ", &y, &mo, &d, &h, &mi, &sec, &ms) != 7) {
        throw InputError(fmt::format("invalid timestamp '{}'", s));
    }
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok()) throw InputError(fmt::format("invalid timestamp '{}'", s));
    return sys_days{ymd} + hours{h} + minutes{mi} + seconds{sec} + milliseconds{ms};
}

json to_json(const RankingSummary& s) {
    return json{
        {"iteration", s.iteration},
        {"ranker_used", to_string(s.ranker_used)},
        {"n_seeds", s.n_seeds},
        {"sgd_fallback", s.sgd_fallback},
        {"training_includes", s.training_includes},
        {"training_excludes", s.training_excludes},
        {"n_ranked", s.n_ranked},
    };
}

namespace {

RankerKind ranker_from(const json& j) {
    auto k = parse_ranker_kind(j.get<std::string>());
    if (!k) throw InputError("invalid ranker kind in project file");
    return *k;
}

RankingSummary summary_from_json(const json& j) {
    return RankingSummary{
        .iteration = j.at("iteration").get<int>(),
        .ranker_used = ranker_from(j.at("ranker_used")),
        .n_seeds = j.at("n_seeds").get<std::size_t>(),
        .sgd_fallback = j.at("sgd_fallback").get<bool>(),
        .training_includes = j.at("training_includes").get<std::size_t>(),
        .training_excludes = j.at("training_excludes").get<std::size_t>(),
        .n_ranked = j.at("n_ranked").get<std::size_t>(),
    };
}

json state_to_json(const RankingState& s) {
    json scores = json::object();
    for (const auto& [id, v] : s.scores01) scores[id] = v;
    json combined = json::object();
    for (const auto& [id, v] : s.combined) combined[id] = v;
    return json{
        {"iteration", s.iteration},
        {"ranker_used", to_string(s.ranker_used)},
        {"ordering", s.ordering},
        {"scores01", scores},
        {"combined", combined},
        {"seeds_used", s.seeds_used},
        {"sgd_fallback", s.sgd_fallback},
        {"training_includes", s.training_includes},
        {"training_excludes", s.training_excludes},
        {"llm_pending", s.llm_pending},
    };
}

RankingState state_from_json(const json& j) {
    RankingState s;
    s.iteration = j.at("iteration").get<int>();
    s.ranker_used = ranker_from(j.at("ranker_used"));
    s.ordering = j.at("ordering").get<std::vector<std::string>>();
    for (const auto& [id, v] : j.at("scores01").items()) s.scores01[id] = v.get<double>();
    if (j.contains("combined")) {
        for (const auto& [id, v] : j["combined"].items()) s.combined[id] = v.get<double>();
    }
    s.seeds_used = j.at("seeds_used").get<std::vector<std::string>>();
    s.sgd_fallback = j.at("sgd_fallback").get<bool>();
    s.training_includes = j.at("training_includes").get<std::size_t>();
    s.training_excludes = j.at("training_excludes").get<std::size_t>();
    s.llm_pending = j.value("llm_pending", std::size_t{0});
    return s;
}

}  // namespace

json to_json(const ImportMapping& m) {
    json j{
        {"text_column", m.text_column},
        {"source_kind", to_string(m.source_kind)},
        {"truncate_to", m.truncate_to},
        {"truncate", m.truncate},
    };
    if (m.label_column) j["label_column"] = *m.label_column;
    if (m.positive_value) j["positive_value"] = *m.positive_value;
    if (m.title_column) j["title_column"] = *m.title_column;
    if (m.id_column) j["id_column"] = *m.id_column;
    return j;
}

ImportMapping mapping_from_json(const json& j) {
    if (!j.is_object()) throw InputError("mapping must be a JSON object");
    ImportMapping m;
    if (!j.contains("text_column") || !j["text_column"].is_string()) {
        throw InputError("mapping.text_column is required");
    }
    m.text_column = j["text_column"].get<std::string>();
    const auto opt = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key) || j[key].is_null()) return std::nullopt;
        if (!j[key].is_string()) throw InputError(fmt::format("mapping.{} must be a string", key));
        return j[key].get<std::string>();
    };
    m.label_column = opt("label_column");
    m.positive_value = opt("positive_value");
    m.title_column = opt("title_column");
    m.id_column = opt("id_column");
    if (auto sk = opt("source_kind")) {
        auto parsed = parse_source_kind(*sk);
        if (!parsed) throw InputError(fmt::format("unknown source_kind '{}'", *sk));
        m.source_kind = *parsed;
    }
    if (j.contains("truncate_to")) {
        if (!j["truncate_to"].is_number_unsigned()) throw InputError("mapping.truncate_to must be a positive integer");
        m.truncate_to = j["truncate_to"].get<std::size_t>();
    }
    if (j.contains("truncate")) m.truncate = j["truncate"].get<bool>();
    return m;
}

std::string serialize_project(const Project& project) {
    std::vector<std::size_t> order(project.records.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

    json events = json::array();
    for (const auto& e : project.label_events) {
        events.push_back({
            {"record_id", e.record_id},
            {"new_label", to_string(e.new_label)},
            {"timestamp", format_timestamp(e.timestamp)},
            {"rerank_iteration_at_time", e.rerank_iteration_at_time},
        });
    }
    json history = json::array();
    for (const auto& s : project.ranking_history) history.push_back(to_json(s));

    json j{
        {"format_version", kProjectFormatVersion},
        {"id", project.id},
        {"mapping", to_json(project.mapping)},
        {"records_csv", records_csv(project, order, true)},
        {"label_events", events},
        {"ranking_history", history},
        {"latest_ranking", project.latest_ranking ? state_to_json(*project.latest_ranking) : json(nullptr)},
    };
    return j.dump(2) + "\n";
}

Project deserialize_project(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw InputError(fmt::format("project file is not valid JSON: {}", e.what()));
    }
    try {
        const int version = j.at("format_version").get<int>();
        if (version != kProjectFormatVersion) {
            throw InputError(fmt::format("unsupported project format_version {}", version));
        }
        ImportMapping mapping = mapping_from_json(j.at("mapping"));
        Project project = import_csv(j.at("records_csv").get<std::string>(), mapping);
        project.id = j.at("id").get<std::string>();
        for (const auto& e : j.at("label_events")) {
            auto label = parse_label(e.at("new_label").get<std::string>());
            if (!label) throw InputError("invalid label in project events");
            project.label_events.push_back(LabelEvent{
                .record_id = e.at("record_id").get<std::string>(),
                .new_label = *label,
                .timestamp = parse_timestamp(e.at("timestamp").get<std::string>()),
                .rerank_iteration_at_time = e.at("rerank_iteration_at_time").get<int>(),
            });
        }
        for (const auto& s : j.at("ranking_history")) project.ranking_history.push_back(summary_from_json(s));
        if (j.contains("latest_ranking") && !j["latest_ranking"].is_null()) {
            project.latest_ranking = state_from_json(j["latest_ranking"]);
        }
        return project;
    } catch (const json::exception& e) {
        throw InputError(fmt::format("malformed project file: {}", e.what()));
    }
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open '{}'", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view bytes) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(fmt::format("cannot write '{}'", path.string()));
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error(fmt::format("write failed for '{}'", path.string()));
}

void save_project(const Project& project, const std::filesystem::path& path) {
    write_file(path, serialize_project(project));
}

Project load_project(const std::filesystem::path& path) { return deserialize_project(read_file(path)); }

}  // namespace hscan

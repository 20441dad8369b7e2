#include "hscan/llm/prompt.hpp"

#include <array>
#include <algorithm>
#include <cctype>

#include <fmt/format.h>
#include <openssl/evp.h>

#include "hscan/core/errors.hpp"
#include "hscan/core/utf8.hpp"

namespace hscan::llm {

void PromptTemplate::validate() const {
    if (utf8::trim(scene).empty()) throw InputError("prompt part 1 (scene) is empty");
    if (utf8::trim(criteria).empty()) throw InputError("prompt part 2 (criteria) is empty");
    if (utf8::trim(output_instruction).empty()) throw InputError("prompt part 4 (output instruction) is empty");
}

nlohmann::json to_json(const PromptTemplate& t) {
    nlohmann::json j{{"part1", t.scene}, {"part2", t.criteria}, {"part4", t.output_instruction}};
    j["part3"] = t.exclusions ? nlohmann::json(*t.exclusions) : nlohmann::json(nullptr);
    return j;
}

PromptTemplate template_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InputError("prompt template must be a JSON object");
    const auto get = [&](const char* a, const char* b) -> std::optional<std::string> {
        for (const char* key : {a, b}) {
            auto it = j.find(key);
            if (it == j.end() || it->is_null()) continue;
            if (!it->is_string()) throw InputError(fmt::format("prompt field '{}' must be a string", key));
            return it->get<std::string>();
        }
        return std::nullopt;
    };
    PromptTemplate t;
    t.scene = get("part1", "scene").value_or("");
    t.criteria = get("part2", "criteria").value_or("");
    t.exclusions = get("part3", "exclusions");
    if (t.exclusions && utf8::trim(*t.exclusions).empty()) t.exclusions.reset();
    if (auto p4 = get("part4", "output_instruction")) t.output_instruction = *p4;
    t.validate();
    return t;
}

std::string render_prompt(const PromptTemplate& t, std::string_view reference_text) {
    t.validate();
    if (utf8::trim(reference_text).empty()) throw InputError("empty reference text");
    std::string out;
    out.reserve(t.scene.size() + t.criteria.size() + t.output_instruction.size() + reference_text.size() + 64);
    out += t.scene;
    out += "\n\n";
    out += t.criteria;
    out += "\n\n";
    if (t.exclusions) {
        out += *t.exclusions;
        out += "\n\n";
    }
    out += t.output_instruction;
    out += "\n\n";
    out += kArticlePrefix;
    out += reference_text;
    return out;
}

std::string prompt_hash(std::string_view prompt) {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned int len = 0;
    if (EVP_Digest(prompt.data(), prompt.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha-256 digest failed");
    }
    std::string hex;
    hex.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", md[i]);
    return hex;
}

std::string_view to_string(ParseStatus s) {
    switch (s) {
        case ParseStatus::clean: return "clean";
        case ParseStatus::salvaged: return "salvaged";
        case ParseStatus::defaulted: return "defaulted";
        case ParseStatus::defaulted_on_error: return "defaulted_on_error";
    }
    return "defaulted";
}

std::optional<ParseStatus> parse_status_from(std::string_view s) {
    for (auto st : {ParseStatus::clean, ParseStatus::salvaged, ParseStatus::defaulted, ParseStatus::defaulted_on_error}) {
        if (to_string(st) == s) return st;
    }
    return std::nullopt;
}

namespace {

struct Token {
    std::size_t begin;
    std::size_t end;
    int bit;
};

// Letters and digits, including non-ASCII letters; punctuation blocks are separators.
bool word_char(char32_t cp) {
    if (cp < 0x80) return std::isalnum(static_cast<int>(cp)) != 0;
    if (cp <= 0xBF || (cp >= 0x2000 && cp <= 0x2BFF) || (cp >= 0x3000 && cp <= 0x303F)) return false;
    return cp != 0xFFFD && cp != 0xFEFF;
}

// Byte length of the UTF-8 sequence starting with `lead`.
std::size_t seq_len(unsigned char lead) {
    if (lead < 0x80) return 1;
    if ((lead & 0xE0) == 0xC0) return 2;
    if ((lead & 0xF0) == 0xE0) return 3;
    if ((lead & 0xF8) == 0xF0) return 4;
    return 1;
}

std::optional<Token> find_verdict(std::string_view s) {
    std::size_t i = 0;
    while (i < s.size()) {
        std::size_t j = i;
        while (j < s.size()) {
            const std::size_t n = std::min(seq_len(static_cast<unsigned char>(s[j])), s.size() - j);
            const auto cps = utf8::decode(s.substr(j, n));
            if (cps.empty() || !word_char(cps.front())) break;
            j += n;
        }
        if (j == i) {
            i += std::min(seq_len(static_cast<unsigned char>(s[i])), s.size() - i);
            continue;
        }
        const std::string word = utf8::ascii_lower(s.substr(i, j - i));
        if (word == "yes" || word == "no") return Token{i, j, word == "yes" ? 1 : 0};
        i = j;
    }
    return std::nullopt;
}

std::string tidy_justification(std::string_view rest) {
    rest = utf8::trim(rest);
    // Drop separators the model puts between verdict and quote.
    while (!rest.empty()) {
        if (rest.front() == '.' || rest.front() == ',' || rest.front() == ':' || rest.front() == ';' ||
            rest.front() == '-' || rest.front() == '!') {
            rest.remove_prefix(1);
        } else if (rest.substr(0, 3) == "\xE2\x80\x94" || rest.substr(0, 3) == "\xE2\x80\x93") {
            rest.remove_prefix(3);
        } else {
            break;
        }
        rest = utf8::trim(rest);
    }
    return std::string(rest);
}

}  // namespace

ParsedResponse parse_response(std::string_view raw) {
    ParsedResponse out;
    const std::size_t head = utf8::truncate(raw, 16).size();
    auto tok = find_verdict(raw);
    if (!tok) {
        out.bit = 1;
        out.status = ParseStatus::defaulted;
        out.justification = std::string(utf8::trim(raw));
        return out;
    }
    out.bit = tok->bit;
    out.status = tok->end <= head ? ParseStatus::clean : ParseStatus::salvaged;
    out.justification = tidy_justification(raw.substr(tok->end));
    return out;
}

}  // namespace hscan::llm

#include "topicflow/corpus.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <istream>
#include <regex>
#include <unordered_map>

#include <json.hpp>
#include <unicode/locid.h>
#include <unicode/normalizer2.h>
#include <unicode/uchar.h>
#include <unicode/unistr.h>
#include <unicode/ustring.h>
#include <unicode/utf8.h>

#include "topicflow/csv.hpp"
#include "topicflow/errors.hpp"

namespace topicflow {

namespace {

std::string ascii_lower(std::string_view s)
{
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

std::string_view trim(std::string_view s)
{
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) {
        s.remove_prefix(1);
    }
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) {
        s.remove_suffix(1);
    }
    return s;
}

bool valid_utf8(std::string_view s)
{
    UErrorCode status = U_ZERO_ERROR;
    int32_t needed = 0;
    u_strFromUTF8(nullptr, 0, &needed, s.data(), static_cast<int32_t>(s.size()), &status);
    return status == U_BUFFER_OVERFLOW_ERROR || U_SUCCESS(status);
}

template <typename Int>
bool parse_int(std::string_view s, Int& out)
{
    if (s.empty()) {
        return false;
    }
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
    return ec == std::errc{} && ptr == s.data() + s.size();
}

bool all_digits(std::string_view s)
{
    return !s.empty() && std::all_of(s.begin(), s.end(), [](unsigned char c) { return std::isdigit(c); });
}

}  // namespace

std::string_view to_string(Party party) noexcept
{
    switch (party) {
    case Party::Democrat: return "Democrat";
    case Party::Republican: return "Republican";
    case Party::Independent: return "Independent";
    }
    return "?";
}

std::string_view to_string(AccountType type) noexcept
{
    return type == AccountType::Personal ? "personal" : "professional";
}

char party_code(Party party) noexcept
{
    switch (party) {
    case Party::Democrat: return 'D';
    case Party::Republican: return 'R';
    case Party::Independent: return 'I';
    }
    return '?';
}

std::optional<Party> parse_party(std::string_view text)
{
    const std::string s = ascii_lower(trim(text));
    if (s == "d" || s == "democrat" || s == "democratic") {
        return Party::Democrat;
    }
    if (s == "r" || s == "republican") {
        return Party::Republican;
    }
    if (s == "i" || s == "independent") {
        return Party::Independent;
    }
    return std::nullopt;
}

std::optional<AccountType> parse_account_type(std::string_view text)
{
    const std::string s = ascii_lower(trim(text));
    if (s == "personal") {
        return AccountType::Personal;
    }
    if (s == "professional") {
        return AccountType::Professional;
    }
    return std::nullopt;
}

std::optional<Timestamp> parse_timestamp(std::string_view text)
{
    using namespace std::chrono;
    std::string_view s = trim(text);
    if (s.size() < 10 || s[4] != '-' || s[7] != '-') {
        return std::nullopt;
    }
    int y = 0;
    unsigned mo = 0;
    unsigned d = 0;
    if (!all_digits(s.substr(0, 4)) || !all_digits(s.substr(5, 2)) || !all_digits(s.substr(8, 2)) ||
        !parse_int(s.substr(0, 4), y) || !parse_int(s.substr(5, 2), mo) || !parse_int(s.substr(8, 2), d)) {
        return std::nullopt;
    }
    const year_month_day ymd{year{y}, month{mo}, day{d}};
    if (!ymd.ok()) {
        return std::nullopt;
    }
    sys_seconds result = sys_days{ymd};
    s.remove_prefix(10);
    if (s.empty()) {
        return result;
    }
    if (s[0] != 'T' && s[0] != ' ' && s[0] != 't') {
        return std::nullopt;
    }
    s.remove_prefix(1);
    // hh:mm[:ss[.fff]]
    if (s.size() < 5 || s[2] != ':' || !all_digits(s.substr(0, 2)) || !all_digits(s.substr(3, 2))) {
        return std::nullopt;
    }
    int hh = 0;
    int mm = 0;
    int ss = 0;
    parse_int(s.substr(0, 2), hh);
    parse_int(s.substr(3, 2), mm);
    s.remove_prefix(5);
    if (!s.empty() && s[0] == ':') {
        if (s.size() < 3 || !all_digits(s.substr(1, 2))) {
            return std::nullopt;
        }
        parse_int(s.substr(1, 2), ss);
        s.remove_prefix(3);
        if (!s.empty() && (s[0] == '.' || s[0] == ',')) {
            std::size_t n = 1;
            while (n < s.size() && std::isdigit(static_cast<unsigned char>(s[n]))) {
                ++n;
            }
            if (n == 1) {
                return std::nullopt;
            }
            s.remove_prefix(n);  // sub-second precision is not retained
        }
    }
    if (hh > 23 || mm > 59 || ss > 60) {
        return std::nullopt;
    }
    result += hours{hh} + minutes{mm} + seconds{ss};
    if (s.empty() || s == "Z" || s == "z") {
        return result;
    }
    if (s[0] != '+' && s[0] != '-') {
        return std::nullopt;
    }
    const int sign = s[0] == '+' ? 1 : -1;
    s.remove_prefix(1);
    int oh = 0;
    int om = 0;
    if (s.size() == 5 && s[2] == ':' && all_digits(s.substr(0, 2)) && all_digits(s.substr(3, 2))) {
        parse_int(s.substr(0, 2), oh);
        parse_int(s.substr(3, 2), om);
    } else if (s.size() == 4 && all_digits(s)) {
        parse_int(s.substr(0, 2), oh);
        parse_int(s.substr(2, 2), om);
    } else if (s.size() == 2 && all_digits(s)) {
        parse_int(s, oh);
    } else {
        return std::nullopt;
    }
    if (oh > 23 || om > 59) {
        return std::nullopt;
    }
    result -= sign * (hours{oh} + minutes{om});
    return result;
}

MonthKey MonthKey::from_timestamp(Timestamp ts)
{
    using namespace std::chrono;
    const year_month_day ymd{floor<days>(ts)};
    return MonthKey{static_cast<int>(ymd.year()), static_cast<int>(static_cast<unsigned>(ymd.month()))};
}

std::optional<MonthKey> MonthKey::parse(std::string_view text)
{
    if (text.size() != 7 || text[4] != '-' || !all_digits(text.substr(0, 4)) || !all_digits(text.substr(5, 2))) {
        return std::nullopt;
    }
    MonthKey key;
    parse_int(text.substr(0, 4), key.year);
    parse_int(text.substr(5, 2), key.month);
    if (key.month < 1 || key.month > 12) {
        return std::nullopt;
    }
    return key;
}

MonthKey MonthKey::next() const noexcept
{
    return month == 12 ? MonthKey{year + 1, 1} : MonthKey{year, month + 1};
}

std::string MonthKey::to_string() const
{
    char buffer[16];
    std::snprintf(buffer, sizeof buffer, "%04d-%02d", year, month);
    return buffer;
}

// ---------------------------------------------------------------------------
// Record parsing

namespace {

constexpr std::array<std::string_view, 6> kRequiredFields = {"id", "timestamp", "author", "party", "account_type",
                                                              "text"};

struct FieldValues {
    std::string id, timestamp, author, party, account_type, text;
};

RawRecord make_record(FieldValues values)
{
    if (!valid_utf8(values.text) || !valid_utf8(values.author) || !valid_utf8(values.id)) {
        throw DataError("invalid UTF-8");
    }
    RawRecord record;
    record.id = std::string(trim(values.id));
    if (record.id.empty()) {
        throw DataError("empty id");
    }
    auto ts = parse_timestamp(values.timestamp);
    if (!ts) {
        throw DataError("unparseable timestamp '" + values.timestamp + "'");
    }
    record.timestamp = *ts;
    auto party = parse_party(values.party);
    if (!party) {
        throw DataError("unknown party '" + values.party + "'");
    }
    record.party = *party;
    auto account = parse_account_type(values.account_type);
    if (!account) {
        throw DataError("unknown account_type '" + values.account_type + "'");
    }
    record.account_type = *account;
    record.author = std::string(trim(values.author));
    record.text = std::move(values.text);
    return record;
}

void parse_csv(std::istream& in, const ParseOptions& options, ParseResult& result, std::vector<std::size_t>& lines)
{
    csv::Reader reader(in);
    auto header = reader.next();
    if (!header) {
        return;
    }
    std::unordered_map<std::string, std::size_t> column;
    for (std::size_t i = 0; i < header->fields.size(); ++i) {
        std::string name = ascii_lower(trim(header->fields[i]));
        if (i == 0 && name.starts_with("\xEF\xBB\xBF")) {
            name.erase(0, 3);
        }
        column.emplace(std::move(name), i);
    }
    for (auto field : kRequiredFields) {
        if (!column.contains(std::string(field))) {
            throw DataError("CSV header is missing required column '" + std::string(field) + "'");
        }
    }
    while (auto row = reader.next()) {
        if (row->fields.size() == 1 && trim(row->fields[0]).empty()) {
            continue;
        }
        try {
            if (row->fields.size() != header->fields.size()) {
                throw DataError("expected " + std::to_string(header->fields.size()) + " fields, found " +
                                std::to_string(row->fields.size()));
            }
            auto get = [&](std::string_view name) { return row->fields[column.at(std::string(name))]; };
            result.records.push_back(make_record(FieldValues{get("id"), get("timestamp"), get("author"),
                                                             get("party"), get("account_type"), get("text")}));
            lines.push_back(row->line);
        } catch (const DataError& e) {
            if (!options.skip_malformed) {
                throw DataError("line " + std::to_string(row->line) + ": " + e.what());
            }
            result.skipped.push_back(RowError{row->line, e.what()});
        }
    }
}

std::string json_scalar(const nlohmann::json& value, std::string_view key)
{
    if (value.is_string()) {
        return value.get<std::string>();
    }
    if (value.is_number_integer()) {
        return std::to_string(value.get<long long>());
    }
    throw DataError("field '" + std::string(key) + "' must be a string");
}

void parse_jsonl(std::istream& in, const ParseOptions& options, ParseResult& result, std::vector<std::size_t>& lines)
{
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) {
            continue;
        }
        nlohmann::json object;
        try {
            object = nlohmann::json::parse(line);
            if (!object.is_object()) {
                throw DataError("expected a JSON object");
            }
        } catch (const nlohmann::json::parse_error& e) {
            if (!options.skip_malformed) {
                throw DataError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
            }
            result.skipped.push_back(RowError{line_no, std::string("malformed JSON: ") + e.what()});
            continue;
        } catch (const DataError& e) {
            if (!options.skip_malformed) {
                throw DataError("line " + std::to_string(line_no) + ": " + e.what());
            }
            result.skipped.push_back(RowError{line_no, e.what()});
            continue;
        }
        for (auto field : kRequiredFields) {
            if (!object.contains(std::string(field))) {
                throw DataError("line " + std::to_string(line_no) + ": missing required field '" +
                                std::string(field) + "'");
            }
        }
        try {
            auto get = [&](std::string_view key) { return json_scalar(object.at(std::string(key)), key); };
            result.records.push_back(make_record(FieldValues{get("id"), get("timestamp"), get("author"),
                                                             get("party"), get("account_type"), get("text")}));
            lines.push_back(line_no);
        } catch (const DataError& e) {
            if (!options.skip_malformed) {
                throw DataError("line " + std::to_string(line_no) + ": " + e.what());
            }
            result.skipped.push_back(RowError{line_no, e.what()});
        }
    }
}

}  // namespace

ParseResult parse_records(std::istream& in, InputFormat format, const ParseOptions& options)
{
    ParseResult result;
    std::vector<std::size_t> lines;
    if (format == InputFormat::Csv) {
        parse_csv(in, options, result, lines);
    } else {
        parse_jsonl(in, options, result, lines);
    }
    std::unordered_map<std::string_view, std::size_t> seen;
    for (std::size_t i = 0; i < result.records.size(); ++i) {
        auto [it, inserted] = seen.emplace(result.records[i].id, lines[i]);
        if (!inserted) {
            throw DataError("line " + std::to_string(lines[i]) + ": duplicate id '" + result.records[i].id +
                            "' (first seen on line " + std::to_string(it->second) + ")");
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Cleaning

std::map<std::string, std::string> PreprocessConfig::default_entity_map()
{
    return {
        {"<br>", " "},   {"<br/>", " "},   {"<br />", " "}, {"%quot;", "\""}, {"&quot;", "\""},
        {"&#39;", "'"},  {"&#x27;", "'"},  {"&apos;", "'"}, {"&amp;", "&"},   {"&lt;", "<"},
        {"&gt;", ">"},   {"&nbsp;", " "},
    };
}

void PreprocessConfig::validate() const
{
    for (const auto& [key, value] : entity_map) {
        if (key.empty()) {
            throw ConfigError("entity_map contains an empty key");
        }
    }
    for (const auto& [form, lemma] : lemma_table) {
        auto it = lemma_table.find(lemma);
        if (it != lemma_table.end() && it->second != lemma) {
            throw ConfigError("lemma table is not idempotent: '" + form + "' -> '" + lemma + "' -> '" + it->second +
                              "'");
        }
        if (stopwords.contains(lemma) && !stopwords.contains(form)) {
            throw ConfigError("lemma table maps '" + form + "' onto stopword '" + lemma + "'");
        }
    }
}

namespace {

std::string to_lower_unicode(std::string_view s)
{
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    u.toLower(icu::Locale::getRoot());
    std::string out;
    u.toUTF8String(out);
    return out;
}

std::string nfc(std::string_view s)
{
    UErrorCode status = U_ZERO_ERROR;
    const icu::Normalizer2* normalizer = icu::Normalizer2::getNFCInstance(status);
    if (U_FAILURE(status)) {
        throw InvariantError("ICU NFC normalizer unavailable");
    }
    icu::UnicodeString u = icu::UnicodeString::fromUTF8(icu::StringPiece(s.data(), static_cast<int32_t>(s.size())));
    icu::UnicodeString normalized = normalizer->normalize(u, status);
    if (U_FAILURE(status)) {
        throw InvariantError("NFC normalization failed");
    }
    std::string out;
    normalized.toUTF8String(out);
    return out;
}

std::string replace_entities(std::string_view s, const std::map<std::string, std::string>& entities)
{
    std::size_t longest = 0;
    for (const auto& [key, value] : entities) {
        longest = std::max(longest, key.size());
    }
    std::string out;
    out.reserve(s.size());
    std::size_t i = 0;
    while (i < s.size()) {
        bool replaced = false;
        for (std::size_t len = std::min(longest, s.size() - i); len > 0; --len) {
            auto it = entities.find(std::string(s.substr(i, len)));
            if (it != entities.end()) {
                out += it->second;
                i += len;
                replaced = true;
                break;
            }
        }
        if (!replaced) {
            out.push_back(s[i]);
            ++i;
        }
    }
    return out;
}

template <typename Fn>
void for_each_codepoint(std::string_view s, Fn&& fn)
{
    int32_t i = 0;
    const auto n = static_cast<int32_t>(s.size());
    const auto* bytes = reinterpret_cast<const uint8_t*>(s.data());
    while (i < n) {
        const int32_t start = i;
        UChar32 c = 0;
        U8_NEXT(bytes, i, n, c);
        fn(c, s.substr(static_cast<std::size_t>(start), static_cast<std::size_t>(i - start)));
    }
}

bool is_space(UChar32 c)
{
    return u_isUWhiteSpace(c) != 0;
}

std::vector<std::string> split_words(std::string_view s)
{
    std::vector<std::string> words;
    std::string current;
    for_each_codepoint(s, [&](UChar32 c, std::string_view bytes) {
        if (is_space(c)) {
            if (!current.empty()) {
                words.push_back(std::move(current));
                current.clear();
            }
        } else {
            current.append(bytes);
        }
    });
    if (!current.empty()) {
        words.push_back(std::move(current));
    }
    return words;
}

bool is_word_char(UChar32 c)
{
    return u_isalnum(c) != 0 || u_charType(c) == U_NON_SPACING_MARK || u_charType(c) == U_COMBINING_SPACING_MARK ||
           c == '_';
}

bool is_emoji_like(UChar32 c)
{
    if (c == 0x200D || c == 0xFE0F || c == 0xFE0E || c == 0x20E3) {
        return true;
    }
    if ((c >= 0x1F1E6 && c <= 0x1F1FF) || (c >= 0xE0020 && c <= 0xE007F)) {
        return true;
    }
    return u_hasBinaryProperty(c, UCHAR_EXTENDED_PICTOGRAPHIC) != 0 ||
           u_hasBinaryProperty(c, UCHAR_EMOJI_MODIFIER) != 0;
}

/// Strips leading openers such as "(" or quotes before prefix detection.
std::string_view strip_leading_openers(std::string_view w)
{
    static constexpr std::string_view kOpeners = "([{\"'<";
    while (!w.empty() && kOpeners.find(w.front()) != std::string_view::npos) {
        w.remove_prefix(1);
    }
    return w;
}

/// Longest prefix made of word characters.
std::string leading_word(std::string_view s)
{
    std::string out;
    bool stop = false;
    for_each_codepoint(s, [&](UChar32 c, std::string_view bytes) {
        if (stop) {
            return;
        }
        if (is_word_char(c)) {
            out.append(bytes);
        } else {
            stop = true;
        }
    });
    return out;
}

std::string strip_trailing_url_punctuation(std::string_view s)
{
    static constexpr std::string_view kTrailing = ".,;:!?)]}\"'>";
    while (!s.empty() && kTrailing.find(s.back()) != std::string_view::npos) {
        s.remove_suffix(1);
    }
    return std::string(s);
}

bool looks_like_url(std::string_view word)
{
    const std::string lower = ascii_lower(word);
    if (lower.starts_with("http://") || lower.starts_with("https://") || lower.starts_with("www.")) {
        return true;
    }
    static const std::regex bare_domain(R"(^[a-z0-9-]+(\.[a-z0-9-]+)*\.[a-z]{2,}/\S*$)");
    return std::regex_match(lower, bare_domain);
}

}  // namespace

CleanedText clean_text(std::string_view raw, const PreprocessConfig& config)
{
    CleanedText result;
    const std::string replaced = replace_entities(nfc(raw), config.entity_map);

    std::vector<std::string> kept;
    for (const std::string& word : split_words(replaced)) {
        const std::string_view core = strip_leading_openers(word);
        if (core.size() > 1 && (core.front() == '#' || core.front() == '@')) {
            const std::string body = leading_word(core.substr(1));
            if (!body.empty()) {
                (core.front() == '#' ? result.hashtags : result.mentions).push_back(body);
                continue;
            }
        }
        if (looks_like_url(core)) {
            result.urls.push_back(strip_trailing_url_punctuation(core));
            continue;
        }
        kept.push_back(word);
    }

    if (config.drop_retweet_marker && !kept.empty()) {
        const std::string first = ascii_lower(kept.front());
        if (first == "rt" || first == "rt:") {
            kept.erase(kept.begin());
        }
    }

    std::string stripped;
    for (const std::string& word : kept) {
        stripped.push_back(' ');
        for_each_codepoint(word, [&](UChar32 c, std::string_view bytes) {
            if (c < 0) {
                return;  // ill-formed sequence
            }
            if (is_emoji_like(c)) {
                if (config.keep_emoji) {
                    stripped.append(bytes);
                }
                return;
            }
            const int8_t type = u_charType(c);
            const bool letter_like = u_isalpha(c) != 0 || u_isdigit(c) != 0 || type == U_LETTER_NUMBER ||
                                     type == U_OTHER_NUMBER || type == U_NON_SPACING_MARK ||
                                     type == U_COMBINING_SPACING_MARK || type == U_ENCLOSING_MARK;
            if (letter_like) {
                stripped.append(bytes);
            }
        });
    }

    const std::string lowered = to_lower_unicode(stripped);
    for (const std::string& word : split_words(lowered)) {
        if (!result.text.empty()) {
            result.text.push_back(' ');
        }
        result.text += word;
    }
    return result;
}

namespace {

std::vector<std::string> lemmatize_words(std::string_view text, const PreprocessConfig& config, bool drop_stopwords)
{
    std::vector<std::string> out;
    for (std::string& token : split_words(text)) {
        if (drop_stopwords && config.stopwords.contains(token)) {
            continue;
        }
        auto it = config.lemma_table.find(token);
        out.push_back(it == config.lemma_table.end() ? std::move(token) : it->second);
    }
    return out;
}

std::vector<std::string> read_lines(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open " + path.string());
    }
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(std::move(line));
    }
    return lines;
}

}  // namespace

std::vector<std::string> tokenize_lemmatize(std::string_view text, const PreprocessConfig& config)
{
    return lemmatize_words(text, config, true);
}

std::vector<std::string> lemmatize_all(std::string_view text, const PreprocessConfig& config)
{
    return lemmatize_words(text, config, false);
}

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path)
{
    std::unordered_set<std::string> words;
    for (const std::string& line : read_lines(path)) {
        const std::string_view token = trim(line);
        if (token.empty() || token.front() == '#') {
            continue;
        }
        words.insert(to_lower_unicode(token));
    }
    return words;
}

std::unordered_map<std::string, std::string> load_lemma_table(const std::filesystem::path& path)
{
    std::unordered_map<std::string, std::string> table;
    std::size_t line_no = 0;
    for (const std::string& line : read_lines(path)) {
        ++line_no;
        const std::string_view content = trim(line);
        if (content.empty() || content.front() == '#') {
            continue;
        }
        const auto tab = content.find('\t');
        if (tab == std::string_view::npos || content.find('\t', tab + 1) != std::string_view::npos) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected 'form<TAB>lemma'");
        }
        const std::string form = to_lower_unicode(trim(content.substr(0, tab)));
        const std::string lemma = to_lower_unicode(trim(content.substr(tab + 1)));
        if (form.empty() || lemma.empty()) {
            throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": empty form or lemma");
        }
        table[form] = lemma;
    }
    return table;
}

PreprocessResult preprocess(std::span<const RawRecord> records, const PreprocessConfig& config)
{
    PreprocessResult result;
    for (const RawRecord& record : records) {
        CleanedText cleaned = clean_text(record.text, config);
        std::vector<std::string> tokens = tokenize_lemmatize(cleaned.text, config);
        if (tokens.empty()) {
            result.dropped_ids.push_back(record.id);
            continue;
        }
        Document doc;
        doc.id = record.id;
        doc.author = record.author;
        doc.party = record.party;
        doc.account_type = record.account_type;
        doc.month = MonthKey::from_timestamp(record.timestamp);
        doc.tokens = std::move(tokens);
        doc.all_lemmas = lemmatize_all(cleaned.text, config);
        doc.hashtags = std::move(cleaned.hashtags);
        doc.mentions = std::move(cleaned.mentions);
        doc.urls = std::move(cleaned.urls);
        result.documents.push_back(std::move(doc));
    }
    return result;
}

std::map<MonthKey, std::vector<Document>> bin_by_month(std::span<const Document> docs)
{
    std::map<MonthKey, std::vector<Document>> bins;
    for (const Document& doc : docs) {
        bins[doc.month].push_back(doc);
    }
    return bins;
}

}  // namespace topicflow

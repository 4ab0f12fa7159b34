#pragma once

#include <chrono>
#include <compare>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

namespace topicflow {

enum class Party { Democrat, Republican, Independent };
enum class AccountType { Personal, Professional };

std::string_view to_string(Party party) noexcept;
std::string_view to_string(AccountType type) noexcept;
/// Single-letter code used in corpus files and moral.csv: D, R or I.
char party_code(Party party) noexcept;
/// Accepts D|R|I or the full party name, case-insensitively.
std::optional<Party> parse_party(std::string_view text);
std::optional<AccountType> parse_account_type(std::string_view text);

using Timestamp = std::chrono::sys_seconds;

/// ISO-8601 date or date-time. Offsets are folded into UTC; a missing zone
/// designator means UTC.
std::optional<Timestamp> parse_timestamp(std::string_view text);

/// Calendar month, ordered chronologically.
struct MonthKey {
    int year = 0;
    int month = 1;  // 1..12

    auto operator<=>(const MonthKey&) const = default;

    static MonthKey from_timestamp(Timestamp ts);
    /// Parses "YYYY-MM".
    static std::optional<MonthKey> parse(std::string_view text);

    /// Months elapsed since year 0; differences of ordinals are month distances.
    [[nodiscard]] int ordinal() const noexcept { return year * 12 + (month - 1); }
    [[nodiscard]] MonthKey next() const noexcept;
    [[nodiscard]] std::string to_string() const;
};

struct RawRecord {
    std::string id;
    Timestamp timestamp{};
    std::string author;
    Party party = Party::Democrat;
    AccountType account_type = AccountType::Personal;
    std::string text;
};

enum class InputFormat { Csv, JsonLines };

struct RowError {
    std::size_t line = 0;
    std::string message;
};

struct ParseOptions {
    /// Drop malformed rows and report them instead of failing.
    bool skip_malformed = false;
};

struct ParseResult {
    std::vector<RawRecord> records;
    std::vector<RowError> skipped;
};

/// Reads id, timestamp, author, party, account_type and text per row.
/// A missing column (CSV header) or key (JSON-lines) is fatal; a row with an
/// unparseable value is a RowError naming its line, fatal unless skipped.
/// Duplicate ids are always fatal.
ParseResult parse_records(std::istream& in, InputFormat format, const ParseOptions& options = {});

struct PreprocessConfig {
    std::unordered_set<std::string> stopwords;
    std::unordered_map<std::string, std::string> lemma_table;
    std::map<std::string, std::string> entity_map = default_entity_map();
    bool drop_retweet_marker = true;
    bool keep_emoji = false;

    static std::map<std::string, std::string> default_entity_map();

    /// Throws ConfigError when an entity key is empty, the lemma table is not
    /// idempotent, or a non-stopword form maps onto a stopword lemma.
    void validate() const;
};

std::unordered_set<std::string> load_stopwords(const std::filesystem::path& path);
/// Tab-separated "form<TAB>lemma" lines; blank lines and '#' comments skipped.
std::unordered_map<std::string, std::string> load_lemma_table(const std::filesystem::path& path);

struct CleanedText {
    std::string text;
    std::vector<std::string> hashtags;
    std::vector<std::string> mentions;
    std::vector<std::string> urls;
};

/// NFC normalization, web-escape replacement, hashtag/mention/URL
/// extraction, leading "RT" removal, punctuation strip and lowercasing, in
/// that order. Whitespace in the result is collapsed to single spaces.
CleanedText clean_text(std::string_view raw, const PreprocessConfig& config);

/// Whitespace split, stopword removal, then lemma lookup; unknown tokens pass
/// through unchanged.
std::vector<std::string> tokenize_lemmatize(std::string_view text, const PreprocessConfig& config);

/// Same as tokenize_lemmatize without the stopword filter.
std::vector<std::string> lemmatize_all(std::string_view text, const PreprocessConfig& config);

struct Document {
    std::string id;
    std::string author;
    Party party = Party::Democrat;
    AccountType account_type = AccountType::Personal;
    MonthKey month;
    std::vector<std::string> tokens;
    /// Lemmas before stopword removal, kept for lexicon scoring variants.
    std::vector<std::string> all_lemmas;
    std::vector<std::string> hashtags;
    std::vector<std::string> mentions;
    std::vector<std::string> urls;
};

struct PreprocessResult {
    std::vector<Document> documents;
    std::vector<std::string> dropped_ids;  // emptied by cleaning or stopword removal
};

PreprocessResult preprocess(std::span<const RawRecord> records, const PreprocessConfig& config);

std::map<MonthKey, std::vector<Document>> bin_by_month(std::span<const Document> docs);

}  // namespace topicflow

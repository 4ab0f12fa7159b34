#include "topicflow/moral.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>

namespace topicflow {

namespace {

std::string lower(std::string_view s)
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

}  // namespace

std::string_view to_string(Foundation f) noexcept
{
    switch (f) {
    case Foundation::Care: return "Care";
    case Foundation::Fairness: return "Fairness";
    case Foundation::Loyalty: return "Loyalty";
    case Foundation::Authority: return "Authority";
    case Foundation::Purity: return "Purity";
    }
    return "?";
}

std::string_view column_name(Foundation f) noexcept
{
    switch (f) {
    case Foundation::Care: return "care";
    case Foundation::Fairness: return "fairness";
    case Foundation::Loyalty: return "loyalty";
    case Foundation::Authority: return "authority";
    case Foundation::Purity: return "purity";
    }
    return "?";
}

std::optional<Foundation> parse_foundation(std::string_view text)
{
    static const std::map<std::string, Foundation, std::less<>> names = {
        {"care", Foundation::Care},           {"harm", Foundation::Care},
        {"care/harm", Foundation::Care},      {"fairness", Foundation::Fairness},
        {"cheating", Foundation::Fairness},   {"fairness/cheating", Foundation::Fairness},
        {"proportionality", Foundation::Fairness}, {"fairness/proportionality", Foundation::Fairness},
        {"loyalty", Foundation::Loyalty},     {"betrayal", Foundation::Loyalty},
        {"loyalty/betrayal", Foundation::Loyalty}, {"loyalty/disloyalty", Foundation::Loyalty},
        {"authority", Foundation::Authority}, {"subversion", Foundation::Authority},
        {"authority/subversion", Foundation::Authority}, {"purity", Foundation::Purity},
        {"degradation", Foundation::Purity},  {"sanctity", Foundation::Purity},
        {"purity/degradation", Foundation::Purity},
    };
    auto it = names.find(lower(trim(text)));
    if (it == names.end()) {
        return std::nullopt;
    }
    return it->second;
}

bool MoralLexicon::set(const std::string& lemma, Foundation f, double strength)
{
    if (!(strength >= kMinStrength && strength <= kMaxStrength)) {
        throw std::invalid_argument("strength must lie in [1, 9]");
    }
    auto& list = entries[lemma];
    for (LexiconEntry& e : list) {
        if (e.foundation == f) {
            e.strength = strength;
            return false;
        }
    }
    list.push_back(LexiconEntry{f, strength});
    return true;
}

std::size_t MoralLexicon::size() const noexcept
{
    std::size_t n = 0;
    for (const auto& [lemma, list] : entries) {
        n += list.size();
    }
    return n;
}

MoralLexicon load_lexicon(const std::filesystem::path& path, Warnings* warnings)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("cannot open moral lexicon " + path.string());
    }
    MoralLexicon lexicon;
    std::string line;
    std::size_t line_no = 0;
    bool first = true;
    auto where = [&] { return path.string() + ":" + std::to_string(line_no) + ": "; };
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        const std::string_view content = trim(line);
        if (content.empty() || content.front() == '#') {
            continue;
        }
        std::vector<std::string_view> fields;
        std::size_t start = 0;
        while (true) {
            const auto tab = content.find('\t', start);
            fields.push_back(trim(content.substr(start, tab == std::string_view::npos ? tab : tab - start)));
            if (tab == std::string_view::npos) {
                break;
            }
            start = tab + 1;
        }
        if (fields.size() != 3) {
            throw DataError(where() + "expected 'lemma<TAB>foundation<TAB>strength'");
        }
        if (first) {
            first = false;
            if (lower(fields[0]) == "lemma" && lower(fields[1]) == "foundation") {
                continue;
            }
        }
        const auto foundation = parse_foundation(fields[1]);
        if (!foundation) {
            throw DataError(where() + "unknown foundation '" + std::string(fields[1]) + "'");
        }
        double strength = 0.0;
        auto [ptr, ec] = std::from_chars(fields[2].data(), fields[2].data() + fields[2].size(), strength);
        if (ec != std::errc{} || ptr != fields[2].data() + fields[2].size()) {
            throw DataError(where() + "invalid strength '" + std::string(fields[2]) + "'");
        }
        if (!(strength >= kMinStrength && strength <= kMaxStrength)) {
            throw DataError(where() + "strength " + std::string(fields[2]) + " outside [1, 9]");
        }
        const std::string lemma = lower(fields[0]);
        if (lemma.empty()) {
            throw DataError(where() + "empty lemma");
        }
        if (!lexicon.set(lemma, *foundation, strength)) {
            warn(warnings, where() + "duplicate entry for '" + lemma + "' / " + std::string(column_name(*foundation)) +
                               ", keeping the last value");
        }
    }
    return lexicon;
}

double stable_mean(std::vector<double> values)
{
    if (values.empty()) {
        throw std::invalid_argument("mean of an empty set");
    }
    std::sort(values.begin(), values.end());
    const double sum = std::accumulate(values.begin(), values.end(), 0.0);
    return sum / static_cast<double>(values.size());
}

MoralProfile score_document(std::span<const std::string> tokens, const MoralLexicon& lexicon)
{
    std::array<std::vector<double>, 5> matched;
    for (const std::string& token : tokens) {
        auto it = lexicon.entries.find(token);
        if (it == lexicon.entries.end()) {
            continue;
        }
        for (const LexiconEntry& e : it->second) {
            matched[index_of(e.foundation)].push_back(e.strength);
        }
    }
    MoralProfile profile;
    for (Foundation f : kFoundations) {
        auto& values = matched[index_of(f)];
        profile.matched[index_of(f)] = values.size();
        if (!values.empty()) {
            // Clamp guards the last-ulp rounding of a mean of in-range values.
            profile.scores[index_of(f)] = std::clamp(stable_mean(std::move(values)), kMinStrength, kMaxStrength);
        }
    }
    return profile;
}

GroupKey parse_group_key(std::string_view text)
{
    if (text == "party") {
        return GroupKey::Party;
    }
    if (text == "longevity_class" || text == "longevity") {
        return GroupKey::LongevityClass;
    }
    if (text == "month") {
        return GroupKey::Month;
    }
    throw std::invalid_argument("unknown group key '" + std::string(text) + "'");
}

std::vector<GroupAggregate> aggregate_scores(std::span<const ScoredDocument> docs, GroupKey key, Warnings* warnings)
{
    // Sort key per group keeps the output order fixed.
    std::map<std::pair<int, std::string>, std::array<std::vector<double>, 5>> buckets;
    for (const ScoredDocument& doc : docs) {
        std::pair<int, std::string> group;
        switch (key) {
        case GroupKey::Party:
            group = {static_cast<int>(doc.party), std::string(to_string(doc.party))};
            break;
        case GroupKey::LongevityClass:
            if (!doc.longevity) {
                continue;
            }
            group = {static_cast<int>(*doc.longevity), std::string(to_string(*doc.longevity))};
            break;
        case GroupKey::Month:
            group = {doc.month.ordinal(), doc.month.to_string()};
            break;
        }
        auto& bucket = buckets[group];
        for (Foundation f : kFoundations) {
            if (const auto& s = doc.profile.score(f)) {
                bucket[index_of(f)].push_back(*s);
            }
        }
    }
    std::vector<GroupAggregate> out;
    for (auto& [group, values] : buckets) {
        GroupAggregate agg;
        agg.group = group.second;
        for (Foundation f : kFoundations) {
            auto& v = values[index_of(f)];
            agg.count[index_of(f)] = v.size();
            if (v.empty()) {
                warn(warnings, "group " + agg.group + " has no " + std::string(column_name(f)) + " scores");
            } else {
                agg.mean[index_of(f)] = stable_mean(std::move(v));
            }
        }
        out.push_back(std::move(agg));
    }
    return out;
}

}  // namespace topicflow

#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "osmfac/building_class.hpp"
#include "osmfac/element.hpp"
#include "osmfac/error.hpp"
#include "osmfac/pbf_reader.hpp"
#include "osmfac/tag_resolution.hpp"

namespace osmfac {

enum class TopicLabel : std::uint8_t { Person, Location, Organization, Miscellaneous };
std::string_view to_string(TopicLabel t) noexcept;

enum class Language : std::uint8_t { En, Fr };
enum class MatchMode : std::uint8_t { Word, Phrase };

/// Keyword entries are OSM tag vocabulary and are tried on every token;
/// gazetteer entries only on tokens the topic model marks as a location or
/// organization.
enum class LexiconScope : std::uint8_t { Keyword, Gazetteer };

struct LexiconEntry {
    std::string term;  // folded
    Language language = Language::En;
    BuildingClass cls;
    MatchMode mode = MatchMode::Word;
    LexiconScope scope = LexiconScope::Gazetteer;
};

struct LexiconMatch {
    BuildingClass cls;
    std::string term;
    std::size_t position = 0;  // byte offset in the folded phrase
};

/// Facility gazetteer. File columns: term, language (en|fr), class
/// (school|clinic), category, match_mode (word|phrase), scope
/// (keyword|gazetteer).
class Lexicon {
public:
    static Lexicon parse(std::string_view tsv);
    static Lexicon load(const std::filesystem::path& path);
    static const Lexicon& builtin();

    std::span<const LexiconEntry> entries() const noexcept { return entries_; }

private:
    std::vector<LexiconEntry> entries_;
};

/// Which lexicon entries a match may use.
enum class MatchScope : std::uint8_t { All, KeywordOnly };

/// Longest matching term wins, then the earliest position, then lexicon order.
std::optional<LexiconMatch> lexicon_match(std::string_view phrase, const Lexicon& lexicon,
                                          MatchScope scope = MatchScope::All);

/// Token phrase -> topic. Implementations must be deterministic; they may throw,
/// in which case the token is treated as Miscellaneous.
class TopicModel {
public:
    virtual ~TopicModel() = default;
    virtual TopicLabel label(std::string_view phrase) const = 0;
};

/// Rule-table topic model. Table columns: term, language, topic, pattern_kind
/// where pattern_kind is facility_noun, place_noun, organization_noun or
/// honorific.
class RuleTopicModel final : public TopicModel {
public:
    static RuleTopicModel parse(std::string_view tsv);
    static RuleTopicModel load(const std::filesystem::path& path);

    TopicLabel label(std::string_view phrase) const override;

private:
    std::vector<std::string> location_terms_;
    std::vector<std::string> organization_terms_;
    std::vector<std::vector<std::string>> honorifics_;  // as folded word sequences
};

/// The shipped rule-based model (data/topic_rules.tsv).
const RuleTopicModel& reference_topic_model();

enum class Provenance : std::uint8_t { StructuredKey, KeywordInText, TopicModel, None };
std::string_view to_string(Provenance p) noexcept;

struct ClassificationOutcome {
    BuildingClass cls;
    Provenance provenance = Provenance::None;
    std::optional<std::string> matched_token;
    std::optional<std::string> matched_term;
    std::optional<TopicLabel> topic;

    friend bool operator==(const ClassificationOutcome&, const ClassificationOutcome&) = default;
};

inline constexpr std::size_t kAdminLevels = 4;
using AdminIds = std::array<std::optional<std::string>, kAdminLevels>;

struct FacilityRecord {
    std::int64_t element_id = 0;
    ElementKind element_kind = ElementKind::Node;
    std::string country;
    std::optional<LatLon> location;
    BuildingClass structured;  // keys-only result, before text enrichment
    ClassificationOutcome outcome;
    AdminIds admin_ids;

    friend bool operator==(const FacilityRecord&, const FacilityRecord&) = default;
};

/// Keys and values of the tag text as whole phrases, in order. Unparseable
/// text yields no tokens and counts "classifier.unparseable_text".
std::vector<std::string> tokenize(const UnstructuredText& text, WarningCounters* warnings = nullptr);

std::vector<std::pair<std::string, TopicLabel>> classify_tokens(std::span<const std::string> tokens,
                                                                const TopicModel& model,
                                                                WarningCounters* warnings = nullptr);

/// Keyword pass over all tokens, then gazetteer pass over Location and
/// Organization tokens.
ClassificationOutcome resolve_unstructured(const UnstructuredText& text, const TopicModel& model,
                                           const Lexicon& lexicon, WarningCounters* warnings = nullptr);

struct ClassifierContext {
    const KeySchema& schema;
    const TopicModel& model;
    const Lexicon& lexicon;
    const pbf::NodeIndex* nodes = nullptr;  // needed for way centroids
};

FacilityRecord classify_element(const RawElement& element, const ClassifierContext& ctx,
                                WarningCounters* warnings = nullptr);

}  // namespace osmfac

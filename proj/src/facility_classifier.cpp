#include "osmfac/facility_classifier.hpp"

#include <algorithm>

#include "osmfac/builtin_data.hpp"
#include "osmfac/geo_stats.hpp"
#include "osmfac/table_io.hpp"
#include "osmfac/text.hpp"

namespace osmfac {

namespace {

// First occurrence of `term` in `folded`, honoring word boundaries if asked.
std::optional<std::size_t> find_term(std::string_view folded, std::string_view term, bool word_bounded) {
    if (term.empty()) return std::nullopt;
    for (std::size_t pos = folded.find(term); pos != std::string_view::npos; pos = folded.find(term, pos + 1)) {
        if (!word_bounded) return pos;
        const std::size_t end = pos + term.size();
        const bool left_ok = pos == 0 || !text::is_word_byte(static_cast<unsigned char>(folded[pos - 1]));
        const bool right_ok = end == folded.size() || !text::is_word_byte(static_cast<unsigned char>(folded[end]));
        if (left_ok && right_ok) return pos;
    }
    return std::nullopt;
}

Language parse_language(std::string_view s, std::size_t line) {
    if (s == "en") return Language::En;
    if (s == "fr") return Language::Fr;
    throw ConfigError("line " + std::to_string(line) + ": unknown language '" + std::string(s) + "'");
}

}  // namespace

std::string_view to_string(TopicLabel t) noexcept {
    switch (t) {
    case TopicLabel::Person: return "Person";
    case TopicLabel::Location: return "Location";
    case TopicLabel::Organization: return "Organization";
    case TopicLabel::Miscellaneous: return "Miscellaneous";
    }
    return "";
}

std::string_view to_string(Provenance p) noexcept {
    switch (p) {
    case Provenance::StructuredKey: return "StructuredKey";
    case Provenance::KeywordInText: return "KeywordInText";
    case Provenance::TopicModel: return "TopicModel";
    case Provenance::None: return "None";
    }
    return "";
}

Lexicon Lexicon::parse(std::string_view tsv) {
    const Table t = parse_tsv(tsv);
    const std::size_t c_term = t.column("term"), c_lang = t.column("language"), c_class = t.column("class"),
                      c_cat = t.column("category"), c_mode = t.column("match_mode"), c_scope = t.column("scope");
    Lexicon lex;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::size_t line = t.row_lines[i];
        LexiconEntry e;
        e.term = text::fold(text::trim(row[c_term]));
        if (e.term.empty()) throw ConfigError("lexicon line " + std::to_string(line) + ": empty term");
        e.language = parse_language(row[c_lang], line);
        auto cls = facility_class(row[c_class], row[c_cat]);
        if (!cls)
            throw ConfigError("lexicon line " + std::to_string(line) + ": class must be school or clinic with a known category");
        e.cls = *cls;
        if (row[c_mode] == "word") e.mode = MatchMode::Word;
        else if (row[c_mode] == "phrase") e.mode = MatchMode::Phrase;
        else throw ConfigError("lexicon line " + std::to_string(line) + ": unknown match_mode '" + row[c_mode] + "'");
        if (row[c_scope] == "keyword") e.scope = LexiconScope::Keyword;
        else if (row[c_scope] == "gazetteer") e.scope = LexiconScope::Gazetteer;
        else throw ConfigError("lexicon line " + std::to_string(line) + ": unknown scope '" + row[c_scope] + "'");

        const bool duplicate = std::any_of(lex.entries_.begin(), lex.entries_.end(), [&](const LexiconEntry& o) {
            return o.term == e.term && o.language == e.language;
        });
        if (duplicate)
            throw ConfigError("lexicon line " + std::to_string(line) + ": duplicate term '" + e.term + "'");
        lex.entries_.push_back(std::move(e));
    }
    return lex;
}

Lexicon Lexicon::load(const std::filesystem::path& path) { return parse(read_file_text(path)); }

const Lexicon& Lexicon::builtin() {
    static const Lexicon lexicon = parse(builtin::kLexiconTsv);
    return lexicon;
}

std::optional<LexiconMatch> lexicon_match(std::string_view phrase, const Lexicon& lexicon, MatchScope scope) {
    const std::string folded = text::fold(phrase);
    const LexiconEntry* best = nullptr;
    std::size_t best_pos = 0;
    for (const LexiconEntry& e : lexicon.entries()) {
        if (scope == MatchScope::KeywordOnly && e.scope != LexiconScope::Keyword) continue;
        const auto pos = find_term(folded, e.term, e.mode == MatchMode::Word);
        if (!pos) continue;
        // Entries are visited in lexicon order, so strict comparisons keep the earlier one on ties.
        if (!best || e.term.size() > best->term.size() ||
            (e.term.size() == best->term.size() && *pos < best_pos)) {
            best = &e;
            best_pos = *pos;
        }
    }
    if (!best) return std::nullopt;
    return LexiconMatch{best->cls, best->term, best_pos};
}

RuleTopicModel RuleTopicModel::parse(std::string_view tsv) {
    const Table t = parse_tsv(tsv);
    const std::size_t c_term = t.column("term"), c_lang = t.column("language"), c_kind = t.column("pattern_kind");
    RuleTopicModel m;
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        const auto& row = t.rows[i];
        const std::size_t line = t.row_lines[i];
        parse_language(row[c_lang], line);
        std::string term = text::fold(text::trim(row[c_term]));
        if (term.empty()) throw ConfigError("topic rules line " + std::to_string(line) + ": empty term");
        const std::string& kind = row[c_kind];
        if (kind == "facility_noun" || kind == "place_noun") {
            m.location_terms_.push_back(std::move(term));
        } else if (kind == "organization_noun") {
            m.organization_terms_.push_back(std::move(term));
        } else if (kind == "honorific") {
            std::vector<std::string> seq;
            for (auto w : text::words(term)) seq.emplace_back(w);
            if (!seq.empty()) m.honorifics_.push_back(std::move(seq));
        } else {
            throw ConfigError("topic rules line " + std::to_string(line) + ": unknown pattern_kind '" + kind + "'");
        }
    }
    return m;
}

RuleTopicModel RuleTopicModel::load(const std::filesystem::path& path) { return parse(read_file_text(path)); }

TopicLabel RuleTopicModel::label(std::string_view phrase) const {
    const std::string folded = text::fold(phrase);
    auto any_term = [&](const std::vector<std::string>& terms) {
        return std::any_of(terms.begin(), terms.end(),
                           [&](const std::string& t) { return find_term(folded, t, true).has_value(); });
    };
    if (any_term(location_terms_)) return TopicLabel::Location;
    if (any_term(organization_terms_)) return TopicLabel::Organization;

    const auto original = text::words(phrase);
    std::vector<std::string> words;
    words.reserve(original.size());
    for (auto w : original) words.push_back(text::fold(w));
    for (const auto& h : honorifics_) {
        if (words.size() <= h.size()) continue;
        if (std::equal(h.begin(), h.end(), words.begin()) && text::starts_capitalized(original[h.size()]))
            return TopicLabel::Person;
    }
    return TopicLabel::Miscellaneous;
}

const RuleTopicModel& reference_topic_model() {
    static const RuleTopicModel model = RuleTopicModel::parse(builtin::kTopicRulesTsv);
    return model;
}

std::vector<std::string> tokenize(const UnstructuredText& text, WarningCounters* warnings) {
    std::vector<std::string> tokens;
    try {
        for (const auto& [k, v] : parse_tag_string(text.text, warnings)) {
            tokens.push_back(k);
            tokens.push_back(v);
        }
    } catch (const ParseError&) {
        warn(warnings, "classifier.unparseable_text");
        tokens.clear();
    }
    return tokens;
}

std::vector<std::pair<std::string, TopicLabel>> classify_tokens(std::span<const std::string> tokens,
                                                                const TopicModel& model,
                                                                WarningCounters* warnings) {
    std::vector<std::pair<std::string, TopicLabel>> out;
    out.reserve(tokens.size());
    for (const std::string& tok : tokens) {
        TopicLabel label = TopicLabel::Miscellaneous;
        try {
            label = model.label(tok);
        } catch (const std::exception&) {
            warn(warnings, "classifier.topic_model_failure");
        }
        out.emplace_back(tok, label);
    }
    return out;
}

ClassificationOutcome resolve_unstructured(const UnstructuredText& text, const TopicModel& model,
                                           const Lexicon& lexicon, WarningCounters* warnings) {
    const auto tokens = tokenize(text, warnings);

    for (const std::string& tok : tokens) {
        if (auto m = lexicon_match(tok, lexicon, MatchScope::KeywordOnly))
            return {m->cls, Provenance::KeywordInText, tok, m->term, std::nullopt};
    }

    for (const auto& [tok, topic] : classify_tokens(tokens, model, warnings)) {
        if (topic != TopicLabel::Location && topic != TopicLabel::Organization) continue;
        if (auto m = lexicon_match(tok, lexicon, MatchScope::All))
            return {m->cls, Provenance::TopicModel, tok, m->term, topic};
    }
    return {Unresolved{}, Provenance::None, std::nullopt, std::nullopt, std::nullopt};
}

FacilityRecord classify_element(const RawElement& element, const ClassifierContext& ctx, WarningCounters* warnings) {
    FacilityRecord rec;
    rec.element_id = element.id;
    rec.element_kind = element.kind;

    auto [cls, leftover] = split_resolved_unresolved(element, ctx.schema);
    rec.structured = cls;
    if (cls.top() != TopClass::Unresolved) {
        rec.outcome = {std::move(cls), Provenance::StructuredKey, std::nullopt, std::nullopt, std::nullopt};
    } else {
        rec.outcome = resolve_unstructured(leftover, ctx.model, ctx.lexicon, warnings);
    }

    if (element.kind == ElementKind::Node) {
        rec.location = element.coordinates;
    } else if (element.kind == ElementKind::Way && pbf::is_closed_way(element)) {
        Ring ring;
        ring.reserve(element.refs.size());
        bool complete = ctx.nodes != nullptr;
        for (std::int64_t ref : element.refs) {
            if (!complete) break;
            auto it = ctx.nodes->find(ref);
            if (it == ctx.nodes->end()) {
                complete = false;
                break;
            }
            ring.push_back(it->second);
        }
        if (complete) rec.location = centroid(ring);
        else warn(warnings, "classifier.missing_way_node");
    }
    return rec;
}

}  // namespace osmfac

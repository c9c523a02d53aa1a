#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "osmfac/tag_map.hpp"

namespace osmfac {

struct LatLon {
    double lat = 0.0;
    double lon = 0.0;
    friend bool operator==(const LatLon&, const LatLon&) = default;
};

enum class ElementKind : std::uint8_t { Node, Way, Relation };

const char* to_string(ElementKind kind) noexcept;

enum class MemberType : std::uint8_t { Node = 0, Way = 1, Relation = 2 };

struct RelationMember {
    MemberType type = MemberType::Node;
    std::int64_t ref = 0;
    std::string role;
    friend bool operator==(const RelationMember&, const RelationMember&) = default;
};

/// A decoded OSM element. `coordinates` is set iff kind == Node, `refs` is
/// non-empty iff kind == Way, `members` only used by relations.
struct RawElement {
    std::int64_t id = 0;
    ElementKind kind = ElementKind::Node;
    std::optional<LatLon> coordinates;
    std::vector<std::int64_t> refs;
    std::vector<RelationMember> members;
    TagMap tags;

    friend bool operator==(const RawElement&, const RawElement&) = default;

    static RawElement node(std::int64_t id, LatLon at, TagMap tags = {}) {
        return RawElement{id, ElementKind::Node, at, {}, {}, std::move(tags)};
    }
    static RawElement way(std::int64_t id, std::vector<std::int64_t> refs, TagMap tags = {}) {
        return RawElement{id, ElementKind::Way, std::nullopt, std::move(refs), {}, std::move(tags)};
    }
    static RawElement relation(std::int64_t id, std::vector<RelationMember> members, TagMap tags = {}) {
        return RawElement{id, ElementKind::Relation, std::nullopt, {}, std::move(members), std::move(tags)};
    }
};

/// Throws InvariantError when `e` breaks the per-kind invariants.
void check_invariants(const RawElement& e);

}  // namespace osmfac

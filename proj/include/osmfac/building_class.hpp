#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

namespace osmfac {

enum class SchoolCategory : std::uint8_t { HigherEducation, PrimarySecondary, Music, Language, OtherSchool };
enum class ClinicCategory : std::uint8_t { Hospital, ClinicGeneral, Doctors, FirstAid, OtherHealth };

/// The four top-level classes every element is partitioned into.
enum class TopClass : std::uint8_t { School, Clinic, Other, Unresolved };

struct School {
    SchoolCategory category;
    friend bool operator==(const School&, const School&) = default;
};
struct Clinic {
    ClinicCategory category;
    friend bool operator==(const Clinic&, const Clinic&) = default;
};
/// Label is the winning `key=value`, verbatim.
struct Other {
    std::string label;
    friend bool operator==(const Other&, const Other&) = default;
};
struct Unresolved {
    friend bool operator==(const Unresolved&, const Unresolved&) = default;
};

class BuildingClass {
public:
    BuildingClass() : value_(Unresolved{}) {}
    BuildingClass(School s) : value_(s) {}
    BuildingClass(Clinic c) : value_(c) {}
    BuildingClass(Other o) : value_(std::move(o)) {}
    BuildingClass(Unresolved u) : value_(u) {}

    TopClass top() const noexcept { return static_cast<TopClass>(value_.index()); }
    bool is_facility() const noexcept { return top() == TopClass::School || top() == TopClass::Clinic; }

    const School* school() const noexcept { return std::get_if<School>(&value_); }
    const Clinic* clinic() const noexcept { return std::get_if<Clinic>(&value_); }
    const Other* other() const noexcept { return std::get_if<Other>(&value_); }

    /// Category name for School/Clinic, label for Other, empty for Unresolved.
    std::string category_name() const;

    friend bool operator==(const BuildingClass&, const BuildingClass&) = default;

private:
    // Alternative order matches TopClass.
    std::variant<School, Clinic, Other, Unresolved> value_;
};

std::string_view to_string(SchoolCategory c) noexcept;
std::string_view to_string(ClinicCategory c) noexcept;
std::string_view to_string(TopClass c) noexcept;

std::optional<SchoolCategory> parse_school_category(std::string_view s) noexcept;
std::optional<ClinicCategory> parse_clinic_category(std::string_view s) noexcept;

/// Builds a School or Clinic class from the textual (class, category) pair
/// used by the schema and lexicon files. nullopt for unknown names.
std::optional<BuildingClass> facility_class(std::string_view cls, std::string_view category);

}  // namespace osmfac

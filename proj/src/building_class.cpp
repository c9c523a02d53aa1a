#include "osmfac/building_class.hpp"

#include <array>
#include <utility>

namespace osmfac {

namespace {

constexpr std::array<std::pair<SchoolCategory, std::string_view>, 5> kSchool{{
    {SchoolCategory::HigherEducation, "HigherEducation"},
    {SchoolCategory::PrimarySecondary, "PrimarySecondary"},
    {SchoolCategory::Music, "Music"},
    {SchoolCategory::Language, "Language"},
    {SchoolCategory::OtherSchool, "OtherSchool"},
}};

constexpr std::array<std::pair<ClinicCategory, std::string_view>, 5> kClinic{{
    {ClinicCategory::Hospital, "Hospital"},
    {ClinicCategory::ClinicGeneral, "ClinicGeneral"},
    {ClinicCategory::Doctors, "Doctors"},
    {ClinicCategory::FirstAid, "FirstAid"},
    {ClinicCategory::OtherHealth, "OtherHealth"},
}};

}  // namespace

std::string_view to_string(SchoolCategory c) noexcept {
    for (const auto& [k, v] : kSchool)
        if (k == c) return v;
    return "";
}

std::string_view to_string(ClinicCategory c) noexcept {
    for (const auto& [k, v] : kClinic)
        if (k == c) return v;
    return "";
}

std::string_view to_string(TopClass c) noexcept {
    switch (c) {
    case TopClass::School: return "School";
    case TopClass::Clinic: return "Clinic";
    case TopClass::Other: return "Other";
    case TopClass::Unresolved: return "Unresolved";
    }
    return "";
}

std::optional<SchoolCategory> parse_school_category(std::string_view s) noexcept {
    for (const auto& [k, v] : kSchool)
        if (v == s) return k;
    return std::nullopt;
}

std::optional<ClinicCategory> parse_clinic_category(std::string_view s) noexcept {
    for (const auto& [k, v] : kClinic)
        if (v == s) return k;
    return std::nullopt;
}

std::optional<BuildingClass> facility_class(std::string_view cls, std::string_view category) {
    if (cls == "school") {
        if (auto c = parse_school_category(category)) return BuildingClass(School{*c});
    } else if (cls == "clinic") {
        if (auto c = parse_clinic_category(category)) return BuildingClass(Clinic{*c});
    }
    return std::nullopt;
}

std::string BuildingClass::category_name() const {
    if (const auto* s = school()) return std::string(to_string(s->category));
    if (const auto* c = clinic()) return std::string(to_string(c->category));
    if (const auto* o = other()) return o->label;
    return {};
}

}  // namespace osmfac

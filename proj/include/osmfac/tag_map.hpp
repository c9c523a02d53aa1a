#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace osmfac {

/// Insertion-ordered key/value map with unique keys. Tag sets are small, so
/// lookups are linear.
class TagMap {
public:
    using value_type = std::pair<std::string, std::string>;
    using const_iterator = std::vector<value_type>::const_iterator;

    TagMap() = default;
    TagMap(std::initializer_list<value_type> init) {
        for (const auto& kv : init) set(kv.first, kv.second);
    }

    /// Inserts or overwrites. Returns true when an existing key was replaced.
    bool set(std::string key, std::string value) {
        for (auto& kv : items_) {
            if (kv.first == key) {
                kv.second = std::move(value);
                return true;
            }
        }
        items_.emplace_back(std::move(key), std::move(value));
        return false;
    }

    std::optional<std::string_view> get(std::string_view key) const {
        for (const auto& kv : items_)
            if (kv.first == key) return std::string_view(kv.second);
        return std::nullopt;
    }

    bool contains(std::string_view key) const { return get(key).has_value(); }
    bool empty() const noexcept { return items_.empty(); }
    std::size_t size() const noexcept { return items_.size(); }
    const_iterator begin() const noexcept { return items_.begin(); }
    const_iterator end() const noexcept { return items_.end(); }

    friend bool operator==(const TagMap&, const TagMap&) = default;

private:
    std::vector<value_type> items_;
};

}  // namespace osmfac

#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <string>

namespace qualnet {

// Strongly typed integer identifier. Ids are allocated in increasing order,
// so "lowest id" means "created first".
template <class Tag>
struct Id {
    std::uint64_t value = 0;

    constexpr Id() = default;
    constexpr explicit Id(std::uint64_t v) : value(v) {}

    constexpr bool valid() const { return value != 0; }
    friend constexpr auto operator<=>(const Id&, const Id&) = default;
    friend constexpr bool operator==(const Id&, const Id&) = default;
};

using UnitId = Id<struct UnitTag>;
using SentenceId = Id<struct SentenceTag>;
using IndicatorId = Id<struct IndicatorTag>;
using ConceptId = Id<struct ConceptTag>;
using EdgeId = Id<struct EdgeTag>;

}  // namespace qualnet

template <class Tag>
struct std::hash<qualnet::Id<Tag>> {
    std::size_t operator()(const qualnet::Id<Tag>& id) const noexcept {
        return std::hash<std::uint64_t>{}(id.value);
    }
};

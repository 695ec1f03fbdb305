#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace nrt {

// 16 random bytes identifying one writing process. Every container header
// carries the tag of the process that wrote it, and every Uid is scoped by
// one.
struct ProcessTag {
    std::array<uint8_t, 16> bytes{};

    static ProcessTag generate();

    // The tag of this process, generated once on first use.
    static const ProcessTag& current();

    bool is_zero() const;
    std::string hex() const;
    static std::optional<ProcessTag> from_hex(std::string_view s);

    auto operator<=>(const ProcessTag&) const = default;
};

// Persistent object identity: process tag + per-process serial. Serial 0
// means unset.
struct Uid {
    ProcessTag tag{};
    uint32_t serial = 0;

    bool is_set() const { return serial != 0; }

    auto operator<=>(const Uid&) const = default;
};

} // namespace nrt

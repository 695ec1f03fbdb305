#include "nrt/crc32.hpp"

#include <array>

namespace nrt {

namespace {

std::array<uint32_t, 256> make_table() {
    std::array<uint32_t, 256> t{};
    for (uint32_t i = 0; i < 256; ++i) {
        uint32_t c = i;
        for (int k = 0; k < 8; ++k) c = (c & 1) ? 0xEDB88320u ^ (c >> 1) : c >> 1;
        t[i] = c;
    }
    return t;
}

const std::array<uint32_t, 256> kTable = make_table();

} // namespace

uint32_t crc32_update(uint32_t state, std::span<const uint8_t> data) {
    uint32_t c = state ^ 0xFFFFFFFFu;
    for (uint8_t b : data) c = kTable[(c ^ b) & 0xFFu] ^ (c >> 8);
    return c ^ 0xFFFFFFFFu;
}

uint32_t crc32(std::span<const uint8_t> data) {
    return crc32_update(0, data);
}

} // namespace nrt

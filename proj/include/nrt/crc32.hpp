#pragma once

#include <cstdint>
#include <span>

namespace nrt {

// CRC-32, polynomial 0x04C11DB7 reflected, init 0xFFFFFFFF, final xor
// 0xFFFFFFFF (the zlib/PNG variant).
uint32_t crc32(std::span<const uint8_t> data);

uint32_t crc32_update(uint32_t state, std::span<const uint8_t> data);

} // namespace nrt

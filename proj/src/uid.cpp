#include "nrt/uid.hpp"

#include <random>

namespace nrt {

namespace {

int hex_digit(char c) {
    if (c >= '0' && c <= '9') return c - '0';
    if (c >= 'a' && c <= 'f') return c - 'a' + 10;
    if (c >= 'A' && c <= 'F') return c - 'A' + 10;
    return -1;
}

} // namespace

ProcessTag ProcessTag::generate() {
    std::random_device rd;
    ProcessTag t;
    for (auto& b : t.bytes) b = static_cast<uint8_t>(rd());
    return t;
}

const ProcessTag& ProcessTag::current() {
    static const ProcessTag tag = generate();
    return tag;
}

bool ProcessTag::is_zero() const {
    for (uint8_t b : bytes)
        if (b != 0) return false;
    return true;
}

std::string ProcessTag::hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s;
    s.reserve(32);
    for (uint8_t b : bytes) {
        s.push_back(digits[b >> 4]);
        s.push_back(digits[b & 0xF]);
    }
    return s;
}

std::optional<ProcessTag> ProcessTag::from_hex(std::string_view s) {
    if (s.size() != 32) return std::nullopt;
    ProcessTag t;
    for (int i = 0; i < 16; ++i) {
        int hi = hex_digit(s[2 * i]);
        int lo = hex_digit(s[2 * i + 1]);
        if (hi < 0 || lo < 0) return std::nullopt;
        t.bytes[i] = static_cast<uint8_t>((hi << 4) | lo);
    }
    return t;
}

} // namespace nrt

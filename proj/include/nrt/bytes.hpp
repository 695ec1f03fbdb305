#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nrt/error.hpp"

namespace nrt {

// Little-endian byte buffer builder.
class ByteWriter {
public:
    void u8(uint8_t v) { buf_.push_back(v); }

    void u16(uint16_t v) {
        buf_.push_back(static_cast<uint8_t>(v));
        buf_.push_back(static_cast<uint8_t>(v >> 8));
    }

    void u32(uint32_t v) {
        for (int i = 0; i < 4; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void u64(uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_.push_back(static_cast<uint8_t>(v >> (8 * i)));
    }

    void i64(int64_t v) { u64(static_cast<uint64_t>(v)); }

    void f64(double v) { u64(std::bit_cast<uint64_t>(v)); }

    void bytes(std::span<const uint8_t> data) { buf_.insert(buf_.end(), data.begin(), data.end()); }

    void bytes(const void* data, std::size_t n) {
        const auto* p = static_cast<const uint8_t*>(data);
        buf_.insert(buf_.end(), p, p + n);
    }

    // u16 length prefix + raw bytes; used for names.
    void str16(std::string_view s) {
        if (s.size() > 0xFFFF) fail(Errc::malformed, "name longer than 65535 bytes");
        u16(static_cast<uint16_t>(s.size()));
        bytes(s.data(), s.size());
    }

    // u32 length prefix + raw bytes; used for string values.
    void str32(std::string_view s) {
        if (s.size() > 0xFFFFFFFFull) fail(Errc::malformed, "string longer than 4 GiB");
        u32(static_cast<uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    std::size_t size() const { return buf_.size(); }
    const std::vector<uint8_t>& data() const { return buf_; }
    std::vector<uint8_t> take() { return std::move(buf_); }

    // Patches a previously written u64 in place (header fixups).
    void patch_u64(std::size_t at, uint64_t v) {
        for (int i = 0; i < 8; ++i) buf_[at + i] = static_cast<uint8_t>(v >> (8 * i));
    }

private:
    std::vector<uint8_t> buf_;
};

// Little-endian cursor over a byte span. All reads bounds-check and throw
// Malformed on truncation.
class ByteReader {
public:
    explicit ByteReader(std::span<const uint8_t> data) : data_(data) {}

    std::size_t pos() const { return pos_; }
    std::size_t remaining() const { return data_.size() - pos_; }
    bool at_end() const { return pos_ == data_.size(); }

    uint8_t u8() {
        need(1);
        return data_[pos_++];
    }

    uint16_t u16() {
        need(2);
        uint16_t v = static_cast<uint16_t>(data_[pos_] | (data_[pos_ + 1] << 8));
        pos_ += 2;
        return v;
    }

    uint32_t u32() {
        need(4);
        uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 4;
        return v;
    }

    uint64_t u64() {
        need(8);
        uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(data_[pos_ + i]) << (8 * i);
        pos_ += 8;
        return v;
    }

    int64_t i64() { return static_cast<int64_t>(u64()); }

    double f64() { return std::bit_cast<double>(u64()); }

    std::string str16() {
        uint16_t n = u16();
        return str_raw(n);
    }

    std::string str32() {
        uint32_t n = u32();
        return str_raw(n);
    }

    std::span<const uint8_t> raw(std::size_t n) {
        need(n);
        auto s = data_.subspan(pos_, n);
        pos_ += n;
        return s;
    }

private:
    std::string str_raw(std::size_t n) {
        need(n);
        std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    void need(std::size_t n) const {
        if (data_.size() - pos_ < n) fail(Errc::malformed, "truncated input", pos_);
    }

    std::span<const uint8_t> data_;
    std::size_t pos_ = 0;
};

} // namespace nrt

#include "nrt/storage.hpp"

#include <cstdio>
#include <map>
#include <mutex>

#include "nrt/error.hpp"

namespace nrt {

std::vector<uint8_t> Storage::read_block(uint64_t offset, uint64_t n) const {
    std::vector<uint8_t> buf(n);
    read_at(offset, buf);
    return buf;
}

FileStorage::FileStorage(std::string path, std::FILE* f, uint64_t size, bool writable)
    : path_(std::move(path)), file_(f), size_(size), writable_(writable) {}

FileStorage::~FileStorage() {
    if (file_) std::fclose(file_);
}

std::unique_ptr<FileStorage> FileStorage::create(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb+");
    if (!f) fail(Errc::io_failure, "cannot create '" + path + "'");
    return std::unique_ptr<FileStorage>(new FileStorage(path, f, 0, true));
}

std::unique_ptr<FileStorage> FileStorage::open(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) fail(Errc::io_failure, "cannot open '" + path + "'");
    std::fseek(f, 0, SEEK_END);
    long n = std::ftell(f);
    if (n < 0) {
        std::fclose(f);
        fail(Errc::io_failure, "cannot size '" + path + "'");
    }
    return std::unique_ptr<FileStorage>(new FileStorage(path, f, static_cast<uint64_t>(n), false));
}

void FileStorage::read_at(uint64_t offset, std::span<uint8_t> out) const {
    if (out.empty()) return;
    if (offset + out.size() > size_)
        fail(Errc::malformed, "read past end of '" + path_ + "'");
    if (writable_) std::fflush(file_);
    if (std::fseek(file_, static_cast<long>(offset), SEEK_SET) != 0)
        fail(Errc::io_failure, "seek failed on '" + path_ + "'");
    if (std::fread(out.data(), 1, out.size(), file_) != out.size())
        fail(Errc::io_failure, "short read on '" + path_ + "'");
}

void FileStorage::write_at(uint64_t offset, std::span<const uint8_t> data) {
    if (!writable_) fail(Errc::io_failure, "'" + path_ + "' opened read-only");
    if (offset > size_) fail(Errc::io_failure, "write past end of '" + path_ + "'");
    if (data.empty()) return;
    if (std::fseek(file_, static_cast<long>(offset), SEEK_SET) != 0)
        fail(Errc::io_failure, "seek failed on '" + path_ + "'");
    if (std::fwrite(data.data(), 1, data.size(), file_) != data.size())
        fail(Errc::io_failure, "short write on '" + path_ + "'");
    if (offset + data.size() > size_) size_ = offset + data.size();
}

void FileStorage::flush() {
    if (file_) std::fflush(file_);
}

void MemStorage::read_at(uint64_t offset, std::span<uint8_t> out) const {
    if (out.empty()) return;
    if (offset + out.size() > buf_.size()) fail(Errc::malformed, "read past end of mem store");
    std::copy_n(buf_.begin() + static_cast<std::ptrdiff_t>(offset), out.size(), out.begin());
}

void MemStorage::write_at(uint64_t offset, std::span<const uint8_t> data) {
    if (offset > buf_.size()) fail(Errc::io_failure, "write past end of mem store");
    if (offset + data.size() > buf_.size()) buf_.resize(offset + data.size());
    std::copy(data.begin(), data.end(), buf_.begin() + static_cast<std::ptrdiff_t>(offset));
}

namespace {

std::mutex g_mem_mutex;
std::map<std::string, std::shared_ptr<MemStorage>, std::less<>>& mem_map() {
    static std::map<std::string, std::shared_ptr<MemStorage>, std::less<>> m;
    return m;
}

} // namespace

std::shared_ptr<MemStorage> mem_storage(std::string_view name, bool create_if_missing) {
    std::lock_guard<std::mutex> lock(g_mem_mutex);
    auto& m = mem_map();
    auto it = m.find(name);
    if (it != m.end()) return it->second;
    if (!create_if_missing) fail(Errc::io_failure, "no in-memory container named '" + std::string(name) + "'");
    auto s = std::make_shared<MemStorage>(std::string(name));
    m.emplace(std::string(name), s);
    return s;
}

bool mem_storage_exists(std::string_view name) {
    std::lock_guard<std::mutex> lock(g_mem_mutex);
    return mem_map().find(name) != mem_map().end();
}

void mem_storage_reset() {
    std::lock_guard<std::mutex> lock(g_mem_mutex);
    mem_map().clear();
}

} // namespace nrt

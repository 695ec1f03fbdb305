#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nrt {

// Flat byte store under a container. File-backed or in-memory.
class Storage {
public:
    virtual ~Storage() = default;

    virtual uint64_t size() const = 0;
    virtual void read_at(uint64_t offset, std::span<uint8_t> out) const = 0;
    virtual void write_at(uint64_t offset, std::span<const uint8_t> data) = 0;
    virtual void flush() {}
    virtual std::string describe() const = 0;

    uint64_t append(std::span<const uint8_t> data) {
        uint64_t at = size();
        write_at(at, data);
        return at;
    }

    std::vector<uint8_t> read_block(uint64_t offset, uint64_t n) const;
};

class FileStorage : public Storage {
public:
    static std::unique_ptr<FileStorage> create(const std::string& path);
    static std::unique_ptr<FileStorage> open(const std::string& path);
    ~FileStorage() override;

    uint64_t size() const override { return size_; }
    void read_at(uint64_t offset, std::span<uint8_t> out) const override;
    void write_at(uint64_t offset, std::span<const uint8_t> data) override;
    void flush() override;
    std::string describe() const override { return path_; }

private:
    FileStorage(std::string path, std::FILE* f, uint64_t size, bool writable);

    std::string path_;
    std::FILE* file_ = nullptr;
    uint64_t size_ = 0;
    bool writable_ = false;
};

class MemStorage : public Storage {
public:
    explicit MemStorage(std::string name) : name_(std::move(name)) {}

    uint64_t size() const override { return buf_.size(); }
    void read_at(uint64_t offset, std::span<uint8_t> out) const override;
    void write_at(uint64_t offset, std::span<const uint8_t> data) override;
    std::string describe() const override { return "mem:" + name_; }

private:
    std::string name_;
    std::vector<uint8_t> buf_;
};

// Process-local named in-memory stores, shared by everyone who opens the
// same "mem:" name.
std::shared_ptr<MemStorage> mem_storage(std::string_view name, bool create_if_missing);
bool mem_storage_exists(std::string_view name);
void mem_storage_reset();

} // namespace nrt

#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "nrt/bytes.hpp"
#include "nrt/record.hpp"
#include "nrt/refs.hpp"
#include "nrt/schema.hpp"
#include "nrt/storage.hpp"
#include "nrt/uid.hpp"

namespace nrt {

constexpr uint8_t kValueTag = 0xD6;
constexpr uint8_t kKeyTableTag = 0xD7;
constexpr uint32_t kFormatVersion = 1;
constexpr uint64_t kHeaderSize = 32;
constexpr uint64_t kMinMaxSize = 4096;

// Fixed 32-byte file header: magic "NRT1", u32 format version, u64 key
// table offset (0 until finalize), 16-byte process tag.
struct Header {
    uint32_t format_version = kFormatVersion;
    uint64_t dir_offset = 0;
    ProcessTag process_tag{};
};

struct ObjectKey {
    std::string name;
    uint32_t cycle = 1;
    std::string type_name;
    uint32_t type_version = 1;
    uint64_t offset = 0;
    uint64_t length = 0;
    uint8_t codec = 0;

    bool operator==(const ObjectKey&) const = default;
};

void encode_key(ByteWriter& w, const ObjectKey& key);
ObjectKey decode_key(ByteReader& r);

// Inserts "_<index>" before the final extension; a path without an
// extension gets a plain suffix.
std::string next_overflow_name(const std::string& path, uint32_t index);

struct ContainerOptions {
    std::optional<uint64_t> max_size;
    ProcessTag process_tag = ProcessTag::current();
};

// Read access to keyed records, satisfied by a single container or a
// rollover chain.
class ObjectSource {
public:
    virtual ~ObjectSource() = default;

    virtual const ObjectKey* find_key(std::string_view name,
                                      std::optional<uint32_t> cycle = {}) const = 0;
    virtual DynamicRecord get(std::string_view name, std::optional<uint32_t> cycle = {}) const = 0;
    virtual std::vector<ObjectKey> list_keys() const = 0;
    virtual const TypeDescriptor* find_type(std::string_view name,
                                            std::optional<uint32_t> version = {}) const = 0;
    virtual std::vector<const TypeDescriptor*> all_types() const = 0;

    bool has(std::string_view name) const { return find_key(name) != nullptr; }
};

// A keyed object store with the schemas of everything it contains written
// into the file itself. One writer; finalized files are read-only.
class Container : public ObjectSource {
public:
    static std::unique_ptr<Container> create(const std::string& path, ContainerOptions options = {});
    static std::unique_ptr<Container> create_mem(const std::string& name, ContainerOptions options = {});
    static std::unique_ptr<Container> open(const std::string& path);
    static std::unique_ptr<Container> open_mem(const std::string& name);

    // Writes the descriptor closure of the record's type on first use, then
    // the value record; returns the new key (next cycle for `name`).
    ObjectKey put(std::string_view name, const DynamicRecord& record, const SchemaRegistry& registry);

    // Writes a descriptor closure without a value record, so readers of
    // this file can decode payloads that only appear inside other records.
    void write_schema(const TypeDescriptor& desc, const SchemaRegistry& registry);

    DynamicRecord get(std::string_view name, std::optional<uint32_t> cycle = {}) const override;
    const ObjectKey* find_key(std::string_view name,
                              std::optional<uint32_t> cycle = {}) const override;
    std::vector<ObjectKey> list_keys() const override { return keys_; }
    const TypeDescriptor* find_type(std::string_view name,
                                    std::optional<uint32_t> version = {}) const override;
    std::vector<const TypeDescriptor*> all_types() const override { return schemas_.all(); }

    // Writes the key table and seals the file. The container stays readable.
    void finalize();

    // When a max size is configured and the physical size exceeds it:
    // finalizes this file and returns the successor (same options, same
    // process tag, overflow index + 1). Returns null otherwise.
    std::unique_ptr<Container> maybe_rollover();

    // Records returned by get() that carry a uid are auto-registered here.
    void attach_ref_registry(RefRegistry* registry) { ref_registry_ = registry; }

    const std::string& path() const { return path_; }
    const Header& header() const { return header_; }
    uint64_t physical_size() const { return storage_->size(); }
    std::optional<uint64_t> max_size() const { return options_.max_size; }
    uint32_t overflow_index() const { return overflow_index_; }
    bool writable() const { return writable_; }
    bool finalized() const { return finalized_; }
    const SchemaRegistry& schemas() const { return schemas_; }

private:
    Container() = default;

    static std::unique_ptr<Container> create_on(std::shared_ptr<Storage> storage, std::string path,
                                                ContainerOptions options, uint32_t overflow_index,
                                                std::string base_path);
    static std::unique_ptr<Container> open_on(std::shared_ptr<Storage> storage, std::string path);

    void write_header();
    void ensure_descriptors(const TypeDescriptor& desc, const SchemaRegistry& registry);
    void write_descriptor_record(const TypeDescriptor& desc);
    void load_uid_map();
    void write_uid_map();

    std::shared_ptr<Storage> storage_;
    std::string path_;
    std::string base_path_; // original file of the rollover family
    ContainerOptions options_;
    Header header_;
    uint32_t overflow_index_ = 0;
    bool writable_ = false;
    bool finalized_ = false;
    bool is_mem_ = false;

    std::vector<ObjectKey> keys_;
    std::map<std::string, uint32_t, std::less<>> next_cycle_;
    SchemaRegistry schemas_;
    std::set<std::pair<std::string, uint32_t>> schemas_written_;

    struct UidEntry {
        std::string name;
        uint32_t cycle;
        Uid uid;
    };
    std::vector<UidEntry> uid_entries_;
    std::map<std::pair<std::string, uint32_t>, Uid> uid_by_key_;
    RefRegistry* ref_registry_ = nullptr;
};

// Read view over a rollover family (or any ordered set of containers).
// Keys are looked up across all parts; the default cycle is the highest
// across the chain.
class ContainerChain : public ObjectSource {
public:
    static ContainerChain open(const std::vector<std::string>& paths);

    // Opens `first` plus every existing successor file in order.
    static ContainerChain open_family(const std::string& first);

    void add(std::unique_ptr<Container> part);

    const ObjectKey* find_key(std::string_view name,
                              std::optional<uint32_t> cycle = {}) const override;
    DynamicRecord get(std::string_view name, std::optional<uint32_t> cycle = {}) const override;
    std::vector<ObjectKey> list_keys() const override;
    const TypeDescriptor* find_type(std::string_view name,
                                    std::optional<uint32_t> version = {}) const override;
    std::vector<const TypeDescriptor*> all_types() const override;

    void attach_ref_registry(RefRegistry* registry);

    std::size_t parts() const { return parts_.size(); }
    const Container& part(std::size_t i) const { return *parts_[i]; }

private:
    const Container* owner_of(std::string_view name, std::optional<uint32_t> cycle) const;

    std::vector<std::unique_ptr<Container>> parts_;
};

// Owns the current write target of a rollover family and checks the size
// threshold after every completed put.
class RolloverSink {
public:
    explicit RolloverSink(std::unique_ptr<Container> first);

    Container& container() { return *current_; }
    const Container& container() const { return *current_; }

    ObjectKey put(std::string_view name, const DynamicRecord& record, const SchemaRegistry& registry);

    // Finalizes the current file; the sink is then exhausted.
    void finalize();

    // Paths of every file of the family, in write order (finalized ones
    // first, then the current file).
    std::vector<std::string> family_paths() const;
    std::size_t files_written() const { return finalized_paths_.size() + 1; }

private:
    std::unique_ptr<Container> current_;
    std::vector<std::string> finalized_paths_;
};

} // namespace nrt

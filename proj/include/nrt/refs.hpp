#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "nrt/record.hpp"
#include "nrt/uid.hpp"

namespace nrt {

// A persistent link. Always 20 bytes on disk regardless of the target's
// size; resolution is lazy and absence is a value, never an error.
struct Ref {
    Uid target{};

    bool is_set() const { return target.is_set(); }

    // Throws Untagged when the record has no uid yet.
    static Ref to(const DynamicRecord& record);
};

// Hands out uids and remembers which targets have been seen in memory.
// resolve() is monotone: once a uid maps to a record it maps to that record
// for the registry's lifetime.
class RefRegistry {
public:
    explicit RefRegistry(ProcessTag tag = ProcessTag::current()) : tag_(tag) {}

    // Idempotent: a record that already carries a uid keeps it.
    Uid assign_uid(DynamicRecord& record);

    // Makes `resolve` succeed for the record's uid. Registering a different
    // record value under an existing uid throws ConflictingRegistration.
    void register_loaded(const DynamicRecord& record);

    std::optional<DynamicRecord> resolve(const Ref& ref) const;
    std::optional<DynamicRecord> resolve(const Uid& uid) const;

    const ProcessTag& tag() const { return tag_; }
    uint32_t next_serial() const { return next_serial_ + 1; }

private:
    ProcessTag tag_;
    uint32_t next_serial_ = 0;
    std::map<Uid, DynamicRecord> loaded_;
};

// A compact list of serials sharing one process tag. Appending a uid with a
// different tag throws MixedProcessTags; use plain Ref lists for
// cross-process collections.
class RefArray {
public:
    void append(const DynamicRecord& record);
    void append(const Uid& uid);

    std::size_t size() const { return serials_.size(); }
    Ref ref_at(std::size_t i) const;
    std::optional<DynamicRecord> get(std::size_t i, const RefRegistry& registry) const;

    const ProcessTag& tag() const { return tag_; }
    const std::vector<uint32_t>& serials() const { return serials_; }

    // Record type "nrt.RefArray" v1. The descriptor is registered on demand.
    DynamicRecord to_record(SchemaRegistry& registry) const;
    static RefArray from_record(const DynamicRecord& record);

private:
    ProcessTag tag_{};
    bool has_tag_ = false;
    std::vector<uint32_t> serials_;
};

// Descriptor for "nrt.RefArray" v1; registered on demand by to_record.
const TypeDescriptor& ref_array_descriptor();

} // namespace nrt

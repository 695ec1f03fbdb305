#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nrt/error.hpp"

namespace nrt {

enum class FieldKind : uint8_t {
    Int64 = 1,
    Float64 = 2,
    Bool = 3,
    String = 4,
    Composite = 5,
    FixedArray = 6,
    Sequence = 7,
    Ref = 8,
};

const char* kind_name(FieldKind kind);

// Maps the element names usable in FixedArray/Sequence fields ("Int64",
// "Float64", "Bool", "String", "Ref") back to a kind. Anything else is
// assumed to name a composite type.
std::optional<FieldKind> primitive_kind_from_name(std::string_view name);

// One field of a type descriptor. The kind decides which other members are
// meaningful:
//   Composite            element = type name
//   FixedArray           element = primitive kind name or type name, length >= 1
//   Sequence             element = primitive kind name or type name
//   everything else      element empty, length 0
struct FieldDescriptor {
    std::string name;
    FieldKind kind = FieldKind::Int64;
    std::string element;
    uint32_t length = 0;

    static FieldDescriptor scalar(std::string name, FieldKind kind);
    static FieldDescriptor composite(std::string name, std::string type_name);
    static FieldDescriptor fixed_array(std::string name, std::string element, uint32_t length);
    static FieldDescriptor sequence(std::string name, std::string element);

    // Throws Malformed if the kind/element/length combination is invalid.
    void validate() const;

    bool operator==(const FieldDescriptor&) const = default;
};

// A named, versioned, checksummed field list. Instances are immutable and
// the checksum is computed at construction, so a descriptor in hand is
// always self-consistent.
class TypeDescriptor {
public:
    TypeDescriptor() = default;

    // Validates fields and computes the checksum.
    static TypeDescriptor make(std::string name, uint32_t version,
                               std::vector<FieldDescriptor> fields, std::string base = "");

    // Assembles a descriptor with an externally supplied checksum (decode
    // path); does not verify it.
    static TypeDescriptor assemble(std::string name, uint32_t version, uint32_t checksum,
                                   std::vector<FieldDescriptor> fields, std::string base);

    const std::string& name() const { return name_; }
    uint32_t version() const { return version_; }
    uint32_t checksum() const { return checksum_; }
    const std::string& base() const { return base_; }
    const std::vector<FieldDescriptor>& fields() const { return fields_; }

    bool operator==(const TypeDescriptor&) const = default;

private:
    std::string name_;
    uint32_t version_ = 0;
    uint32_t checksum_ = 0;
    std::string base_;
    std::vector<FieldDescriptor> fields_;
};

// CRC-32 over the canonical encoding with the checksum field zeroed.
uint32_t compute_checksum(const TypeDescriptor& desc);

constexpr uint8_t kDescriptorTag = 0xD5;

std::vector<uint8_t> encode_descriptor(const TypeDescriptor& desc);

// Verifies the stored checksum against recomputation; throws Malformed or
// ChecksumMismatch.
TypeDescriptor decode_descriptor(std::span<const uint8_t> bytes);

class SchemaRegistry {
public:
    // Validates the descriptor (base resolvable, no base cycle, flattened
    // field names unique) and stores it. Re-registering an identical
    // (name, version) is a no-op; a different checksum under the same key
    // throws DuplicateConflict.
    void register_type(const TypeDescriptor& desc);

    const TypeDescriptor* find(std::string_view name, uint32_t version) const;
    const TypeDescriptor* find_latest(std::string_view name) const;

    // Throws UnknownType when absent.
    const TypeDescriptor& get(std::string_view name, uint32_t version) const;
    const TypeDescriptor& get_latest(std::string_view name) const;

    bool has(std::string_view name, uint32_t version) const { return find(name, version); }

    // Base fields first (recursively), then own fields.
    std::vector<FieldDescriptor> flattened_fields(const TypeDescriptor& desc) const;

    std::vector<const TypeDescriptor*> all() const;
    std::size_t size() const { return by_key_.size(); }

private:
    void check_base_chain(const TypeDescriptor& desc) const;

    std::map<std::pair<std::string, uint32_t>, TypeDescriptor> by_key_;
    std::map<std::string, uint32_t> latest_;
};

} // namespace nrt

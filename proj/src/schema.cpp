#include "nrt/schema.hpp"

#include <set>

#include "nrt/bytes.hpp"
#include "nrt/crc32.hpp"

namespace nrt {

const char* kind_name(FieldKind kind) {
    switch (kind) {
    case FieldKind::Int64: return "Int64";
    case FieldKind::Float64: return "Float64";
    case FieldKind::Bool: return "Bool";
    case FieldKind::String: return "String";
    case FieldKind::Composite: return "Composite";
    case FieldKind::FixedArray: return "FixedArray";
    case FieldKind::Sequence: return "Sequence";
    case FieldKind::Ref: return "Ref";
    }
    return "?";
}

std::optional<FieldKind> primitive_kind_from_name(std::string_view name) {
    if (name == "Int64") return FieldKind::Int64;
    if (name == "Float64") return FieldKind::Float64;
    if (name == "Bool") return FieldKind::Bool;
    if (name == "String") return FieldKind::String;
    if (name == "Ref" || name == "RefKind") return FieldKind::Ref;
    return std::nullopt;
}

FieldDescriptor FieldDescriptor::scalar(std::string name, FieldKind kind) {
    FieldDescriptor f{std::move(name), kind, "", 0};
    f.validate();
    return f;
}

FieldDescriptor FieldDescriptor::composite(std::string name, std::string type_name) {
    FieldDescriptor f{std::move(name), FieldKind::Composite, std::move(type_name), 0};
    f.validate();
    return f;
}

FieldDescriptor FieldDescriptor::fixed_array(std::string name, std::string element, uint32_t length) {
    FieldDescriptor f{std::move(name), FieldKind::FixedArray, std::move(element), length};
    f.validate();
    return f;
}

FieldDescriptor FieldDescriptor::sequence(std::string name, std::string element) {
    FieldDescriptor f{std::move(name), FieldKind::Sequence, std::move(element), 0};
    f.validate();
    return f;
}

void FieldDescriptor::validate() const {
    if (name.empty()) fail(Errc::malformed, "field with empty name");
    switch (kind) {
    case FieldKind::Int64:
    case FieldKind::Float64:
    case FieldKind::Bool:
    case FieldKind::String:
    case FieldKind::Ref:
        if (!element.empty())
            fail(Errc::malformed, "field '" + name + "': element not allowed for " + kind_name(kind));
        if (length != 0)
            fail(Errc::malformed, "field '" + name + "': length not allowed for " + kind_name(kind));
        break;
    case FieldKind::Composite:
        if (element.empty()) fail(Errc::malformed, "field '" + name + "': composite needs element type");
        if (primitive_kind_from_name(element))
            fail(Errc::malformed, "field '" + name + "': composite element cannot be primitive");
        if (length != 0) fail(Errc::malformed, "field '" + name + "': length not allowed for Composite");
        break;
    case FieldKind::FixedArray:
        if (element.empty()) fail(Errc::malformed, "field '" + name + "': fixed array needs element");
        if (length == 0) fail(Errc::malformed, "field '" + name + "': fixed array needs length >= 1");
        break;
    case FieldKind::Sequence:
        if (element.empty()) fail(Errc::malformed, "field '" + name + "': sequence needs element");
        if (length != 0) fail(Errc::malformed, "field '" + name + "': length not allowed for Sequence");
        break;
    }
}

TypeDescriptor TypeDescriptor::make(std::string name, uint32_t version,
                                    std::vector<FieldDescriptor> fields, std::string base) {
    if (name.empty()) fail(Errc::malformed, "descriptor with empty name");
    if (version == 0) fail(Errc::malformed, "descriptor version must be positive");
    std::set<std::string_view> seen;
    for (const auto& f : fields) {
        f.validate();
        if (!seen.insert(f.name).second)
            fail(Errc::malformed, "duplicate field name '" + f.name + "' in '" + name + "'");
    }
    TypeDescriptor d;
    d.name_ = std::move(name);
    d.version_ = version;
    d.base_ = std::move(base);
    d.fields_ = std::move(fields);
    d.checksum_ = compute_checksum(d);
    return d;
}

TypeDescriptor TypeDescriptor::assemble(std::string name, uint32_t version, uint32_t checksum,
                                        std::vector<FieldDescriptor> fields, std::string base) {
    TypeDescriptor d;
    d.name_ = std::move(name);
    d.version_ = version;
    d.checksum_ = checksum;
    d.base_ = std::move(base);
    d.fields_ = std::move(fields);
    return d;
}

namespace {

std::vector<uint8_t> encode_with_checksum(const TypeDescriptor& desc, uint32_t checksum) {
    ByteWriter w;
    w.u8(kDescriptorTag);
    w.str16(desc.name());
    w.u32(desc.version());
    w.u32(checksum);
    w.str16(desc.base());
    if (desc.fields().size() > 0xFFFF) fail(Errc::malformed, "too many fields");
    w.u16(static_cast<uint16_t>(desc.fields().size()));
    for (const auto& f : desc.fields()) {
        w.str16(f.name);
        w.u8(static_cast<uint8_t>(f.kind));
        w.str16(f.element);
        w.u32(f.length);
    }
    return w.take();
}

} // namespace

uint32_t compute_checksum(const TypeDescriptor& desc) {
    auto bytes = encode_with_checksum(desc, 0);
    return crc32(bytes);
}

std::vector<uint8_t> encode_descriptor(const TypeDescriptor& desc) {
    return encode_with_checksum(desc, desc.checksum());
}

TypeDescriptor decode_descriptor(std::span<const uint8_t> bytes) {
    ByteReader r(bytes);
    if (r.u8() != kDescriptorTag) fail(Errc::malformed, "missing descriptor tag");
    std::string name = r.str16();
    uint32_t version = r.u32();
    uint32_t checksum = r.u32();
    std::string base = r.str16();
    uint16_t nfields = r.u16();
    std::vector<FieldDescriptor> fields;
    fields.reserve(nfields);
    for (uint16_t i = 0; i < nfields; ++i) {
        FieldDescriptor f;
        f.name = r.str16();
        uint8_t kind = r.u8();
        if (kind < 1 || kind > 8) fail(Errc::malformed, "unknown field kind " + std::to_string(kind));
        f.kind = static_cast<FieldKind>(kind);
        f.element = r.str16();
        f.length = r.u32();
        f.validate();
        fields.push_back(std::move(f));
    }
    if (!r.at_end()) fail(Errc::malformed, "trailing bytes after descriptor");
    auto d = TypeDescriptor::assemble(std::move(name), version, checksum, std::move(fields),
                                      std::move(base));
    if (compute_checksum(d) != d.checksum())
        fail(Errc::checksum_mismatch, "descriptor '" + d.name() + "' checksum does not match contents");
    return d;
}

void SchemaRegistry::register_type(const TypeDescriptor& desc) {
    if (desc.name().empty() || desc.version() == 0) fail(Errc::malformed, "invalid descriptor");
    auto key = std::make_pair(desc.name(), desc.version());
    if (auto it = by_key_.find(key); it != by_key_.end()) {
        if (it->second.checksum() != desc.checksum())
            fail(Errc::duplicate_conflict,
                 "'" + desc.name() + "' v" + std::to_string(desc.version()) +
                     " already registered with a different checksum");
        return;
    }
    check_base_chain(desc);
    by_key_.emplace(key, desc);
    auto& latest = latest_[desc.name()];
    if (desc.version() > latest) latest = desc.version();
    // Validated only now that the base chain is known to resolve.
    (void)flattened_fields(desc);
}

void SchemaRegistry::check_base_chain(const TypeDescriptor& desc) const {
    std::set<std::string> visited{desc.name()};
    const TypeDescriptor* cur = &desc;
    while (!cur->base().empty()) {
        if (visited.count(cur->base()))
            fail(Errc::cyclic_base, "base cycle through '" + cur->base() + "'");
        const TypeDescriptor* next = find_latest(cur->base());
        if (!next)
            fail(Errc::unknown_base, "base '" + cur->base() + "' of '" + desc.name() + "' not registered");
        visited.insert(cur->base());
        cur = next;
    }
}

const TypeDescriptor* SchemaRegistry::find(std::string_view name, uint32_t version) const {
    auto it = by_key_.find(std::make_pair(std::string(name), version));
    return it == by_key_.end() ? nullptr : &it->second;
}

const TypeDescriptor* SchemaRegistry::find_latest(std::string_view name) const {
    auto it = latest_.find(std::string(name));
    return it == latest_.end() ? nullptr : find(name, it->second);
}

const TypeDescriptor& SchemaRegistry::get(std::string_view name, uint32_t version) const {
    const TypeDescriptor* d = find(name, version);
    if (!d)
        fail(Errc::unknown_type,
             "type '" + std::string(name) + "' v" + std::to_string(version) + " not registered");
    return *d;
}

const TypeDescriptor& SchemaRegistry::get_latest(std::string_view name) const {
    const TypeDescriptor* d = find_latest(name);
    if (!d) fail(Errc::unknown_type, "type '" + std::string(name) + "' not registered");
    return *d;
}

std::vector<FieldDescriptor> SchemaRegistry::flattened_fields(const TypeDescriptor& desc) const {
    std::vector<const TypeDescriptor*> chain;
    std::set<std::string> visited{desc.name()};
    const TypeDescriptor* cur = &desc;
    chain.push_back(cur);
    while (!cur->base().empty()) {
        if (visited.count(cur->base())) fail(Errc::cyclic_base, "base cycle through '" + cur->base() + "'");
        const TypeDescriptor* next = find_latest(cur->base());
        if (!next) fail(Errc::unknown_base, "base '" + cur->base() + "' not registered");
        visited.insert(cur->base());
        chain.push_back(next);
        cur = next;
    }
    std::vector<FieldDescriptor> out;
    std::set<std::string_view> names;
    for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        for (const auto& f : (*it)->fields()) {
            if (!names.insert(f.name).second)
                fail(Errc::duplicate_conflict,
                     "field '" + f.name + "' duplicated in flattened view of '" + desc.name() + "'");
            out.push_back(f);
        }
    }
    return out;
}

std::vector<const TypeDescriptor*> SchemaRegistry::all() const {
    std::vector<const TypeDescriptor*> out;
    out.reserve(by_key_.size());
    for (const auto& [k, v] : by_key_) out.push_back(&v);
    return out;
}

} // namespace nrt

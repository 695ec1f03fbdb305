#include "nrt/refs.hpp"

namespace nrt {

Ref Ref::to(const DynamicRecord& record) {
    if (!record.uid || !record.uid->is_set())
        fail(Errc::untagged, "record of type '" + record.type_name + "' has no uid");
    return Ref{*record.uid};
}

Uid RefRegistry::assign_uid(DynamicRecord& record) {
    if (record.uid && record.uid->is_set()) return *record.uid;
    Uid uid{tag_, ++next_serial_};
    record.uid = uid;
    loaded_.emplace(uid, record);
    return uid;
}

void RefRegistry::register_loaded(const DynamicRecord& record) {
    if (!record.uid || !record.uid->is_set())
        fail(Errc::untagged, "record of type '" + record.type_name + "' has no uid");
    auto it = loaded_.find(*record.uid);
    if (it == loaded_.end()) {
        loaded_.emplace(*record.uid, record);
        return;
    }
    if (!(it->second == record))
        fail(Errc::conflicting_registration,
             "uid serial " + std::to_string(record.uid->serial) + " already maps to a different record");
}

std::optional<DynamicRecord> RefRegistry::resolve(const Ref& ref) const {
    return resolve(ref.target);
}

std::optional<DynamicRecord> RefRegistry::resolve(const Uid& uid) const {
    if (!uid.is_set()) return std::nullopt;
    auto it = loaded_.find(uid);
    if (it == loaded_.end()) return std::nullopt;
    return it->second;
}

void RefArray::append(const DynamicRecord& record) {
    if (!record.uid || !record.uid->is_set())
        fail(Errc::untagged, "record of type '" + record.type_name + "' has no uid");
    append(*record.uid);
}

void RefArray::append(const Uid& uid) {
    if (!uid.is_set()) fail(Errc::untagged, "cannot append an unset uid");
    if (!has_tag_) {
        tag_ = uid.tag;
        has_tag_ = true;
    } else if (tag_ != uid.tag) {
        fail(Errc::mixed_process_tags, "uid from a different process appended to RefArray");
    }
    serials_.push_back(uid.serial);
}

Ref RefArray::ref_at(std::size_t i) const {
    if (i >= serials_.size()) fail(Errc::out_of_range, "RefArray index " + std::to_string(i));
    return Ref{Uid{tag_, serials_[i]}};
}

std::optional<DynamicRecord> RefArray::get(std::size_t i, const RefRegistry& registry) const {
    return registry.resolve(ref_at(i));
}

const TypeDescriptor& ref_array_descriptor() {
    static const TypeDescriptor desc = TypeDescriptor::make(
        "nrt.RefArray", 1,
        {FieldDescriptor::scalar("tag", FieldKind::String),
         FieldDescriptor::sequence("serials", "Int64")});
    return desc;
}

DynamicRecord RefArray::to_record(SchemaRegistry& registry) const {
    registry.register_type(ref_array_descriptor());
    DynamicRecord rec("nrt.RefArray", 1);
    rec.set("tag", Value(tag_.hex()));
    Value::List list;
    list.reserve(serials_.size());
    for (uint32_t s : serials_) list.push_back(Value(static_cast<int64_t>(s)));
    rec.set("serials", Value(std::move(list)));
    return rec;
}

RefArray RefArray::from_record(const DynamicRecord& record) {
    if (record.type_name != "nrt.RefArray")
        fail(Errc::type_mismatch, "expected nrt.RefArray, got '" + record.type_name + "'");
    RefArray arr;
    auto tag = ProcessTag::from_hex(record.at("tag").as_string());
    if (!tag) fail(Errc::malformed, "invalid process tag hex in RefArray record");
    const auto& serials = record.at("serials").as_list();
    if (!serials.empty()) {
        arr.tag_ = *tag;
        arr.has_tag_ = true;
        for (const auto& v : serials) arr.serials_.push_back(static_cast<uint32_t>(v.as_int()));
    } else if (!tag->is_zero()) {
        arr.tag_ = *tag;
        arr.has_tag_ = true;
    }
    return arr;
}

} // namespace nrt

#include "nrt/record.hpp"

namespace nrt {

Value::Value(DynamicRecord rec) : v_(make_record_ptr(std::move(rec))) {}

namespace {

[[noreturn]] void wrong_type(const char* want) {
    fail(Errc::type_mismatch, std::string("value is not ") + want);
}

} // namespace

int64_t Value::as_int() const {
    if (auto* p = std::get_if<int64_t>(&v_)) return *p;
    wrong_type("Int64");
}

double Value::as_f64() const {
    if (auto* p = std::get_if<double>(&v_)) return *p;
    wrong_type("Float64");
}

bool Value::as_bool() const {
    if (auto* p = std::get_if<bool>(&v_)) return *p;
    wrong_type("Bool");
}

const std::string& Value::as_string() const {
    if (auto* p = std::get_if<std::string>(&v_)) return *p;
    wrong_type("String");
}

const DynamicRecord& Value::as_record() const {
    if (auto* p = std::get_if<RecordPtr>(&v_)) {
        if (*p) return **p;
    }
    wrong_type("Composite");
}

const Value::List& Value::as_list() const {
    if (auto* p = std::get_if<List>(&v_)) return *p;
    wrong_type("a list");
}

const Uid& Value::as_ref() const {
    if (auto* p = std::get_if<Uid>(&v_)) return *p;
    wrong_type("Ref");
}

double Value::as_number() const {
    if (auto* p = std::get_if<double>(&v_)) return *p;
    if (auto* p = std::get_if<int64_t>(&v_)) return static_cast<double>(*p);
    if (auto* p = std::get_if<bool>(&v_)) return *p ? 1.0 : 0.0;
    wrong_type("numeric");
}

bool Value::operator==(const Value& other) const {
    if (v_.index() != other.v_.index()) return false;
    if (is_record()) {
        const auto& a = std::get<RecordPtr>(v_);
        const auto& b = std::get<RecordPtr>(other.v_);
        if (a == b) return true;
        if (!a || !b) return false;
        return *a == *b;
    }
    return v_ == other.v_;
}

const Value* DynamicRecord::find(std::string_view field) const {
    for (const auto& [name, v] : values)
        if (name == field) return &v;
    return nullptr;
}

const Value& DynamicRecord::at(std::string_view field) const {
    const Value* v = find(field);
    if (!v) fail(Errc::type_mismatch, "record '" + type_name + "' has no field '" + std::string(field) + "'");
    return *v;
}

namespace {

const TypeDescriptor& element_descriptor(const FieldDescriptor& field, const SchemaRegistry& registry) {
    const TypeDescriptor* d = registry.find_latest(field.element);
    if (!d)
        fail(Errc::unknown_element_type,
             "element type '" + field.element + "' of field '" + field.name + "' not registered");
    return *d;
}

void encode_element(ByteWriter& w, const Value& v, const FieldDescriptor& field,
                    const SchemaRegistry& registry) {
    if (auto prim = primitive_kind_from_name(field.element)) {
        FieldDescriptor elem{field.name, *prim, "", 0};
        encode_value(w, v, elem, registry);
        return;
    }
    const TypeDescriptor& desc = element_descriptor(field, registry);
    if (!v.is_record()) fail(Errc::type_mismatch, "field '" + field.name + "': expected nested record");
    encode_record_body(w, v.as_record(), desc, registry);
}

Value decode_element(ByteReader& r, const FieldDescriptor& field, const SchemaRegistry& registry) {
    if (auto prim = primitive_kind_from_name(field.element)) {
        FieldDescriptor elem{field.name, *prim, "", 0};
        return decode_value(r, elem, registry);
    }
    const TypeDescriptor& desc = element_descriptor(field, registry);
    return Value(make_record_ptr(decode_record_body(r, desc, registry)));
}

} // namespace

void encode_value(ByteWriter& w, const Value& v, const FieldDescriptor& field,
                  const SchemaRegistry& registry) {
    switch (field.kind) {
    case FieldKind::Int64:
        w.i64(v.as_int());
        break;
    case FieldKind::Float64:
        w.f64(v.as_f64());
        break;
    case FieldKind::Bool:
        w.u8(v.as_bool() ? 1 : 0);
        break;
    case FieldKind::String:
        w.str32(v.as_string());
        break;
    case FieldKind::Ref: {
        const Uid& uid = v.as_ref();
        w.bytes(uid.tag.bytes.data(), uid.tag.bytes.size());
        w.u32(uid.serial);
        break;
    }
    case FieldKind::Composite: {
        const TypeDescriptor& desc = element_descriptor(field, registry);
        encode_record_body(w, v.as_record(), desc, registry);
        break;
    }
    case FieldKind::FixedArray: {
        const auto& list = v.as_list();
        if (list.size() != field.length)
            fail(Errc::type_mismatch, "field '" + field.name + "': fixed array expects " +
                                          std::to_string(field.length) + " elements, got " +
                                          std::to_string(list.size()));
        for (const auto& e : list) encode_element(w, e, field, registry);
        break;
    }
    case FieldKind::Sequence: {
        const auto& list = v.as_list();
        if (list.size() > 0xFFFFFFFFull) fail(Errc::malformed, "sequence too long");
        w.u32(static_cast<uint32_t>(list.size()));
        for (const auto& e : list) encode_element(w, e, field, registry);
        break;
    }
    }
}

void encode_record_body(ByteWriter& w, const DynamicRecord& rec, const TypeDescriptor& desc,
                        const SchemaRegistry& registry) {
    if (rec.type_name != desc.name())
        fail(Errc::type_mismatch,
             "record of type '" + rec.type_name + "' encoded against descriptor '" + desc.name() + "'");
    auto fields = registry.flattened_fields(desc);
    if (rec.values.size() != fields.size())
        fail(Errc::type_mismatch, "record '" + rec.type_name + "' has " +
                                      std::to_string(rec.values.size()) + " values, descriptor has " +
                                      std::to_string(fields.size()) + " fields");
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (rec.values[i].first != fields[i].name)
            fail(Errc::type_mismatch, "record '" + rec.type_name + "' field " + std::to_string(i) +
                                          " is '" + rec.values[i].first + "', descriptor says '" +
                                          fields[i].name + "'");
        encode_value(w, rec.values[i].second, fields[i], registry);
    }
}

std::vector<uint8_t> encode_record(const DynamicRecord& rec, const SchemaRegistry& registry) {
    const TypeDescriptor& desc = registry.get(rec.type_name, rec.type_version);
    ByteWriter w;
    encode_record_body(w, rec, desc, registry);
    return w.take();
}

Value decode_value(ByteReader& r, const FieldDescriptor& field, const SchemaRegistry& registry) {
    switch (field.kind) {
    case FieldKind::Int64:
        return Value(r.i64());
    case FieldKind::Float64:
        return Value(r.f64());
    case FieldKind::Bool: {
        uint8_t b = r.u8();
        if (b > 1) fail(Errc::malformed, "invalid bool byte");
        return Value(b == 1);
    }
    case FieldKind::String:
        return Value(r.str32());
    case FieldKind::Ref: {
        Uid uid;
        auto raw = r.raw(16);
        std::copy(raw.begin(), raw.end(), uid.tag.bytes.begin());
        uid.serial = r.u32();
        return Value(uid);
    }
    case FieldKind::Composite: {
        const TypeDescriptor& desc = element_descriptor(field, registry);
        return Value(make_record_ptr(decode_record_body(r, desc, registry)));
    }
    case FieldKind::FixedArray: {
        Value::List list;
        list.reserve(field.length);
        for (uint32_t i = 0; i < field.length; ++i) list.push_back(decode_element(r, field, registry));
        return Value(std::move(list));
    }
    case FieldKind::Sequence: {
        uint32_t n = r.u32();
        Value::List list;
        list.reserve(std::min<uint32_t>(n, 1u << 20));
        for (uint32_t i = 0; i < n; ++i) list.push_back(decode_element(r, field, registry));
        return Value(std::move(list));
    }
    }
    fail(Errc::malformed, "unreachable kind");
}

DynamicRecord decode_record_body(ByteReader& r, const TypeDescriptor& desc,
                                 const SchemaRegistry& registry) {
    DynamicRecord rec(desc.name(), desc.version());
    for (const auto& f : registry.flattened_fields(desc))
        rec.set(f.name, decode_value(r, f, registry));
    return rec;
}

DynamicRecord read_emulated(std::span<const uint8_t> bytes, const TypeDescriptor& desc,
                            const SchemaRegistry& registry) {
    ByteReader r(bytes);
    DynamicRecord rec = decode_record_body(r, desc, registry);
    if (!r.at_end()) fail(Errc::malformed, "trailing bytes after record value");
    return rec;
}

Value default_value(const FieldDescriptor& field, const SchemaRegistry* registry) {
    switch (field.kind) {
    case FieldKind::Int64: return Value(int64_t{0});
    case FieldKind::Float64: return Value(0.0);
    case FieldKind::Bool: return Value(false);
    case FieldKind::String: return Value(std::string());
    case FieldKind::Ref: return Value(Uid{});
    case FieldKind::Sequence: return Value(Value::List{});
    case FieldKind::FixedArray: {
        FieldDescriptor elem = field;
        if (auto prim = primitive_kind_from_name(field.element)) {
            elem = FieldDescriptor{field.name, *prim, "", 0};
        } else {
            elem = FieldDescriptor{field.name, FieldKind::Composite, field.element, 0};
        }
        Value::List list;
        list.reserve(field.length);
        for (uint32_t i = 0; i < field.length; ++i) list.push_back(default_value(elem, registry));
        return Value(std::move(list));
    }
    case FieldKind::Composite: {
        if (!registry)
            fail(Errc::unknown_element_type,
                 "cannot default composite field '" + field.name + "' without a registry");
        const TypeDescriptor* d = registry->find_latest(field.element);
        if (!d)
            fail(Errc::unknown_element_type,
                 "element type '" + field.element + "' of field '" + field.name + "' not registered");
        return Value(make_record_ptr(default_record(*d, *registry)));
    }
    }
    fail(Errc::malformed, "unreachable kind");
}

DynamicRecord default_record(const TypeDescriptor& desc, const SchemaRegistry& registry) {
    DynamicRecord rec(desc.name(), desc.version());
    for (const auto& f : registry.flattened_fields(desc)) rec.set(f.name, default_value(f, &registry));
    return rec;
}

namespace {

bool same_shape(const FieldDescriptor& a, const FieldDescriptor& b) {
    return a.kind == b.kind && a.element == b.element && a.length == b.length;
}

} // namespace

DynamicRecord evolve(const DynamicRecord& record, const TypeDescriptor& from,
                     const TypeDescriptor& to, const SchemaRegistry* registry) {
    if (from.name() != to.name())
        fail(Errc::type_mismatch,
             "evolve between different types '" + from.name() + "' and '" + to.name() + "'");

    // Flattening needs a registry only when a base is involved; plain
    // descriptors evolve standalone.
    SchemaRegistry scratch;
    const SchemaRegistry* reg = registry;
    if (!reg) reg = &scratch;
    auto flatten = [&](const TypeDescriptor& d) {
        if (d.base().empty()) return d.fields();
        return reg->flattened_fields(d);
    };
    auto from_fields = flatten(from);
    auto to_fields = flatten(to);

    DynamicRecord out(to.name(), to.version());
    out.uid = record.uid;
    for (const auto& tf : to_fields) {
        const FieldDescriptor* ff = nullptr;
        const Value* fv = nullptr;
        for (std::size_t i = 0; i < from_fields.size(); ++i) {
            if (from_fields[i].name == tf.name) {
                ff = &from_fields[i];
                if (i < record.values.size() && record.values[i].first == tf.name)
                    fv = &record.values[i].second;
                else
                    fv = record.find(tf.name);
                break;
            }
        }
        if (!ff || !fv) {
            out.set(tf.name, default_value(tf, registry));
            continue;
        }
        if (same_shape(*ff, tf)) {
            out.set(tf.name, *fv);
        } else if (ff->kind == FieldKind::Int64 && tf.kind == FieldKind::Float64) {
            out.set(tf.name, Value(static_cast<double>(fv->as_int())));
        } else {
            fail(Errc::incompatible_kind, "field '" + tf.name + "': cannot convert " +
                                              kind_name(ff->kind) + " to " + kind_name(tf.kind));
        }
    }
    return out;
}

} // namespace nrt

#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "nrt/bytes.hpp"
#include "nrt/schema.hpp"
#include "nrt/uid.hpp"

namespace nrt {

class DynamicRecord;
using RecordPtr = std::shared_ptr<const DynamicRecord>;

// One field value. Nested records are held behind a shared pointer so the
// variant stays regular; equality compares through it.
class Value {
public:
    using List = std::vector<Value>;
    using Storage = std::variant<int64_t, double, bool, std::string, RecordPtr, List, Uid>;

    Value() : v_(int64_t{0}) {}
    Value(int64_t x) : v_(x) {}
    Value(double x) : v_(x) {}
    Value(bool x) : v_(x) {}
    Value(std::string x) : v_(std::move(x)) {}
    Value(const char* x) : v_(std::string(x)) {}
    Value(RecordPtr x) : v_(std::move(x)) {}
    Value(DynamicRecord rec);
    Value(List x) : v_(std::move(x)) {}
    Value(Uid x) : v_(x) {}

    bool is_int() const { return std::holds_alternative<int64_t>(v_); }
    bool is_f64() const { return std::holds_alternative<double>(v_); }
    bool is_bool() const { return std::holds_alternative<bool>(v_); }
    bool is_string() const { return std::holds_alternative<std::string>(v_); }
    bool is_record() const { return std::holds_alternative<RecordPtr>(v_); }
    bool is_list() const { return std::holds_alternative<List>(v_); }
    bool is_ref() const { return std::holds_alternative<Uid>(v_); }

    int64_t as_int() const;
    double as_f64() const;
    bool as_bool() const;
    const std::string& as_string() const;
    const DynamicRecord& as_record() const;
    const List& as_list() const;
    const Uid& as_ref() const;

    // Numeric view: Int64/Float64/Bool widen to double, anything else throws
    // TypeMismatch.
    double as_number() const;

    const Storage& storage() const { return v_; }

    bool operator==(const Value& other) const;

private:
    Storage v_;
};

// A value tree readable purely from a TypeDescriptor. `values` aligns
// one-to-one, in order, with the flattened field list of the governing
// descriptor version. The optional uid is persistence metadata and does not
// take part in equality.
class DynamicRecord {
public:
    std::string type_name;
    uint32_t type_version = 1;
    std::vector<std::pair<std::string, Value>> values;
    std::optional<Uid> uid;

    DynamicRecord() = default;
    DynamicRecord(std::string name, uint32_t version) : type_name(std::move(name)), type_version(version) {}

    void set(std::string field, Value v) { values.emplace_back(std::move(field), std::move(v)); }

    const Value* find(std::string_view field) const;
    const Value& at(std::string_view field) const; // throws NoSuchBranch-style TypeMismatch

    bool operator==(const DynamicRecord& other) const {
        return type_name == other.type_name && type_version == other.type_version &&
               values == other.values;
    }
};

inline RecordPtr make_record_ptr(DynamicRecord rec) {
    return std::make_shared<const DynamicRecord>(std::move(rec));
}

// --- value encoding ------------------------------------------------------
//
// Int64 = 8-byte two's complement, Float64 = IEEE-754 binary64, Bool = 1
// byte, String = u32 len + bytes, FixedArray = `length` elements, Sequence =
// u32 count + elements, Composite = fields in flattened declaration order,
// Ref = 16 tag bytes + u32 serial. Little-endian throughout.

void encode_value(ByteWriter& w, const Value& v, const FieldDescriptor& field,
                  const SchemaRegistry& registry);
void encode_record_body(ByteWriter& w, const DynamicRecord& rec, const TypeDescriptor& desc,
                        const SchemaRegistry& registry);
std::vector<uint8_t> encode_record(const DynamicRecord& rec, const SchemaRegistry& registry);

Value decode_value(ByteReader& r, const FieldDescriptor& field, const SchemaRegistry& registry);
DynamicRecord decode_record_body(ByteReader& r, const TypeDescriptor& desc,
                                 const SchemaRegistry& registry);

// Materializes one record from raw bytes using nothing but descriptors.
DynamicRecord read_emulated(std::span<const uint8_t> bytes, const TypeDescriptor& desc,
                            const SchemaRegistry& registry);

// Reshapes a record from one descriptor version to another: fields matched
// by name, added fields take kind defaults, removed fields are dropped,
// Int64 widens to Float64. The registry is needed only to default-construct
// added composite fields.
DynamicRecord evolve(const DynamicRecord& record, const TypeDescriptor& from,
                     const TypeDescriptor& to, const SchemaRegistry* registry = nullptr);

Value default_value(const FieldDescriptor& field, const SchemaRegistry* registry = nullptr);

// A record with every field defaulted.
DynamicRecord default_record(const TypeDescriptor& desc, const SchemaRegistry& registry);

} // namespace nrt

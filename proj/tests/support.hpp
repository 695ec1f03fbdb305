#pragma once

// Shared test helpers: randomized schema/record generators, independent
// oracles, and a scratch directory guard.

#include <atomic>
#include <cmath>
#include <filesystem>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <unistd.h>

#include "nrt/query.hpp"
#include "nrt/record.hpp"
#include "nrt/schema.hpp"

namespace nrt::test {

class TempDir {
public:
    explicit TempDir(const std::string& tag) {
        static std::atomic<uint64_t> counter{0};
        path_ = std::filesystem::temp_directory_path() /
                ("nrt_" + tag + "_" + std::to_string(::getpid()) + "_" +
                 std::to_string(counter.fetch_add(1)));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    std::string file(const std::string& name) const { return (path_ / name).string(); }
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

using Rng = std::mt19937_64;

inline int64_t rand_int(Rng& rng, int64_t lo, int64_t hi) {
    return lo + static_cast<int64_t>(rng() % static_cast<uint64_t>(hi - lo + 1));
}

inline double rand_double(Rng& rng) {
    // dyadic rationals round-trip exactly through text and binary
    return (static_cast<double>(rand_int(rng, -4096, 4096))) / 16.0;
}

inline std::string rand_name(Rng& rng, const char* prefix) {
    return std::string(prefix) + std::to_string(rng() % 100000);
}

inline std::string rand_text(Rng& rng) {
    static const char chars[] = "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _-+&<>\"'";
    std::string s;
    std::size_t n = rng() % 12;
    for (std::size_t i = 0; i < n; ++i) s += chars[rng() % (sizeof(chars) - 1)];
    return s;
}

// A randomized schema family: a handful of flat composite types, optionally
// a base/derived pair, and a root type that composes them through nested
// composites and sequences of composites.
struct SchemaFamily {
    SchemaRegistry registry;
    std::string root;

    const TypeDescriptor& root_desc() const { return registry.get_latest(root); }
};

inline FieldDescriptor rand_primitive_field(Rng& rng, const std::string& name) {
    switch (rng() % 4) {
    case 0: return FieldDescriptor::scalar(name, FieldKind::Int64);
    case 1: return FieldDescriptor::scalar(name, FieldKind::Float64);
    case 2: return FieldDescriptor::scalar(name, FieldKind::Bool);
    default: return FieldDescriptor::scalar(name, FieldKind::String);
    }
}

// Flat composite: primitives plus optional primitive sequences/arrays.
inline TypeDescriptor make_flat_type(Rng& rng, const std::string& name, uint32_t version = 1,
                                     const std::string& base = "") {
    std::vector<FieldDescriptor> fields;
    std::size_t n = 1 + rng() % 4;
    for (std::size_t i = 0; i < n; ++i) {
        std::string fname = "f" + std::to_string(i);
        switch (rng() % 8) {
        case 0:
            fields.push_back(FieldDescriptor::sequence(fname, "Float64"));
            break;
        case 1:
            fields.push_back(FieldDescriptor::sequence(fname, "Int64"));
            break;
        case 2:
            fields.push_back(
                FieldDescriptor::fixed_array(fname, "Float64", 1 + static_cast<uint32_t>(rng() % 3)));
            break;
        default:
            fields.push_back(rand_primitive_field(rng, fname));
            break;
        }
    }
    return TypeDescriptor::make(name, version, std::move(fields), base);
}

inline SchemaFamily make_schema_family(uint64_t seed) {
    Rng rng(seed);
    SchemaFamily fam;

    std::string leaf_a = rand_name(rng, "LeafA");
    std::string leaf_b = rand_name(rng, "LeafB");
    fam.registry.register_type(make_flat_type(rng, leaf_a));
    fam.registry.register_type(make_flat_type(rng, leaf_b));

    // base/derived pair exercising inheritance flattening
    std::string base = rand_name(rng, "Base");
    std::string derived = rand_name(rng, "Derived");
    fam.registry.register_type(TypeDescriptor::make(
        base, 1,
        {FieldDescriptor::scalar("b0", FieldKind::Int64),
         FieldDescriptor::scalar("b1", FieldKind::Float64)}));
    {
        std::vector<FieldDescriptor> fields{FieldDescriptor::scalar("d0", FieldKind::Float64),
                                            FieldDescriptor::composite("d1", leaf_a)};
        fam.registry.register_type(TypeDescriptor::make(derived, 1, std::move(fields), base));
    }

    std::string root = rand_name(rng, "Event");
    std::vector<FieldDescriptor> fields;
    fields.push_back(FieldDescriptor::scalar("n", FieldKind::Int64));
    fields.push_back(FieldDescriptor::scalar("w", FieldKind::Float64));
    fields.push_back(FieldDescriptor::composite("obj", derived));
    fields.push_back(FieldDescriptor::sequence("items", leaf_b));
    if (rng() % 2) fields.push_back(FieldDescriptor::sequence("tags", "String"));
    if (rng() % 2) fields.push_back(FieldDescriptor::scalar("flag", FieldKind::Bool));
    fam.registry.register_type(TypeDescriptor::make(root, 1, std::move(fields)));
    fam.root = root;
    return fam;
}

inline Value rand_value(Rng& rng, const FieldDescriptor& field, const SchemaRegistry& registry);

inline DynamicRecord rand_record(Rng& rng, const TypeDescriptor& desc,
                                 const SchemaRegistry& registry) {
    DynamicRecord rec(desc.name(), desc.version());
    for (const auto& f : registry.flattened_fields(desc)) rec.set(f.name, rand_value(rng, f, registry));
    return rec;
}

inline Value rand_element(Rng& rng, const FieldDescriptor& field, const SchemaRegistry& registry) {
    if (auto prim = primitive_kind_from_name(field.element)) {
        FieldDescriptor elem{"e", *prim, "", 0};
        return rand_value(rng, elem, registry);
    }
    return Value(make_record_ptr(rand_record(rng, registry.get_latest(field.element), registry)));
}

inline Value rand_value(Rng& rng, const FieldDescriptor& field, const SchemaRegistry& registry) {
    switch (field.kind) {
    case FieldKind::Int64: return Value(rand_int(rng, -1000000, 1000000));
    case FieldKind::Float64: return Value(rand_double(rng));
    case FieldKind::Bool: return Value(rng() % 2 == 0);
    case FieldKind::String: return Value(rand_text(rng));
    case FieldKind::Ref: {
        Uid uid;
        if (rng() % 2) {
            for (auto& b : uid.tag.bytes) b = static_cast<uint8_t>(rng());
            uid.serial = static_cast<uint32_t>(1 + rng() % 1000);
        }
        return Value(uid);
    }
    case FieldKind::Composite:
        return Value(make_record_ptr(rand_record(rng, registry.get_latest(field.element), registry)));
    case FieldKind::FixedArray: {
        Value::List list;
        for (uint32_t i = 0; i < field.length; ++i) list.push_back(rand_element(rng, field, registry));
        return Value(std::move(list));
    }
    case FieldKind::Sequence: {
        Value::List list;
        std::size_t n = rng() % 4;
        for (std::size_t i = 0; i < n; ++i) list.push_back(rand_element(rng, field, registry));
        return Value(std::move(list));
    }
    }
    return Value();
}

// --- independent oracles --------------------------------------------------

// Expected branch names for a split, written as a direct transcription of
// the layout rules with none of the production code's bookkeeping.
inline void oracle_split_into(const TypeDescriptor& desc, const std::string& prefix, int budget,
                              const SchemaRegistry& reg, std::vector<std::string>& out) {
    for (const auto& f : reg.flattened_fields(desc)) {
        std::string path = prefix.empty() ? f.name : prefix + "." + f.name;
        if (f.kind == FieldKind::Composite) {
            if (budget > 0)
                oracle_split_into(reg.get_latest(f.element), path, budget - 1, reg, out);
            else
                out.push_back(path);
        } else if (f.kind == FieldKind::Sequence && !primitive_kind_from_name(f.element) &&
                   budget > 0) {
            out.push_back(path + "_n");
            for (const auto& m : reg.flattened_fields(reg.get_latest(f.element)))
                out.push_back(path + "." + m.name);
        } else {
            out.push_back(path);
        }
    }
}

inline std::vector<std::string> oracle_split_names(const TypeDescriptor& desc, uint32_t level,
                                                   const SchemaRegistry& reg) {
    if (level == 0) return {desc.name()};
    std::vector<std::string> out;
    oracle_split_into(desc, "", static_cast<int>(level) - 1, reg, out);
    return out;
}

// Full-materialization expression evaluator: resolves branch names by
// walking the record itself. Tracks which names it touches, honoring && /
// || short-circuit, for laziness checks.
inline Value oracle_lookup(const DynamicRecord& rec, const std::string& name);

inline Value oracle_lookup_value(const Value& v, const std::vector<std::string>& parts,
                                 std::size_t at) {
    if (at == parts.size()) return v;
    if (v.is_record()) {
        const Value* f = v.as_record().find(parts[at]);
        if (!f) fail(Errc::no_such_branch, "oracle: no field " + parts[at]);
        return oracle_lookup_value(*f, parts, at + 1);
    }
    if (v.is_list()) {
        Value::List out;
        for (const auto& e : v.as_list()) out.push_back(oracle_lookup_value(e, parts, at));
        return Value(std::move(out));
    }
    fail(Errc::no_such_branch, "oracle: descended into scalar");
}

inline Value oracle_lookup(const DynamicRecord& rec, const std::string& name) {
    std::vector<std::string> parts;
    std::size_t start = 0;
    while (true) {
        auto dot = name.find('.', start);
        if (dot == std::string::npos) {
            parts.push_back(name.substr(start));
            break;
        }
        parts.push_back(name.substr(start, dot - start));
        start = dot + 1;
    }
    // count form "<path>_n"
    if (parts.back().size() > 2 && parts.back().substr(parts.back().size() - 2) == "_n") {
        std::vector<std::string> base = parts;
        base.back() = base.back().substr(0, base.back().size() - 2);
        const Value* probe = rec.find(base[0]);
        if (probe) {
            try {
                Value v = oracle_lookup_value(*probe, base, 1);
                if (v.is_list()) return Value(static_cast<int64_t>(v.as_list().size()));
            } catch (const Error&) {
            }
        }
    }
    const Value* f = rec.find(parts[0]);
    if (!f) fail(Errc::no_such_branch, "oracle: no field " + parts[0]);
    return oracle_lookup_value(*f, parts, 1);
}

inline double oracle_scalar(const Value& v, std::optional<uint64_t> elem) {
    if (v.is_list()) {
        if (!elem) fail(Errc::mixed_axes, "oracle: list in scalar context");
        return v.as_list().at(*elem).as_number();
    }
    return v.as_number();
}

inline double oracle_eval(const Expr& e, const DynamicRecord& rec, std::optional<uint64_t> elem,
                          const FunctionRegistry& fns, std::set<std::string>* touched) {
    switch (e.kind) {
    case Expr::Kind::number:
        return e.number;
    case Expr::Kind::branch: {
        if (touched) touched->insert(e.name);
        return oracle_scalar(oracle_lookup(rec, e.name), elem);
    }
    case Expr::Kind::unary: {
        double v = oracle_eval(e.args[0], rec, elem, fns, touched);
        return e.un_op == UnOp::neg ? -v : (v == 0.0 ? 1.0 : 0.0);
    }
    case Expr::Kind::binary: {
        if (e.bin_op == BinOp::logical_and) {
            if (oracle_eval(e.args[0], rec, elem, fns, touched) == 0.0) return 0.0;
            return oracle_eval(e.args[1], rec, elem, fns, touched) != 0.0 ? 1.0 : 0.0;
        }
        if (e.bin_op == BinOp::logical_or) {
            if (oracle_eval(e.args[0], rec, elem, fns, touched) != 0.0) return 1.0;
            return oracle_eval(e.args[1], rec, elem, fns, touched) != 0.0 ? 1.0 : 0.0;
        }
        double a = oracle_eval(e.args[0], rec, elem, fns, touched);
        double b = oracle_eval(e.args[1], rec, elem, fns, touched);
        switch (e.bin_op) {
        case BinOp::add: return a + b;
        case BinOp::sub: return a - b;
        case BinOp::mul: return a * b;
        case BinOp::div: return a / b;
        case BinOp::mod: return std::fmod(a, b);
        case BinOp::eq: return a == b ? 1.0 : 0.0;
        case BinOp::ne: return a != b ? 1.0 : 0.0;
        case BinOp::lt: return a < b ? 1.0 : 0.0;
        case BinOp::le: return a <= b ? 1.0 : 0.0;
        case BinOp::gt: return a > b ? 1.0 : 0.0;
        case BinOp::ge: return a >= b ? 1.0 : 0.0;
        default: break;
        }
        return 0.0;
    }
    case Expr::Kind::call: {
        std::vector<double> args;
        for (const auto& a : e.args) args.push_back(oracle_eval(a, rec, elem, fns, touched));
        return fns.call(e.name, args);
    }
    }
    return 0.0;
}

} // namespace nrt::test

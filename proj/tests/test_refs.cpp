#include <doctest.h>

#include "nrt/container.hpp"
#include "nrt/refs.hpp"
#include "support.hpp"

using namespace nrt;

namespace {

SchemaRegistry point_registry() {
    SchemaRegistry reg;
    reg.register_type(TypeDescriptor::make("Point", 1,
                                           {FieldDescriptor::scalar("x", FieldKind::Float64)}));
    reg.register_type(TypeDescriptor::make("Holder", 1,
                                           {FieldDescriptor::scalar("r", FieldKind::Ref)}));
    return reg;
}

DynamicRecord point(double x) {
    DynamicRecord rec("Point", 1);
    rec.set("x", Value(x));
    return rec;
}

} // namespace

TEST_CASE("uid assignment is idempotent and serial-ordered") {
    RefRegistry reg;
    auto a = point(1);
    auto b = point(2);
    auto c = point(3);

    Uid ua = reg.assign_uid(a);
    CHECK(reg.assign_uid(a) == ua);
    Uid ub = reg.assign_uid(b);
    Uid uc = reg.assign_uid(c);
    CHECK(ua.serial == 1);
    CHECK(ub.serial == 2);
    CHECK(uc.serial == 3);
    CHECK(ua.tag == reg.tag());
}

TEST_CASE("resolution is lazy: absent before load, the record after") {
    RefRegistry writer;
    auto c = point(42);
    writer.assign_uid(c);
    Ref ref = Ref::to(c);

    // a fresh registry has not seen the target yet
    RefRegistry reader(writer.tag());
    CHECK_FALSE(reader.resolve(ref).has_value());

    reader.register_loaded(c);
    auto resolved = reader.resolve(ref);
    REQUIRE(resolved.has_value());
    CHECK(*resolved == c);

    SUBCASE("resolution is monotone") {
        CHECK(*reader.resolve(ref) == c);
        CHECK_NOTHROW(reader.register_loaded(c)); // identical re-registration is a no-op
        CHECK(*reader.resolve(ref) == c);
    }
    SUBCASE("conflicting registration is rejected") {
        auto imposter = point(43);
        imposter.uid = c.uid;
        try {
            reader.register_loaded(imposter);
            FAIL("expected ConflictingRegistration");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::conflicting_registration);
        }
    }
}

TEST_CASE("unset refs resolve to nothing; untagged records cannot be referenced") {
    RefRegistry reg;
    CHECK_FALSE(reg.resolve(Ref{}).has_value());

    auto c = point(1);
    CHECK_THROWS_AS(Ref::to(c), Error);
    try {
        Ref::to(c);
    } catch (const Error& e) {
        CHECK(e.code() == Errc::untagged);
    }
}

TEST_CASE("a ref serializes as exactly 20 bytes regardless of target size") {
    auto schemas = point_registry();
    RefRegistry refs;
    auto big = point(1);
    refs.assign_uid(big);

    DynamicRecord holder("Holder", 1);
    holder.set("r", Value(*big.uid));
    auto bytes = encode_record(holder, schemas);
    CHECK(bytes.size() == 20);
}

TEST_CASE("ref arrays share one process tag") {
    RefRegistry reg;
    auto a = point(1);
    auto b = point(2);
    auto c = point(3);
    reg.assign_uid(a);
    reg.assign_uid(b);
    reg.assign_uid(c);

    RefArray arr;
    arr.append(a);
    arr.append(b);
    arr.append(c);
    CHECK(arr.size() == 3);

    SUBCASE("element resolution is lazy") {
        RefRegistry reader(reg.tag());
        CHECK_FALSE(arr.get(1, reader).has_value());
        reader.register_loaded(b);
        REQUIRE(arr.get(1, reader).has_value());
        CHECK(*arr.get(1, reader) == b);
    }
    SUBCASE("foreign tags are rejected") {
        RefRegistry other(ProcessTag::generate());
        auto d = point(4);
        other.assign_uid(d);
        try {
            arr.append(d);
            FAIL("expected MixedProcessTags");
        } catch (const Error& e) {
            CHECK(e.code() == Errc::mixed_process_tags);
        }
    }
    SUBCASE("record form round-trips") {
        SchemaRegistry schemas;
        auto rec = arr.to_record(schemas);
        auto back = RefArray::from_record(rec);
        CHECK(back.tag() == arr.tag());
        CHECK(back.serials() == arr.serials());
    }
}

TEST_CASE("a shared target is stored once per file and reconnects on read") {
    test::TempDir dir("refs");
    auto schemas = point_registry();
    RefRegistry writer_refs;

    auto target = point(99);
    writer_refs.assign_uid(target);

    {
        auto out = Container::create(dir.file("refs.nrt"));
        for (int i = 0; i < 5; ++i) {
            DynamicRecord holder("Holder", 1);
            holder.set("r", Value(*target.uid));
            out->put("holder" + std::to_string(i), holder, schemas);
        }
        out->put("target", target, schemas);
        out->finalize();
    }

    auto in = Container::open(dir.file("refs.nrt"));

    // exactly one stored payload of the target's type
    int point_keys = 0;
    for (const auto& key : in->list_keys())
        if (key.type_name == "Point") ++point_keys;
    CHECK(point_keys == 1);

    RefRegistry reader_refs(writer_refs.tag());
    in->attach_ref_registry(&reader_refs);

    Ref ref{*target.uid};
    CHECK_FALSE(reader_refs.resolve(ref).has_value()); // target not read yet

    DynamicRecord loaded = in->get("target");
    REQUIRE(loaded.uid.has_value());
    CHECK(*loaded.uid == *target.uid); // identity restored from the file

    auto resolved = reader_refs.resolve(ref);
    REQUIRE(resolved.has_value());
    CHECK(resolved->at("x").as_f64() == 99.0);

    // the holders' refs point at the same uid
    auto h = in->get("holder3");
    CHECK(h.at("r").as_ref() == *target.uid);
}

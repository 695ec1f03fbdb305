#include "nrt/container.hpp"

#include <algorithm>
#include <filesystem>

namespace nrt {

namespace {

constexpr char kMagic[4] = {'N', 'R', 'T', '1'};
constexpr std::string_view kUidMapKey = "nrt.uidmap";

const TypeDescriptor& uid_map_descriptor() {
    static const TypeDescriptor desc = TypeDescriptor::make(
        "nrt.UidMap", 1,
        {FieldDescriptor::sequence("names", "String"),
         FieldDescriptor::sequence("cycles", "Int64"),
         FieldDescriptor::sequence("tags", "String"),
         FieldDescriptor::sequence("serials", "Int64")});
    return desc;
}

const SchemaRegistry& uid_map_registry() {
    static const SchemaRegistry reg = [] {
        SchemaRegistry r;
        r.register_type(uid_map_descriptor());
        return r;
    }();
    return reg;
}

} // namespace

void encode_key(ByteWriter& w, const ObjectKey& key) {
    w.str16(key.name);
    w.u32(key.cycle);
    w.str16(key.type_name);
    w.u32(key.type_version);
    w.u64(key.offset);
    w.u64(key.length);
    w.u8(key.codec);
}

ObjectKey decode_key(ByteReader& r) {
    ObjectKey key;
    key.name = r.str16();
    key.cycle = r.u32();
    key.type_name = r.str16();
    key.type_version = r.u32();
    key.offset = r.u64();
    key.length = r.u64();
    key.codec = r.u8();
    return key;
}

std::string next_overflow_name(const std::string& path, uint32_t index) {
    std::string suffix = "_" + std::to_string(index);
    auto slash = path.find_last_of("/\\");
    std::size_t start = slash == std::string::npos ? 0 : slash + 1;
    auto dot = path.find_last_of('.');
    if (dot == std::string::npos || dot <= start) return path + suffix;
    return path.substr(0, dot) + suffix + path.substr(dot);
}

std::unique_ptr<Container> Container::create(const std::string& path, ContainerOptions options) {
    return create_on(FileStorage::create(path), path, options, 0, path);
}

std::unique_ptr<Container> Container::create_mem(const std::string& name, ContainerOptions options) {
    auto c = create_on(mem_storage(name, true), name, options, 0, name);
    c->is_mem_ = true;
    return c;
}

std::unique_ptr<Container> Container::create_on(std::shared_ptr<Storage> storage, std::string path,
                                                ContainerOptions options, uint32_t overflow_index,
                                                std::string base_path) {
    if (options.max_size && *options.max_size < kMinMaxSize)
        fail(Errc::bad_max_size,
             "max size " + std::to_string(*options.max_size) + " below minimum " +
                 std::to_string(kMinMaxSize));
    auto c = std::unique_ptr<Container>(new Container());
    c->storage_ = std::move(storage);
    c->path_ = std::move(path);
    c->base_path_ = std::move(base_path);
    c->options_ = options;
    c->header_.process_tag = options.process_tag;
    c->overflow_index_ = overflow_index;
    c->writable_ = true;
    c->write_header();
    return c;
}

std::unique_ptr<Container> Container::open(const std::string& path) {
    return open_on(FileStorage::open(path), path);
}

std::unique_ptr<Container> Container::open_mem(const std::string& name) {
    auto c = open_on(mem_storage(name, false), name);
    c->is_mem_ = true;
    return c;
}

std::unique_ptr<Container> Container::open_on(std::shared_ptr<Storage> storage, std::string path) {
    auto c = std::unique_ptr<Container>(new Container());
    c->storage_ = std::move(storage);
    c->path_ = std::move(path);
    c->base_path_ = c->path_;

    if (c->storage_->size() < kHeaderSize) fail(Errc::malformed, "'" + c->path_ + "' too small for header");
    auto hdr = c->storage_->read_block(0, kHeaderSize);
    ByteReader r(hdr);
    auto magic = r.raw(4);
    if (!std::equal(magic.begin(), magic.end(), kMagic))
        fail(Errc::malformed, "'" + c->path_ + "' is not a container file");
    c->header_.format_version = r.u32();
    if (c->header_.format_version != kFormatVersion)
        fail(Errc::malformed, "unsupported format version " + std::to_string(c->header_.format_version));
    c->header_.dir_offset = r.u64();
    auto tag = r.raw(16);
    std::copy(tag.begin(), tag.end(), c->header_.process_tag.bytes.begin());
    if (c->header_.dir_offset == 0) fail(Errc::malformed, "'" + c->path_ + "' was never finalized");
    if (c->header_.dir_offset > c->storage_->size()) fail(Errc::malformed, "key table offset out of range");

    // Every descriptor lives in the data region; one sequential scan makes
    // the file readable with no outside knowledge.
    uint64_t pos = kHeaderSize;
    while (pos < c->header_.dir_offset) {
        auto rec_hdr = c->storage_->read_block(pos, 9);
        ByteReader hr(rec_hdr);
        uint8_t tag_byte = hr.u8();
        uint64_t len = hr.u64();
        if (pos + 9 + len > c->header_.dir_offset) fail(Errc::malformed, "record overruns data region");
        if (tag_byte == kDescriptorTag) {
            auto payload = c->storage_->read_block(pos + 9, len);
            c->schemas_.register_type(decode_descriptor(payload));
        } else if (tag_byte != kValueTag) {
            fail(Errc::malformed, "unknown record tag at offset " + std::to_string(pos));
        }
        pos += 9 + len;
    }

    auto table_hdr = c->storage_->read_block(c->header_.dir_offset, 5);
    ByteReader tr(table_hdr);
    if (tr.u8() != kKeyTableTag) fail(Errc::malformed, "missing key table");
    uint32_t count = tr.u32();
    auto table = c->storage_->read_block(c->header_.dir_offset + 5,
                                         c->storage_->size() - c->header_.dir_offset - 5);
    ByteReader kr(table);
    for (uint32_t i = 0; i < count; ++i) {
        ObjectKey key = decode_key(kr);
        if (key.offset + key.length > c->storage_->size())
            fail(Errc::malformed, "key '" + key.name + "' points outside the file");
        auto& cyc = c->next_cycle_[key.name];
        cyc = std::max(cyc, key.cycle);
        c->keys_.push_back(std::move(key));
    }

    c->finalized_ = true;
    c->load_uid_map();
    return c;
}

void Container::write_header() {
    ByteWriter w;
    w.bytes(kMagic, 4);
    w.u32(header_.format_version);
    w.u64(header_.dir_offset);
    w.bytes(header_.process_tag.bytes.data(), header_.process_tag.bytes.size());
    storage_->write_at(0, w.data());
}

void Container::write_descriptor_record(const TypeDescriptor& desc) {
    auto payload = encode_descriptor(desc);
    ByteWriter w;
    w.u8(kDescriptorTag);
    w.u64(payload.size());
    w.bytes(payload);
    storage_->append(w.data());
    schemas_written_.insert({desc.name(), desc.version()});
    schemas_.register_type(desc);
}

void Container::ensure_descriptors(const TypeDescriptor& desc, const SchemaRegistry& registry) {
    if (schemas_written_.count({desc.name(), desc.version()})) return;

    // Base first so a sequential reader can re-register in file order.
    if (!desc.base().empty()) {
        const TypeDescriptor* base = registry.find_latest(desc.base());
        if (!base) fail(Errc::unknown_base, "base '" + desc.base() + "' not registered");
        ensure_descriptors(*base, registry);
    }
    for (const auto& f : desc.fields()) {
        if (f.element.empty() || primitive_kind_from_name(f.element)) continue;
        const TypeDescriptor* elem = registry.find_latest(f.element);
        if (!elem)
            fail(Errc::unknown_element_type,
                 "element type '" + f.element + "' of field '" + f.name + "' not registered");
        ensure_descriptors(*elem, registry);
    }
    if (!schemas_written_.count({desc.name(), desc.version()})) write_descriptor_record(desc);
}

void Container::write_schema(const TypeDescriptor& desc, const SchemaRegistry& registry) {
    if (!writable_ || finalized_) fail(Errc::io_failure, "container '" + path_ + "' is not writable");
    ensure_descriptors(desc, registry);
}

ObjectKey Container::put(std::string_view name, const DynamicRecord& record,
                         const SchemaRegistry& registry) {
    if (!writable_ || finalized_) fail(Errc::io_failure, "container '" + path_ + "' is not writable");
    const TypeDescriptor* desc = registry.find(record.type_name, record.type_version);
    if (!desc)
        fail(Errc::unknown_type, "type '" + record.type_name + "' v" +
                                     std::to_string(record.type_version) + " not registered");
    ensure_descriptors(*desc, registry);

    auto payload = encode_record(record, schemas_);
    ByteWriter w;
    w.u8(kValueTag);
    w.u64(payload.size());
    w.bytes(payload);
    uint64_t offset = storage_->append(w.data());

    ObjectKey key;
    key.name = std::string(name);
    key.cycle = ++next_cycle_[key.name];
    key.type_name = record.type_name;
    key.type_version = record.type_version;
    key.offset = offset;
    key.length = w.size();
    keys_.push_back(key);

    if (record.uid && record.uid->is_set()) {
        uid_entries_.push_back({key.name, key.cycle, *record.uid});
        uid_by_key_[{key.name, key.cycle}] = *record.uid;
    }
    return key;
}

const ObjectKey* Container::find_key(std::string_view name, std::optional<uint32_t> cycle) const {
    const ObjectKey* best = nullptr;
    for (const auto& key : keys_) {
        if (key.name != name) continue;
        if (cycle) {
            if (key.cycle == *cycle) return &key;
        } else if (!best || key.cycle > best->cycle) {
            best = &key;
        }
    }
    return best;
}

DynamicRecord Container::get(std::string_view name, std::optional<uint32_t> cycle) const {
    const ObjectKey* key = find_key(name, cycle);
    if (!key) fail(Errc::not_found, "no key '" + std::string(name) + "' in '" + path_ + "'");

    auto block = storage_->read_block(key->offset, key->length);
    ByteReader r(block);
    if (r.u8() != kValueTag) fail(Errc::malformed, "key '" + key->name + "' does not point at a value record");
    uint64_t len = r.u64();
    if (len + 9 != key->length) fail(Errc::malformed, "value record length disagrees with key");
    auto payload = r.raw(len);

    const TypeDescriptor& desc = schemas_.get(key->type_name, key->type_version);
    DynamicRecord rec = read_emulated(payload, desc, schemas_);

    if (auto it = uid_by_key_.find({key->name, key->cycle}); it != uid_by_key_.end()) {
        rec.uid = it->second;
        if (ref_registry_) ref_registry_->register_loaded(rec);
    }
    return rec;
}

const TypeDescriptor* Container::find_type(std::string_view name,
                                           std::optional<uint32_t> version) const {
    return version ? schemas_.find(name, *version) : schemas_.find_latest(name);
}

void Container::write_uid_map() {
    if (uid_entries_.empty()) return;
    DynamicRecord rec("nrt.UidMap", 1);
    Value::List names, cycles, tags, serials;
    for (const auto& e : uid_entries_) {
        names.push_back(Value(e.name));
        cycles.push_back(Value(static_cast<int64_t>(e.cycle)));
        tags.push_back(Value(e.uid.tag.hex()));
        serials.push_back(Value(static_cast<int64_t>(e.uid.serial)));
    }
    rec.set("names", Value(std::move(names)));
    rec.set("cycles", Value(std::move(cycles)));
    rec.set("tags", Value(std::move(tags)));
    rec.set("serials", Value(std::move(serials)));
    put(kUidMapKey, rec, uid_map_registry());
}

void Container::load_uid_map() {
    if (!find_key(kUidMapKey)) return;
    DynamicRecord rec = get(kUidMapKey);
    const auto& names = rec.at("names").as_list();
    const auto& cycles = rec.at("cycles").as_list();
    const auto& tags = rec.at("tags").as_list();
    const auto& serials = rec.at("serials").as_list();
    if (names.size() != cycles.size() || names.size() != tags.size() || names.size() != serials.size())
        fail(Errc::malformed, "uid map arrays disagree in length");
    for (std::size_t i = 0; i < names.size(); ++i) {
        auto tag = ProcessTag::from_hex(tags[i].as_string());
        if (!tag) fail(Errc::malformed, "invalid process tag in uid map");
        Uid uid{*tag, static_cast<uint32_t>(serials[i].as_int())};
        uid_by_key_[{names[i].as_string(), static_cast<uint32_t>(cycles[i].as_int())}] = uid;
    }
}

void Container::finalize() {
    if (finalized_) return;
    if (!writable_) fail(Errc::io_failure, "container '" + path_ + "' is not writable");
    write_uid_map();

    header_.dir_offset = storage_->size();
    ByteWriter w;
    w.u8(kKeyTableTag);
    w.u32(static_cast<uint32_t>(keys_.size()));
    for (const auto& key : keys_) encode_key(w, key);
    storage_->append(w.data());
    write_header();
    storage_->flush();
    finalized_ = true;
    writable_ = false;
}

std::unique_ptr<Container> Container::maybe_rollover() {
    if (!options_.max_size) return nullptr;
    if (physical_size() <= *options_.max_size) return nullptr;
    finalize();
    uint32_t next_index = overflow_index_ + 1;
    std::string next_path = next_overflow_name(base_path_, next_index);
    std::unique_ptr<Container> next;
    if (is_mem_) {
        next = create_on(mem_storage(next_path, true), next_path, options_, next_index, base_path_);
        next->is_mem_ = true;
    } else {
        next = create_on(FileStorage::create(next_path), next_path, options_, next_index, base_path_);
    }
    next->ref_registry_ = ref_registry_;
    return next;
}

ContainerChain ContainerChain::open(const std::vector<std::string>& paths) {
    ContainerChain chain;
    for (const auto& p : paths) chain.add(Container::open(p));
    return chain;
}

ContainerChain ContainerChain::open_family(const std::string& first) {
    ContainerChain chain;
    chain.add(Container::open(first));
    for (uint32_t i = 1;; ++i) {
        std::string p = next_overflow_name(first, i);
        if (!std::filesystem::exists(p)) break;
        chain.add(Container::open(p));
    }
    return chain;
}

void ContainerChain::add(std::unique_ptr<Container> part) {
    parts_.push_back(std::move(part));
}

const Container* ContainerChain::owner_of(std::string_view name, std::optional<uint32_t> cycle) const {
    const Container* best = nullptr;
    const ObjectKey* best_key = nullptr;
    for (const auto& part : parts_) {
        const ObjectKey* key = part->find_key(name, cycle);
        if (!key) continue;
        if (cycle) return part.get();
        if (!best_key || key->cycle > best_key->cycle) {
            best = part.get();
            best_key = key;
        }
    }
    return best;
}

const ObjectKey* ContainerChain::find_key(std::string_view name, std::optional<uint32_t> cycle) const {
    const Container* owner = owner_of(name, cycle);
    return owner ? owner->find_key(name, cycle) : nullptr;
}

DynamicRecord ContainerChain::get(std::string_view name, std::optional<uint32_t> cycle) const {
    const Container* owner = owner_of(name, cycle);
    if (!owner) fail(Errc::not_found, "no key '" + std::string(name) + "' in chain");
    return owner->get(name, cycle);
}

std::vector<ObjectKey> ContainerChain::list_keys() const {
    std::vector<ObjectKey> out;
    for (const auto& part : parts_) {
        auto keys = part->list_keys();
        out.insert(out.end(), keys.begin(), keys.end());
    }
    return out;
}

const TypeDescriptor* ContainerChain::find_type(std::string_view name,
                                                std::optional<uint32_t> version) const {
    for (const auto& part : parts_) {
        if (const TypeDescriptor* d = part->find_type(name, version)) return d;
    }
    return nullptr;
}

std::vector<const TypeDescriptor*> ContainerChain::all_types() const {
    std::vector<const TypeDescriptor*> out;
    std::set<std::pair<std::string, uint32_t>> seen;
    for (const auto& part : parts_) {
        for (const TypeDescriptor* d : part->all_types()) {
            if (seen.insert({d->name(), d->version()}).second) out.push_back(d);
        }
    }
    return out;
}

void ContainerChain::attach_ref_registry(RefRegistry* registry) {
    for (auto& part : parts_) part->attach_ref_registry(registry);
}

RolloverSink::RolloverSink(std::unique_ptr<Container> first) : current_(std::move(first)) {}

ObjectKey RolloverSink::put(std::string_view name, const DynamicRecord& record,
                            const SchemaRegistry& registry) {
    ObjectKey key = current_->put(name, record, registry);
    if (auto next = current_->maybe_rollover()) {
        finalized_paths_.push_back(current_->path());
        current_ = std::move(next);
    }
    return key;
}

void RolloverSink::finalize() {
    current_->finalize();
}

std::vector<std::string> RolloverSink::family_paths() const {
    std::vector<std::string> out = finalized_paths_;
    out.push_back(current_->path());
    return out;
}

} // namespace nrt

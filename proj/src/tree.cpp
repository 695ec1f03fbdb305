#include "nrt/tree.hpp"

#include <algorithm>

namespace nrt {

namespace {

std::string join_path(std::span<const std::string> path) {
    std::string out;
    for (const auto& p : path) {
        if (!out.empty()) out += '.';
        out += p;
    }
    return out;
}

std::vector<std::string> split_name(std::string_view name) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (start <= name.size()) {
        auto dot = name.find('.', start);
        if (dot == std::string_view::npos) {
            out.emplace_back(name.substr(start));
            break;
        }
        out.emplace_back(name.substr(start, dot - start));
        start = dot + 1;
    }
    return out;
}

void emit_fields(const TypeDescriptor& desc, std::vector<std::string>& prefix, uint32_t budget,
                 const SchemaRegistry& registry, std::vector<BranchLayout>& out) {
    for (const auto& f : registry.flattened_fields(desc)) {
        prefix.push_back(f.name);
        std::string name = join_path(prefix);
        switch (f.kind) {
        case FieldKind::Int64:
        case FieldKind::Float64:
        case FieldKind::Bool:
        case FieldKind::String:
        case FieldKind::Ref:
        case FieldKind::FixedArray:
            out.push_back({name, prefix, BranchRole::leaf, f, std::nullopt, ""});
            break;
        case FieldKind::Composite: {
            if (budget > 0) {
                const TypeDescriptor& elem = registry.get_latest(f.element);
                emit_fields(elem, prefix, budget - 1, registry, out);
            } else {
                out.push_back({name, prefix, BranchRole::unsplit_composite, f, std::nullopt, ""});
            }
            break;
        }
        case FieldKind::Sequence: {
            if (primitive_kind_from_name(f.element) || budget == 0) {
                out.push_back({name, prefix, BranchRole::leaf, f, std::nullopt, ""});
                break;
            }
            const TypeDescriptor& elem = registry.get_latest(f.element);
            std::string axis_name = name + "_n";
            out.push_back({axis_name, prefix, BranchRole::collection_axis,
                           FieldDescriptor::scalar(f.name + "_n", FieldKind::Int64), std::nullopt, ""});
            for (const auto& m : registry.flattened_fields(elem)) {
                prefix.push_back(m.name);
                out.push_back({join_path(prefix), prefix, BranchRole::collection_member, f, m,
                               axis_name});
                prefix.pop_back();
            }
            break;
        }
        }
        prefix.pop_back();
    }
}

} // namespace

std::vector<BranchLayout> split(const TypeDescriptor& desc, uint32_t level,
                                const SchemaRegistry& registry) {
    if (!registry.has(desc.name(), desc.version()))
        fail(Errc::unknown_type, "type '" + desc.name() + "' not registered");
    std::vector<BranchLayout> out;
    if (level == 0) {
        out.push_back({desc.name(),
                       {},
                       BranchRole::whole_record,
                       FieldDescriptor{"value", FieldKind::Composite, desc.name(), 0},
                       std::nullopt,
                       ""});
        return out;
    }
    std::vector<std::string> prefix;
    emit_fields(desc, prefix, level - 1, registry, out);
    return out;
}

namespace {

Value project_value(const Value& v, std::span<const std::string> rest) {
    if (rest.empty()) return v;
    if (v.is_record()) {
        const Value* f = v.as_record().find(rest[0]);
        if (!f) fail(Errc::no_such_branch, "no field '" + rest[0] + "' along path");
        return project_value(*f, rest.subspan(1));
    }
    if (v.is_list()) {
        Value::List out;
        out.reserve(v.as_list().size());
        for (const auto& e : v.as_list()) out.push_back(project_value(e, rest));
        return Value(std::move(out));
    }
    fail(Errc::no_such_branch, "path descends into a scalar at '" + rest[0] + "'");
}

void encode_branch_entry(ByteWriter& w, const BranchLayout& layout, const Value& v,
                         const SchemaRegistry& registry) {
    if (layout.role == BranchRole::collection_member) {
        const auto& list = v.as_list();
        w.u32(static_cast<uint32_t>(list.size()));
        for (const auto& e : list) encode_value(w, e, *layout.member_field, registry);
        return;
    }
    encode_value(w, v, layout.payload_field, registry);
}

Value decode_branch_entry(ByteReader& r, const BranchLayout& layout, const SchemaRegistry& registry) {
    if (layout.role == BranchRole::collection_member) {
        uint32_t n = r.u32();
        Value::List list;
        list.reserve(n);
        for (uint32_t i = 0; i < n; ++i) list.push_back(decode_value(r, *layout.member_field, registry));
        return Value(std::move(list));
    }
    return decode_value(r, layout.payload_field, registry);
}

const SchemaRegistry& meta_registry() {
    static const SchemaRegistry reg = [] {
        SchemaRegistry r;
        r.register_type(basket_descriptor());
        r.register_type(branch_meta_descriptor());
        r.register_type(tree_meta_descriptor());
        return r;
    }();
    return reg;
}

} // namespace

Value project_path(const DynamicRecord& record, std::span<const std::string> path) {
    if (path.empty()) return Value(make_record_ptr(DynamicRecord(record)));
    const Value* v = record.find(path[0]);
    if (!v) fail(Errc::no_such_branch, "record has no field '" + path[0] + "'");
    return project_value(*v, path.subspan(1));
}

const TypeDescriptor& basket_descriptor() {
    static const TypeDescriptor desc = TypeDescriptor::make(
        "nrt.Basket", 1,
        {FieldDescriptor::scalar("first_entry", FieldKind::Int64),
         FieldDescriptor::scalar("count", FieldKind::Int64),
         FieldDescriptor::scalar("payload", FieldKind::String)});
    return desc;
}

const TypeDescriptor& branch_meta_descriptor() {
    static const TypeDescriptor desc = TypeDescriptor::make(
        "nrt.BranchMeta", 1,
        {FieldDescriptor::scalar("name", FieldKind::String),
         FieldDescriptor::scalar("axis", FieldKind::String),
         FieldDescriptor::sequence("basket_keys", "String")});
    return desc;
}

const TypeDescriptor& tree_meta_descriptor() {
    static const TypeDescriptor desc = TypeDescriptor::make(
        "nrt.TreeMeta", 1,
        {FieldDescriptor::scalar("name", FieldKind::String),
         FieldDescriptor::scalar("type_name", FieldKind::String),
         FieldDescriptor::scalar("split_level", FieldKind::Int64),
         FieldDescriptor::scalar("entries", FieldKind::Int64),
         FieldDescriptor::sequence("branches", "nrt.BranchMeta")});
    return desc;
}

TreeWriter::TreeWriter(RolloverSink& sink, std::string name, const TypeDescriptor& desc,
                       uint32_t split_level, const SchemaRegistry& registry,
                       uint32_t basket_capacity)
    : sink_(sink),
      name_(std::move(name)),
      registry_(registry),
      desc_(desc),
      split_level_(split_level),
      basket_capacity_(basket_capacity) {
    if (basket_capacity_ == 0) fail(Errc::malformed, "basket capacity must be positive");
    layouts_ = split(desc_, split_level_, registry_);
    branches_.reserve(layouts_.size());
    for (const auto& layout : layouts_) branches_.push_back({layout, {}, {}});
}

uint64_t TreeWriter::fill(const DynamicRecord& record) {
    if (finalized_) fail(Errc::io_failure, "tree '" + name_ + "' already finalized");
    if (record.type_name != desc_.name() || record.type_version != desc_.version())
        fail(Errc::type_mismatch, "tree '" + name_ + "' stores '" + desc_.name() + "' v" +
                                      std::to_string(desc_.version()) + ", got '" + record.type_name +
                                      "' v" + std::to_string(record.type_version));

    // Stage every branch first so a bad record cannot leave a partial entry.
    std::vector<ByteWriter> staged(branches_.size());
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        const auto& layout = branches_[i].layout;
        Value v = layout.role == BranchRole::whole_record
                      ? Value(make_record_ptr(DynamicRecord(record)))
                      : project_path(record, layout.path);
        if (layout.role == BranchRole::collection_axis)
            v = Value(static_cast<int64_t>(v.as_list().size()));
        encode_branch_entry(staged[i], layout, v, registry_);
    }
    for (std::size_t i = 0; i < branches_.size(); ++i) {
        auto& b = branches_[i];
        b.open.buf.bytes(staged[i].data());
        b.open.count += 1;
    }
    uint64_t index = entries_++;
    for (auto& b : branches_) {
        if (b.open.count >= basket_capacity_) flush_branch(b);
    }
    return index;
}

void TreeWriter::flush_branch(WriterBranch& b) {
    if (b.open.count == 0) return;
    // The payload type must be decodable from whichever file this basket
    // lands in; rollover may have switched files since the last flush.
    sink_.container().write_schema(desc_, registry_);
    DynamicRecord basket("nrt.Basket", 1);
    basket.set("first_entry", Value(static_cast<int64_t>(b.open.first_entry)));
    basket.set("count", Value(static_cast<int64_t>(b.open.count)));
    auto& bytes = b.open.buf.data();
    basket.set("payload", Value(std::string(reinterpret_cast<const char*>(bytes.data()), bytes.size())));
    std::string key = name_ + "/" + b.layout.name + "/" + std::to_string(b.basket_keys.size());
    sink_.put(key, basket, meta_registry());
    b.basket_keys.push_back(key);
    b.open = OpenBasket{};
    b.open.first_entry = entries_;
}

void TreeWriter::finalize() {
    if (finalized_) return;
    for (auto& b : branches_) flush_branch(b);

    DynamicRecord meta("nrt.TreeMeta", 1);
    meta.set("name", Value(name_));
    meta.set("type_name", Value(desc_.name()));
    meta.set("split_level", Value(static_cast<int64_t>(split_level_)));
    meta.set("entries", Value(static_cast<int64_t>(entries_)));
    Value::List branch_metas;
    for (const auto& b : branches_) {
        DynamicRecord bm("nrt.BranchMeta", 1);
        bm.set("name", Value(b.layout.name));
        bm.set("axis", Value(b.layout.axis));
        Value::List keys;
        for (const auto& k : b.basket_keys) keys.push_back(Value(k));
        bm.set("basket_keys", Value(std::move(keys)));
        branch_metas.push_back(Value(std::move(bm)));
    }
    meta.set("branches", Value(std::move(branch_metas)));

    // Cover the tail file even when no basket landed there.
    sink_.container().write_schema(desc_, registry_);
    sink_.put(name_, meta, meta_registry());
    finalized_ = true;
}

TreeWriter branches_from_collection(RolloverSink& sink, std::string name,
                                    std::span<const DynamicRecord> records, uint32_t split_level,
                                    const SchemaRegistry& registry, uint32_t basket_capacity) {
    if (records.empty()) fail(Errc::empty_collection, "cannot infer a tree type from zero records");
    const auto& first = records.front();
    for (const auto& r : records) {
        if (r.type_name != first.type_name || r.type_version != first.type_version)
            fail(Errc::heterogeneous, "collection mixes '" + first.type_name + "' and '" +
                                          r.type_name + "'");
    }
    const TypeDescriptor* desc = registry.find(first.type_name, first.type_version);
    if (!desc)
        fail(Errc::unknown_type, "type '" + first.type_name + "' not registered");
    TreeWriter tree(sink, std::move(name), *desc, split_level, registry, basket_capacity);
    for (const auto& r : records) tree.fill(r);
    return tree;
}

uint64_t ReadCursor::loads(std::string_view branch) const {
    auto it = loads_.find(std::string(branch));
    return it == loads_.end() ? 0 : it->second;
}

uint64_t ReadCursor::total_loads() const {
    uint64_t total = 0;
    for (const auto& [k, v] : loads_) total += v;
    return total;
}

void ReadCursor::reset() {
    cache_.clear();
    loads_.clear();
}

Tree Tree::open(const ObjectSource& source, std::string_view name) {
    DynamicRecord meta = source.get(name);
    if (meta.type_name != "nrt.TreeMeta")
        fail(Errc::not_found, "key '" + std::string(name) + "' is not a tree");

    Tree t;
    t.source_ = &source;
    t.name_ = meta.at("name").as_string();
    t.entries_ = static_cast<uint64_t>(meta.at("entries").as_int());
    t.split_level_ = static_cast<uint32_t>(meta.at("split_level").as_int());

    // Snapshot every descriptor of the source; bases may arrive after the
    // types that use them, so retry until the registry accepts them all.
    std::vector<const TypeDescriptor*> pending = source.all_types();
    while (!pending.empty()) {
        std::vector<const TypeDescriptor*> next;
        for (const TypeDescriptor* d : pending) {
            try {
                t.schemas_.register_type(*d);
            } catch (const Error& e) {
                if (e.code() != Errc::unknown_base) throw;
                next.push_back(d);
            }
        }
        if (next.size() == pending.size())
            fail(Errc::unknown_base, "unresolvable base chain in file schemas");
        pending = std::move(next);
    }

    const std::string& type_name = meta.at("type_name").as_string();
    const TypeDescriptor* desc = t.schemas_.find_latest(type_name);
    if (!desc) fail(Errc::malformed, "tree type '" + type_name + "' missing from file schemas");
    t.desc_ = *desc;

    auto layouts = split(t.desc_, t.split_level_, t.schemas_);
    const auto& branch_metas = meta.at("branches").as_list();
    if (branch_metas.size() != layouts.size())
        fail(Errc::malformed, "tree '" + t.name_ + "' branch list disagrees with split layout");
    for (std::size_t i = 0; i < layouts.size(); ++i) {
        const DynamicRecord& bm = branch_metas[i].as_record();
        if (bm.at("name").as_string() != layouts[i].name)
            fail(Errc::malformed, "branch '" + layouts[i].name + "' missing from tree metadata");
        if (bm.at("axis").as_string() != layouts[i].axis)
            fail(Errc::malformed, "branch '" + layouts[i].name + "' axis disagrees");
        BranchInfo info{layouts[i], {}};
        for (const auto& k : bm.at("basket_keys").as_list()) info.basket_keys.push_back(k.as_string());
        t.branches_.push_back(std::move(info));
    }
    return t;
}

const Tree::BranchInfo* Tree::find_branch(std::string_view name) const {
    for (const auto& b : branches_)
        if (b.layout.name == name) return &b;
    return nullptr;
}

const ReadCursor::DecodedBasket& Tree::basket_for(const BranchInfo& b, uint64_t index,
                                                  ReadCursor& cursor) const {
    auto& cache = cursor.cache_[b.layout.name];
    for (const auto& basket : cache.baskets) {
        if (index >= basket.first && index < basket.first + basket.count) return basket;
    }
    while (cache.next_key < b.basket_keys.size()) {
        const std::string& key = b.basket_keys[cache.next_key++];
        DynamicRecord rec = source_->get(key);
        cursor.loads_[b.layout.name] += 1;

        ReadCursor::DecodedBasket basket;
        basket.first = static_cast<uint64_t>(rec.at("first_entry").as_int());
        basket.count = static_cast<uint32_t>(rec.at("count").as_int());
        const std::string& payload = rec.at("payload").as_string();
        ByteReader r(std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(payload.data()),
                                              payload.size()));
        basket.values.reserve(basket.count);
        for (uint32_t k = 0; k < basket.count; ++k)
            basket.values.push_back(decode_branch_entry(r, b.layout, schemas_));
        if (!r.at_end()) fail(Errc::malformed, "basket '" + key + "' has trailing bytes");
        cache.baskets.push_back(std::move(basket));
        const auto& added = cache.baskets.back();
        if (index >= added.first && index < added.first + added.count) return added;
    }
    fail(Errc::out_of_range, "entry " + std::to_string(index) + " not covered by branch '" +
                                 b.layout.name + "'");
}

Value Tree::raw_branch_value(const BranchInfo& b, uint64_t index, ReadCursor& cursor) const {
    const auto& basket = basket_for(b, index, cursor);
    return basket.values[index - basket.first];
}

std::vector<uint32_t> Tree::basket_counts(std::string_view branch, ReadCursor* cursor) const {
    const BranchInfo* b = find_branch(branch);
    if (!b) fail(Errc::no_such_branch, "no branch '" + std::string(branch) + "'");
    ReadCursor& cur = cursor ? *cursor : default_cursor_;
    if (entries_ > 0) (void)basket_for(*b, entries_ - 1, cur); // force-load all
    std::vector<uint32_t> counts;
    for (const auto& basket : cur.cache_[b->layout.name].baskets) counts.push_back(basket.count);
    return counts;
}

DynamicRecord Tree::reassemble(const TypeDescriptor& desc, const std::vector<std::string>& prefix,
                               uint64_t index, ReadCursor& cursor) const {
    for (const auto& b : branches_) {
        if ((b.layout.role == BranchRole::whole_record ||
             b.layout.role == BranchRole::unsplit_composite) &&
            b.layout.path == prefix) {
            return DynamicRecord(raw_branch_value(b, index, cursor).as_record());
        }
    }

    DynamicRecord rec(desc.name(), desc.version());
    for (const auto& f : schemas_.flattened_fields(desc)) {
        std::vector<std::string> path = prefix;
        path.push_back(f.name);
        std::string name = join_path(path);
        if (const BranchInfo* b = find_branch(name)) {
            if (b->layout.role == BranchRole::unsplit_composite) {
                rec.set(f.name, Value(make_record_ptr(
                                    DynamicRecord(raw_branch_value(*b, index, cursor).as_record()))));
            } else {
                rec.set(f.name, raw_branch_value(*b, index, cursor));
            }
            continue;
        }
        if (f.kind == FieldKind::Composite) {
            const TypeDescriptor& elem = schemas_.get_latest(f.element);
            rec.set(f.name, Value(make_record_ptr(reassemble(elem, path, index, cursor))));
            continue;
        }
        if (f.kind == FieldKind::Sequence && find_branch(name + "_n")) {
            const BranchInfo* axis = find_branch(name + "_n");
            auto n = static_cast<uint64_t>(raw_branch_value(*axis, index, cursor).as_int());
            const TypeDescriptor& elem = schemas_.get_latest(f.element);
            auto members = schemas_.flattened_fields(elem);
            std::vector<Value::List> columns;
            columns.reserve(members.size());
            for (const auto& m : members) {
                const BranchInfo* mb = find_branch(name + "." + m.name);
                if (!mb) fail(Errc::malformed, "member branch '" + name + "." + m.name + "' missing");
                columns.push_back(raw_branch_value(*mb, index, cursor).as_list());
            }
            Value::List elements;
            elements.reserve(n);
            for (uint64_t j = 0; j < n; ++j) {
                DynamicRecord e(elem.name(), elem.version());
                for (std::size_t mi = 0; mi < members.size(); ++mi) {
                    if (j >= columns[mi].size())
                        fail(Errc::malformed, "member column shorter than axis count");
                    e.set(members[mi].name, columns[mi][j]);
                }
                elements.push_back(Value(std::move(e)));
            }
            rec.set(f.name, Value(std::move(elements)));
            continue;
        }
        fail(Errc::malformed, "no branch covers field path '" + name + "'");
    }
    return rec;
}

DynamicRecord Tree::get_entry(uint64_t index, ReadCursor* cursor) const {
    if (index >= entries_)
        fail(Errc::out_of_range, "entry " + std::to_string(index) + " of " + std::to_string(entries_));
    ReadCursor& cur = cursor ? *cursor : default_cursor_;
    return reassemble(desc_, {}, index, cur);
}

Value Tree::read_branch(std::string_view branch, uint64_t index, ReadCursor* cursor) const {
    if (index >= entries_)
        fail(Errc::out_of_range, "entry " + std::to_string(index) + " of " + std::to_string(entries_));
    ReadCursor& cur = cursor ? *cursor : default_cursor_;

    if (const BranchInfo* b = find_branch(branch)) return raw_branch_value(*b, index, cur);

    // A coarser physical branch may cover the requested path.
    auto components = split_name(branch);
    const BranchInfo* best = nullptr;
    for (const auto& b : branches_) {
        if (b.layout.role == BranchRole::collection_axis) continue;
        if (b.layout.path.size() >= components.size()) continue;
        bool prefix = std::equal(b.layout.path.begin(), b.layout.path.end(), components.begin());
        if (!prefix) continue;
        if (!best || b.layout.path.size() > best->layout.path.size()) best = &b;
    }
    // "<path>_n" works wherever "<path>" is list-valued, split or not, and
    // loses to a real field of that name inside a covering branch.
    auto count_fallback = [&]() -> std::optional<Value> {
        if (branch.size() > 2 && branch.substr(branch.size() - 2) == "_n") {
            try {
                Value v = read_branch(branch.substr(0, branch.size() - 2), index, cursor);
                if (v.is_list()) return Value(static_cast<int64_t>(v.as_list().size()));
            } catch (const Error& e) {
                if (e.code() != Errc::no_such_branch) throw;
            }
        }
        return std::nullopt;
    };

    if (best) {
        Value v = raw_branch_value(*best, index, cur);
        std::span<const std::string> rest(components);
        rest = rest.subspan(best->layout.path.size());
        try {
            return project_value(v, rest);
        } catch (const Error& e) {
            if (e.code() != Errc::no_such_branch) throw;
            if (auto count = count_fallback()) return *count;
            throw;
        }
    }
    if (auto count = count_fallback()) return *count;
    fail(Errc::no_such_branch, "no branch '" + std::string(branch) + "' in tree '" + name_ + "'");
}

Tree::PathShape Tree::classify_path(std::string_view branch) const {
    auto resolve = [&](std::string_view name) -> PathShape {
        auto components = split_name(name);
        const TypeDescriptor* cur = &desc_;
        PathShape shape;
        std::string walked;
        for (std::size_t i = 0; i < components.size(); ++i) {
            const auto& comp = components[i];
            if (!walked.empty()) walked += '.';
            walked += comp;
            const FieldDescriptor* field = nullptr;
            auto fields = schemas_.flattened_fields(*cur);
            for (const auto& f : fields)
                if (f.name == comp) field = &f;
            if (!field) fail(Errc::no_such_branch, "no field '" + walked + "'");
            bool last = i + 1 == components.size();
            switch (field->kind) {
            case FieldKind::Sequence:
            case FieldKind::FixedArray:
                if (!shape.is_list) {
                    shape.is_list = true;
                    shape.axis = walked;
                }
                if (!last) {
                    if (primitive_kind_from_name(field->element))
                        fail(Errc::no_such_branch, "path descends into primitive elements at '" + walked + "'");
                    cur = &schemas_.get_latest(field->element);
                }
                break;
            case FieldKind::Composite:
                if (!last) cur = &schemas_.get_latest(field->element);
                break;
            default:
                if (!last) fail(Errc::no_such_branch, "path descends into a scalar at '" + walked + "'");
                break;
            }
        }
        return shape;
    };

    // The count pseudo-branch of a list path is scalar.
    if (branch.size() > 2 && branch.substr(branch.size() - 2) == "_n") {
        std::string base(branch.substr(0, branch.size() - 2));
        try {
            PathShape s = resolve(base);
            if (s.is_list && s.axis == base) return PathShape{false, ""};
        } catch (const Error&) {
            // fall through: maybe a real field is named *_n
        }
    }
    return resolve(branch);
}

} // namespace nrt

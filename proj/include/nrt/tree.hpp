#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nrt/container.hpp"
#include "nrt/record.hpp"
#include "nrt/schema.hpp"

namespace nrt {

enum class BranchRole : uint8_t {
    whole_record,       // level 0: one branch holds complete records
    leaf,               // primitive / String / Ref / FixedArray / unsplit Sequence
    unsplit_composite,  // composite kept whole because depth ran out
    collection_axis,    // per-entry element count of a split sequence
    collection_member,  // per-entry value list of one member of a split sequence
};

// Static description of one branch produced by the split algorithm.
struct BranchLayout {
    std::string name;               // dotted field path
    std::vector<std::string> path;  // path components through the root type
    BranchRole role = BranchRole::leaf;

    // Per-entry payload shape. For collection members the payload is
    // u32 count + one `member_field` encoding per element; for everything
    // else it is a single `payload_field` encoding.
    FieldDescriptor payload_field;
    std::optional<FieldDescriptor> member_field;

    std::string axis; // governing axis branch name, empty when none

    bool operator==(const BranchLayout&) const = default;
};

// Decomposes a type into branches. Level 0 keeps whole records in a single
// branch; deeper levels flatten inheritance, expand composites one depth
// unit at a time, and turn sequences of composites into a count branch plus
// per-member leaf branches. Deterministic in declaration order; requesting
// more depth than the type offers saturates.
std::vector<BranchLayout> split(const TypeDescriptor& desc, uint32_t level,
                                const SchemaRegistry& registry);

// Walks a record along a field path. Crossing a list maps the remaining
// path over its elements.
Value project_path(const DynamicRecord& record, std::span<const std::string> path);

constexpr uint32_t kDefaultBasketCapacity = 1000;

// Write side. Branch baskets buffer `basket_capacity` entries, flush to the
// sink as keyed records, and the sink's size threshold is checked after
// every flush. finalize() writes the tree metadata record under the tree's
// name.
class TreeWriter {
public:
    TreeWriter(RolloverSink& sink, std::string name, const TypeDescriptor& desc,
               uint32_t split_level, const SchemaRegistry& registry,
               uint32_t basket_capacity = kDefaultBasketCapacity);

    // Appends one record; returns its entry index.
    uint64_t fill(const DynamicRecord& record);

    void finalize();

    const std::string& name() const { return name_; }
    uint64_t entries() const { return entries_; }
    uint32_t split_level() const { return split_level_; }
    const std::vector<BranchLayout>& branches() const { return layouts_; }

private:
    struct OpenBasket {
        uint64_t first_entry = 0;
        uint32_t count = 0;
        ByteWriter buf;
    };
    struct WriterBranch {
        BranchLayout layout;
        OpenBasket open;
        std::vector<std::string> basket_keys;
    };

    void flush_branch(WriterBranch& b);

    RolloverSink& sink_;
    std::string name_;
    const SchemaRegistry& registry_;
    TypeDescriptor desc_;
    uint32_t split_level_;
    uint32_t basket_capacity_;
    uint64_t entries_ = 0;
    std::vector<BranchLayout> layouts_;
    std::vector<WriterBranch> branches_;
    bool finalized_ = false;
};

// Creates a tree from the (inferred) type of a non-empty homogeneous record
// collection and fills it with every record.
TreeWriter branches_from_collection(RolloverSink& sink, std::string name,
                                    std::span<const DynamicRecord> records, uint32_t split_level,
                                    const SchemaRegistry& registry,
                                    uint32_t basket_capacity = kDefaultBasketCapacity);

// Per-reader decoded-basket cache plus load counters. The counters are the
// read trace: one tick per basket fetched from the source.
class ReadCursor {
public:
    uint64_t loads(std::string_view branch) const;
    uint64_t total_loads() const;
    const std::map<std::string, uint64_t>& loads_by_branch() const { return loads_; }
    void reset();

private:
    friend class Tree;
    struct DecodedBasket {
        uint64_t first = 0;
        uint32_t count = 0;
        std::vector<Value> values;
    };
    struct BranchCache {
        std::vector<DecodedBasket> baskets;
        std::size_t next_key = 0;
    };
    std::map<std::string, BranchCache> cache_;
    std::map<std::string, uint64_t> loads_;
};

// Read side, attached to a finalized container or chain. Values can be read
// per branch (only that branch's baskets load) or reassembled into whole
// records. Branch names resolve logically: a path covered by a coarser
// physical branch is projected out of it, so queries behave identically at
// every split level.
class Tree {
public:
    static Tree open(const ObjectSource& source, std::string_view name);

    const std::string& name() const { return name_; }
    uint64_t entries() const { return entries_; }
    uint32_t split_level() const { return split_level_; }
    const TypeDescriptor& descriptor() const { return desc_; }
    const SchemaRegistry& schemas() const { return schemas_; }

    struct BranchInfo {
        BranchLayout layout;
        std::vector<std::string> basket_keys;
    };
    const std::vector<BranchInfo>& branches() const { return branches_; }
    const BranchInfo* find_branch(std::string_view name) const;

    DynamicRecord get_entry(uint64_t index, ReadCursor* cursor = nullptr) const;

    // Logical branch read; throws NoSuchBranch when the path resolves to
    // nothing, OutOfRange past the end.
    Value read_branch(std::string_view branch, uint64_t index, ReadCursor* cursor = nullptr) const;

    // Entry counts of the flushed baskets of one branch.
    std::vector<uint32_t> basket_counts(std::string_view branch, ReadCursor* cursor = nullptr) const;

    ReadCursor make_cursor() const { return ReadCursor(); }

    // How a branch path behaves in expressions: scalar, or list-valued with
    // a governing axis (the dotted path of the sequence crossed first).
    struct PathShape {
        bool is_list = false;
        std::string axis;
    };
    PathShape classify_path(std::string_view branch) const;

private:
    Value raw_branch_value(const BranchInfo& b, uint64_t index, ReadCursor& cursor) const;
    const ReadCursor::DecodedBasket& basket_for(const BranchInfo& b, uint64_t index,
                                                ReadCursor& cursor) const;
    DynamicRecord reassemble(const TypeDescriptor& desc, const std::vector<std::string>& prefix,
                             uint64_t index, ReadCursor& cursor) const;

    const ObjectSource* source_ = nullptr;
    std::string name_;
    uint64_t entries_ = 0;
    uint32_t split_level_ = 0;
    TypeDescriptor desc_;
    SchemaRegistry schemas_;
    std::vector<BranchInfo> branches_;
    mutable ReadCursor default_cursor_;
};

// Tree metadata record types ("nrt.TreeMeta" v1 / "nrt.BranchMeta" v1).
const TypeDescriptor& tree_meta_descriptor();
const TypeDescriptor& branch_meta_descriptor();
const TypeDescriptor& basket_descriptor();

} // namespace nrt

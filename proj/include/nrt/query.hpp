#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nrt/hist.hpp"
#include "nrt/tree.hpp"

namespace nrt {

enum class BinOp { add, sub, mul, div, mod, eq, ne, lt, le, gt, ge, logical_and, logical_or };
enum class UnOp { neg, logical_not };

// Expression AST. Precedence (loosest first): || < && < comparisons < + -
// < * / % < unary < primary. Dotted identifiers are branch references; an
// identifier followed by '(' is a function call.
struct Expr {
    enum class Kind { number, branch, unary, binary, call };

    Kind kind = Kind::number;
    double number = 0.0;
    std::string name; // branch or function name
    BinOp bin_op = BinOp::add;
    UnOp un_op = UnOp::neg;
    std::vector<Expr> args;

    static Expr make_number(double v);
    static Expr make_branch(std::string name);
    static Expr make_unary(UnOp op, Expr operand);
    static Expr make_binary(BinOp op, Expr lhs, Expr rhs);
    static Expr make_call(std::string name, std::vector<Expr> args);
};

// Throws ParseError with the byte offset of the problem.
Expr parse_expr(std::string_view text);

std::string print_expr(const Expr& e);

void collect_branch_refs(const Expr& e, std::set<std::string>& out);

// Named numerical functions callable from expressions. sin cos tan sqrt exp
// log abs are unary, pow min max binary; all preloaded.
class FunctionRegistry {
public:
    using Fn = std::function<double(std::span<const double>)>;

    FunctionRegistry();

    void register_function(const std::string& name, int arity, Fn fn);
    double call(const std::string& name, std::span<const double> args) const;
    bool has(const std::string& name) const { return fns_.count(name) != 0; }
    int arity(const std::string& name) const;

    static const FunctionRegistry& builtin();

private:
    struct Entry {
        int arity;
        Fn fn;
    };
    std::map<std::string, Entry> fns_;
};

// Per-entry evaluation state. Branch values load lazily on first touch and
// are cached for the entry; `read_set` collects the logical branch names
// actually read, which short-circuiting keeps smaller than the full
// reference set.
struct EvalContext {
    const Tree* tree = nullptr;
    uint64_t entry = 0;
    ReadCursor* cursor = nullptr;
    const FunctionRegistry* functions = nullptr;
    std::optional<uint64_t> element; // index within the entry's collection
    std::set<std::string>* read_set = nullptr;
    std::map<std::string, Value>* value_cache = nullptr;
};

// Booleans come back as 0/1. Division by zero follows IEEE (inf/NaN).
double eval(const Expr& e, EvalContext& ctx);

struct HistSpec {
    bool automatic = true;
    uint32_t nbins = 100;
    double lo = 0.0;
    double hi = 1.0;

    static HistSpec fixed(uint32_t nbins, double lo, double hi) {
        return HistSpec{false, nbins, lo, hi};
    }
    static HistSpec auto_range() { return HistSpec{}; }
};

struct DrawStats {
    uint64_t entries_seen = 0;
    uint64_t candidates = 0;  // selection passed
    uint64_t filled = 0;
    uint64_t skipped_nan = 0; // NaN expression or selection results
};

// Evaluates `selection` per entry (per element for collection queries); a
// nonzero result fills eval(expr) with the selection value as weight. Auto
// range: 100 bins over [min, max + (max-min)/100] of the passing values,
// [0, 1) when nothing passes. NaN results are skipped and counted.
Hist1D draw(const Tree& tree, std::string_view expr_text, std::string_view selection_text,
            HistSpec spec, const FunctionRegistry& functions = FunctionRegistry::builtin(),
            DrawStats* stats = nullptr, ReadCursor* cursor = nullptr,
            std::set<std::string>* read_set = nullptr);

// Lazily reading branch view handed to per-entry functions.
class EntryAccessor {
public:
    EntryAccessor(const Tree& tree, uint64_t entry, ReadCursor& cursor,
                  std::set<std::string>* read_set)
        : tree_(tree), entry_(entry), cursor_(cursor), read_set_(read_set) {}

    // Numeric branch value; reads the branch on first touch.
    double operator()(std::string_view branch) const;
    Value get(std::string_view branch) const;
    uint64_t entry() const { return entry_; }

private:
    const Tree& tree_;
    uint64_t entry_;
    ReadCursor& cursor_;
    std::set<std::string>* read_set_;
};

using EntryFn = std::function<std::optional<double>(const EntryAccessor&)>;

// Runs `fn` once per entry in order and histograms the returned values
// under `spec`; nullopt skips the entry.
Hist1D map_entries(const Tree& tree, const EntryFn& fn, HistSpec spec, DrawStats* stats = nullptr,
                   ReadCursor* cursor = nullptr, std::set<std::string>* read_set = nullptr);

} // namespace nrt

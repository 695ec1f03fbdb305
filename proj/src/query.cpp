#include "nrt/query.hpp"

#include <cmath>
#include <charconv>

namespace nrt {

Expr Expr::make_number(double v) {
    Expr e;
    e.kind = Kind::number;
    e.number = v;
    return e;
}

Expr Expr::make_branch(std::string name) {
    Expr e;
    e.kind = Kind::branch;
    e.name = std::move(name);
    return e;
}

Expr Expr::make_unary(UnOp op, Expr operand) {
    Expr e;
    e.kind = Kind::unary;
    e.un_op = op;
    e.args.push_back(std::move(operand));
    return e;
}

Expr Expr::make_binary(BinOp op, Expr lhs, Expr rhs) {
    Expr e;
    e.kind = Kind::binary;
    e.bin_op = op;
    e.args.push_back(std::move(lhs));
    e.args.push_back(std::move(rhs));
    return e;
}

Expr Expr::make_call(std::string name, std::vector<Expr> args) {
    Expr e;
    e.kind = Kind::call;
    e.name = std::move(name);
    e.args = std::move(args);
    return e;
}

namespace {

struct Parser {
    std::string_view text;
    std::size_t pos = 0;

    [[noreturn]] void error(const std::string& msg, std::size_t at) {
        fail(Errc::parse_error, msg + " at offset " + std::to_string(at), at);
    }

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t')) ++pos;
    }

    bool eat(char c) {
        skip_ws();
        if (pos < text.size() && text[pos] == c) {
            ++pos;
            return true;
        }
        return false;
    }

    bool eat2(char a, char b) {
        skip_ws();
        if (pos + 1 < text.size() && text[pos] == a && text[pos + 1] == b) {
            pos += 2;
            return true;
        }
        return false;
    }

    char peek() {
        skip_ws();
        return pos < text.size() ? text[pos] : '\0';
    }

    Expr parse() {
        Expr e = parse_or();
        skip_ws();
        if (pos != text.size()) error("unexpected trailing input", pos);
        return e;
    }

    Expr parse_or() {
        Expr lhs = parse_and();
        while (eat2('|', '|')) lhs = Expr::make_binary(BinOp::logical_or, std::move(lhs), parse_and());
        return lhs;
    }

    Expr parse_and() {
        Expr lhs = parse_cmp();
        while (eat2('&', '&')) lhs = Expr::make_binary(BinOp::logical_and, std::move(lhs), parse_cmp());
        return lhs;
    }

    Expr parse_cmp() {
        Expr lhs = parse_add();
        for (;;) {
            if (eat2('=', '=')) {
                lhs = Expr::make_binary(BinOp::eq, std::move(lhs), parse_add());
            } else if (eat2('!', '=')) {
                lhs = Expr::make_binary(BinOp::ne, std::move(lhs), parse_add());
            } else if (eat2('<', '=')) {
                lhs = Expr::make_binary(BinOp::le, std::move(lhs), parse_add());
            } else if (eat2('>', '=')) {
                lhs = Expr::make_binary(BinOp::ge, std::move(lhs), parse_add());
            } else if (eat('<')) {
                lhs = Expr::make_binary(BinOp::lt, std::move(lhs), parse_add());
            } else if (eat('>')) {
                lhs = Expr::make_binary(BinOp::gt, std::move(lhs), parse_add());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_add() {
        Expr lhs = parse_mul();
        for (;;) {
            if (eat('+')) {
                lhs = Expr::make_binary(BinOp::add, std::move(lhs), parse_mul());
            } else if (eat('-')) {
                lhs = Expr::make_binary(BinOp::sub, std::move(lhs), parse_mul());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_mul() {
        Expr lhs = parse_unary();
        for (;;) {
            if (eat('*')) {
                lhs = Expr::make_binary(BinOp::mul, std::move(lhs), parse_unary());
            } else if (eat('/')) {
                lhs = Expr::make_binary(BinOp::div, std::move(lhs), parse_unary());
            } else if (eat('%')) {
                lhs = Expr::make_binary(BinOp::mod, std::move(lhs), parse_unary());
            } else {
                return lhs;
            }
        }
    }

    Expr parse_unary() {
        if (eat('-')) return Expr::make_unary(UnOp::neg, parse_unary());
        skip_ws();
        if (pos < text.size() && text[pos] == '!' &&
            (pos + 1 >= text.size() || text[pos + 1] != '=')) {
            ++pos;
            return Expr::make_unary(UnOp::logical_not, parse_unary());
        }
        return parse_primary();
    }

    Expr parse_primary() {
        skip_ws();
        if (pos >= text.size()) error("unexpected end of expression", pos);
        char c = text[pos];
        if (c == '(') {
            ++pos;
            Expr e = parse_or();
            if (!eat(')')) error("expected ')'", pos);
            return e;
        }
        if ((c >= '0' && c <= '9') || c == '.') return parse_number();
        if (is_ident_start(c)) return parse_ident();
        error(std::string("unexpected character '") + c + "'", pos);
    }

    static bool is_ident_start(char c) {
        return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_';
    }
    static bool is_ident_char(char c) {
        return is_ident_start(c) || (c >= '0' && c <= '9');
    }

    Expr parse_number() {
        const char* begin = text.data() + pos;
        const char* end = text.data() + text.size();
        double v = 0;
        auto [ptr, ec] = std::from_chars(begin, end, v);
        if (ec != std::errc()) error("invalid number", pos);
        pos = static_cast<std::size_t>(ptr - text.data());
        return Expr::make_number(v);
    }

    Expr parse_ident() {
        std::size_t start = pos;
        auto read_word = [&] {
            if (pos >= text.size() || !is_ident_start(text[pos])) error("expected identifier", pos);
            while (pos < text.size() && is_ident_char(text[pos])) ++pos;
        };
        read_word();
        while (pos < text.size() && text[pos] == '.') {
            ++pos;
            read_word();
        }
        std::string name(text.substr(start, pos - start));
        if (name.find('.') == std::string::npos && peek() == '(') {
            ++pos; // consume '('
            std::vector<Expr> args;
            if (!eat(')')) {
                args.push_back(parse_or());
                while (eat(',')) args.push_back(parse_or());
                if (!eat(')')) error("expected ')' after call arguments", pos);
            }
            return Expr::make_call(std::move(name), std::move(args));
        }
        return Expr::make_branch(std::move(name));
    }
};

std::string fmt_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

const char* bin_op_text(BinOp op) {
    switch (op) {
    case BinOp::add: return "+";
    case BinOp::sub: return "-";
    case BinOp::mul: return "*";
    case BinOp::div: return "/";
    case BinOp::mod: return "%";
    case BinOp::eq: return "==";
    case BinOp::ne: return "!=";
    case BinOp::lt: return "<";
    case BinOp::le: return "<=";
    case BinOp::gt: return ">";
    case BinOp::ge: return ">=";
    case BinOp::logical_and: return "&&";
    case BinOp::logical_or: return "||";
    }
    return "?";
}

} // namespace

Expr parse_expr(std::string_view text) {
    Parser p{text};
    return p.parse();
}

std::string print_expr(const Expr& e) {
    switch (e.kind) {
    case Expr::Kind::number:
        return fmt_double(e.number);
    case Expr::Kind::branch:
        return e.name;
    case Expr::Kind::unary:
        return std::string(e.un_op == UnOp::neg ? "-" : "!") + "(" + print_expr(e.args[0]) + ")";
    case Expr::Kind::binary:
        return "(" + print_expr(e.args[0]) + " " + bin_op_text(e.bin_op) + " " +
               print_expr(e.args[1]) + ")";
    case Expr::Kind::call: {
        std::string out = e.name + "(";
        for (std::size_t i = 0; i < e.args.size(); ++i) {
            if (i) out += ", ";
            out += print_expr(e.args[i]);
        }
        return out + ")";
    }
    }
    return "?";
}

void collect_branch_refs(const Expr& e, std::set<std::string>& out) {
    if (e.kind == Expr::Kind::branch) out.insert(e.name);
    for (const auto& a : e.args) collect_branch_refs(a, out);
}

FunctionRegistry::FunctionRegistry() {
    auto unary = [this](const char* name, double (*f)(double)) {
        fns_.emplace(name, Entry{1, [f](std::span<const double> a) { return f(a[0]); }});
    };
    unary("sin", std::sin);
    unary("cos", std::cos);
    unary("tan", std::tan);
    unary("sqrt", std::sqrt);
    unary("exp", std::exp);
    unary("log", std::log);
    unary("abs", std::fabs);
    fns_.emplace("pow", Entry{2, [](std::span<const double> a) { return std::pow(a[0], a[1]); }});
    fns_.emplace("min", Entry{2, [](std::span<const double> a) { return std::fmin(a[0], a[1]); }});
    fns_.emplace("max", Entry{2, [](std::span<const double> a) { return std::fmax(a[0], a[1]); }});
}

const FunctionRegistry& FunctionRegistry::builtin() {
    static const FunctionRegistry reg;
    return reg;
}

void FunctionRegistry::register_function(const std::string& name, int arity, Fn fn) {
    if (fns_.count(name)) fail(Errc::duplicate_name, "function '" + name + "' already registered");
    fns_.emplace(name, Entry{arity, std::move(fn)});
}

int FunctionRegistry::arity(const std::string& name) const {
    auto it = fns_.find(name);
    if (it == fns_.end()) fail(Errc::no_such_function, "no function '" + name + "'");
    return it->second.arity;
}

double FunctionRegistry::call(const std::string& name, std::span<const double> args) const {
    auto it = fns_.find(name);
    if (it == fns_.end()) fail(Errc::no_such_function, "no function '" + name + "'");
    if (it->second.arity >= 0 && static_cast<std::size_t>(it->second.arity) != args.size())
        fail(Errc::arity_mismatch, "function '" + name + "' takes " +
                                       std::to_string(it->second.arity) + " arguments, got " +
                                       std::to_string(args.size()));
    return it->second.fn(args);
}

namespace {

double value_as_scalar(const Value& v, const EvalContext& ctx, const std::string& branch) {
    if (v.is_list()) {
        if (!ctx.element)
            fail(Errc::mixed_axes, "branch '" + branch + "' is list-valued in a scalar context");
        const auto& list = v.as_list();
        if (*ctx.element >= list.size())
            fail(Errc::out_of_range, "element " + std::to_string(*ctx.element) + " of branch '" +
                                         branch + "'");
        return list[*ctx.element].as_number();
    }
    return v.as_number();
}

double read_branch_scalar(const std::string& name, EvalContext& ctx) {
    if (ctx.value_cache) {
        auto it = ctx.value_cache->find(name);
        if (it != ctx.value_cache->end()) {
            if (ctx.read_set) ctx.read_set->insert(name);
            return value_as_scalar(it->second, ctx, name);
        }
    }
    Value v = ctx.tree->read_branch(name, ctx.entry, ctx.cursor);
    if (ctx.read_set) ctx.read_set->insert(name);
    if (ctx.value_cache) ctx.value_cache->emplace(name, v);
    return value_as_scalar(v, ctx, name);
}

} // namespace

double eval(const Expr& e, EvalContext& ctx) {
    switch (e.kind) {
    case Expr::Kind::number:
        return e.number;
    case Expr::Kind::branch:
        return read_branch_scalar(e.name, ctx);
    case Expr::Kind::unary: {
        double v = eval(e.args[0], ctx);
        return e.un_op == UnOp::neg ? -v : (v == 0.0 ? 1.0 : 0.0);
    }
    case Expr::Kind::binary: {
        if (e.bin_op == BinOp::logical_and) {
            if (eval(e.args[0], ctx) == 0.0) return 0.0;
            return eval(e.args[1], ctx) != 0.0 ? 1.0 : 0.0;
        }
        if (e.bin_op == BinOp::logical_or) {
            if (eval(e.args[0], ctx) != 0.0) return 1.0;
            return eval(e.args[1], ctx) != 0.0 ? 1.0 : 0.0;
        }
        double a = eval(e.args[0], ctx);
        double b = eval(e.args[1], ctx);
        switch (e.bin_op) {
        case BinOp::add: return a + b;
        case BinOp::sub: return a - b;
        case BinOp::mul: return a * b;
        case BinOp::div: return a / b; // IEEE semantics on zero
        case BinOp::mod: return std::fmod(a, b);
        case BinOp::eq: return a == b ? 1.0 : 0.0;
        case BinOp::ne: return a != b ? 1.0 : 0.0;
        case BinOp::lt: return a < b ? 1.0 : 0.0;
        case BinOp::le: return a <= b ? 1.0 : 0.0;
        case BinOp::gt: return a > b ? 1.0 : 0.0;
        case BinOp::ge: return a >= b ? 1.0 : 0.0;
        default: break;
        }
        fail(Errc::parse_error, "unreachable operator");
    }
    case Expr::Kind::call: {
        const FunctionRegistry& fns = ctx.functions ? *ctx.functions : FunctionRegistry::builtin();
        // Arity checked before evaluating arguments.
        int want = fns.arity(e.name);
        if (want >= 0 && static_cast<std::size_t>(want) != e.args.size())
            fail(Errc::arity_mismatch, "function '" + e.name + "' takes " + std::to_string(want) +
                                           " arguments, got " + std::to_string(e.args.size()));
        std::vector<double> args;
        args.reserve(e.args.size());
        for (const auto& a : e.args) args.push_back(eval(a, ctx));
        return fns.call(e.name, args);
    }
    }
    fail(Errc::parse_error, "unreachable node kind");
}

namespace {

// Samples buffered during the entry loop so automatic ranges need no second
// evaluation pass.
struct Samples {
    std::vector<std::pair<double, double>> values; // (x, weight)
};

Hist1D fill_from_samples(const std::string& name, const Samples& samples, const HistSpec& spec) {
    uint32_t nbins = spec.nbins;
    double lo = spec.lo;
    double hi = spec.hi;
    if (spec.automatic) {
        nbins = 100;
        if (samples.values.empty()) {
            lo = 0.0;
            hi = 1.0;
        } else {
            lo = samples.values[0].first;
            double max = samples.values[0].first;
            for (const auto& [x, w] : samples.values) {
                lo = std::min(lo, x);
                max = std::max(max, x);
            }
            double span = max - lo;
            hi = span > 0 ? max + span / 100.0 : lo + 1.0;
        }
    }
    Hist1D h(name, nbins, lo, hi);
    for (const auto& [x, w] : samples.values) h.fill(x, w);
    return h;
}

// Queries over collection members repeat per element; every referenced list
// path must sit on the same axis.
struct QueryShape {
    bool list_mode = false;
    std::string axis;
};

QueryShape classify_query(const Tree& tree, const std::set<std::string>& refs) {
    QueryShape shape;
    for (const auto& name : refs) {
        auto s = tree.classify_path(name);
        if (!s.is_list) continue;
        if (shape.list_mode && shape.axis != s.axis)
            fail(Errc::mixed_axes,
                 "branches on axes '" + shape.axis + "' and '" + s.axis + "' in one expression");
        shape.list_mode = true;
        shape.axis = s.axis;
    }
    return shape;
}

} // namespace

Hist1D draw(const Tree& tree, std::string_view expr_text, std::string_view selection_text,
            HistSpec spec, const FunctionRegistry& functions, DrawStats* stats, ReadCursor* cursor,
            std::set<std::string>* read_set) {
    Expr expr = parse_expr(expr_text);
    Expr selection = selection_text.empty() ? Expr::make_number(1.0) : parse_expr(selection_text);

    std::set<std::string> refs;
    collect_branch_refs(expr, refs);
    collect_branch_refs(selection, refs);
    QueryShape shape = classify_query(tree, refs);

    ReadCursor local_cursor;
    ReadCursor& cur = cursor ? *cursor : local_cursor;
    DrawStats local_stats;
    DrawStats& st = stats ? *stats : local_stats;

    Samples samples;
    for (uint64_t i = 0; i < tree.entries(); ++i) {
        st.entries_seen += 1;
        std::map<std::string, Value> cache;
        EvalContext ctx;
        ctx.tree = &tree;
        ctx.entry = i;
        ctx.cursor = &cur;
        ctx.functions = &functions;
        ctx.read_set = read_set;
        ctx.value_cache = &cache;

        uint64_t repeats = 1;
        if (shape.list_mode) {
            Value n = tree.read_branch(shape.axis + "_n", i, &cur);
            if (read_set) read_set->insert(shape.axis + "_n");
            repeats = static_cast<uint64_t>(n.as_int());
        }
        for (uint64_t j = 0; j < repeats; ++j) {
            if (shape.list_mode) ctx.element = j;
            double w = eval(selection, ctx);
            if (std::isnan(w)) {
                st.skipped_nan += 1;
                continue;
            }
            if (w == 0.0) continue;
            st.candidates += 1;
            double x = eval(expr, ctx);
            if (std::isnan(x)) {
                st.skipped_nan += 1;
                continue;
            }
            samples.values.emplace_back(x, w);
            st.filled += 1;
        }
    }
    return fill_from_samples(std::string(expr_text), samples, spec);
}

double EntryAccessor::operator()(std::string_view branch) const {
    Value v = get(branch);
    if (v.is_list()) fail(Errc::mixed_axes, "branch '" + std::string(branch) + "' is list-valued");
    return v.as_number();
}

Value EntryAccessor::get(std::string_view branch) const {
    Value v = tree_.read_branch(branch, entry_, &cursor_);
    if (read_set_) read_set_->insert(std::string(branch));
    return v;
}

Hist1D map_entries(const Tree& tree, const EntryFn& fn, HistSpec spec, DrawStats* stats,
                   ReadCursor* cursor, std::set<std::string>* read_set) {
    ReadCursor local_cursor;
    ReadCursor& cur = cursor ? *cursor : local_cursor;
    DrawStats local_stats;
    DrawStats& st = stats ? *stats : local_stats;

    Samples samples;
    for (uint64_t i = 0; i < tree.entries(); ++i) {
        st.entries_seen += 1;
        EntryAccessor accessor(tree, i, cur, read_set);
        std::optional<double> r = fn(accessor);
        if (!r) continue;
        if (std::isnan(*r)) {
            st.skipped_nan += 1;
            continue;
        }
        st.candidates += 1;
        samples.values.emplace_back(*r, 1.0);
        st.filled += 1;
    }
    return fill_from_samples("map", samples, spec);
}

} // namespace nrt

#include "nrt/plugin.hpp"

namespace nrt {

namespace {

bool is_alpha(char c) {
    return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z');
}

} // namespace

bool has_uri_scheme(std::string_view uri) {
    if (uri.empty() || !is_alpha(uri[0])) return false;
    for (std::size_t i = 1; i < uri.size(); ++i) {
        char c = uri[i];
        if (c == ':') return true;
        if (!is_alpha(c) && !(c >= '0' && c <= '9') && c != '+' && c != '.' && c != '-') return false;
    }
    return false;
}

bool MiniRegex::Atom::matches(char c) const {
    switch (kind) {
    case Kind::literal: return c == literal;
    case Kind::any: return true;
    case Kind::cls: {
        bool in = cls_chars.find(c) != std::string::npos;
        return cls_negated ? !in : in;
    }
    }
    return false;
}

MiniRegex::Alternative MiniRegex::compile_alternative(std::string_view src, std::string_view whole) {
    Alternative alt;
    std::size_t i = 0;
    if (!src.empty() && src[0] == '^') {
        alt.anchored = true;
        i = 1;
    }
    while (i < src.size()) {
        Atom atom;
        char c = src[i];
        switch (c) {
        case '.':
            atom.kind = Atom::Kind::any;
            ++i;
            break;
        case '[': {
            atom.kind = Atom::Kind::cls;
            ++i;
            if (i < src.size() && src[i] == '^') {
                atom.cls_negated = true;
                ++i;
            }
            bool closed = false;
            bool first = true;
            while (i < src.size()) {
                if (src[i] == ']' && !first) {
                    closed = true;
                    ++i;
                    break;
                }
                char lo = src[i];
                if (lo == '\\' && i + 1 < src.size()) lo = src[++i];
                if (i + 2 < src.size() && src[i + 1] == '-' && src[i + 2] != ']') {
                    char hi = src[i + 2];
                    if (hi < lo) fail(Errc::malformed, "bad range in class of '" + std::string(whole) + "'");
                    for (char d = lo; d <= hi; ++d) atom.cls_chars.push_back(d);
                    i += 3;
                } else {
                    atom.cls_chars.push_back(lo);
                    ++i;
                }
                first = false;
            }
            if (!closed) fail(Errc::malformed, "unterminated class in '" + std::string(whole) + "'");
            break;
        }
        case '\\':
            if (i + 1 >= src.size()) fail(Errc::malformed, "dangling escape in '" + std::string(whole) + "'");
            atom.kind = Atom::Kind::literal;
            atom.literal = src[i + 1];
            i += 2;
            break;
        case '*':
        case '+':
        case '?':
            fail(Errc::malformed, "repetition with nothing to repeat in '" + std::string(whole) + "'");
        case '(':
        case ')':
        case '{':
        case '}':
        case '$':
            fail(Errc::malformed,
                 std::string("unsupported regex construct '") + c + "' in '" + std::string(whole) + "'");
        case '^':
            fail(Errc::malformed, "'^' only allowed at the start of '" + std::string(whole) + "'");
        default:
            atom.kind = Atom::Kind::literal;
            atom.literal = c;
            ++i;
            break;
        }
        if (i < src.size()) {
            if (src[i] == '*') {
                atom.rep = Atom::Rep::star;
                ++i;
            } else if (src[i] == '+') {
                atom.rep = Atom::Rep::plus;
                ++i;
            } else if (src[i] == '?') {
                atom.rep = Atom::Rep::opt;
                ++i;
            }
        }
        alt.atoms.push_back(std::move(atom));
    }
    return alt;
}

MiniRegex::MiniRegex(std::string_view pattern) : pattern_(pattern) {
    if (pattern.empty()) fail(Errc::malformed, "empty pattern");
    // split at top-level '|' (classes may contain one)
    std::vector<std::string_view> parts;
    std::size_t start = 0;
    bool in_class = false;
    for (std::size_t i = 0; i < pattern.size(); ++i) {
        char c = pattern[i];
        if (c == '\\') {
            ++i;
            continue;
        }
        if (c == '[') in_class = true;
        else if (c == ']') in_class = false;
        else if (c == '|' && !in_class) {
            parts.push_back(pattern.substr(start, i - start));
            start = i + 1;
        }
    }
    parts.push_back(pattern.substr(start));
    for (auto part : parts) alternatives_.push_back(compile_alternative(part, pattern));
}

bool MiniRegex::match_here(std::span<const Atom> atoms, std::string_view text) {
    if (atoms.empty()) return true;
    const Atom& a = atoms[0];
    auto rest = atoms.subspan(1);
    switch (a.rep) {
    case Atom::Rep::one:
        return !text.empty() && a.matches(text[0]) && match_here(rest, text.substr(1));
    case Atom::Rep::opt:
        if (!text.empty() && a.matches(text[0]) && match_here(rest, text.substr(1))) return true;
        return match_here(rest, text);
    case Atom::Rep::star:
    case Atom::Rep::plus: {
        std::size_t max_run = 0;
        while (max_run < text.size() && a.matches(text[max_run])) ++max_run;
        std::size_t min_run = a.rep == Atom::Rep::plus ? 1 : 0;
        for (std::size_t run = max_run + 1; run-- > min_run;) {
            if (match_here(rest, text.substr(run))) return true;
        }
        return false;
    }
    }
    return false;
}

bool MiniRegex::search(std::string_view text) const {
    for (const auto& alt : alternatives_) {
        if (alt.anchored) {
            if (match_here(alt.atoms, text)) return true;
            continue;
        }
        for (std::size_t at = 0; at <= text.size(); ++at) {
            if (match_here(alt.atoms, text.substr(at))) return true;
        }
    }
    return false;
}

namespace {

struct ConfigLine {
    std::string_view text;
    std::size_t number; // 1-based
};

[[noreturn]] void syntax_error(std::size_t line, const std::string& msg) {
    fail(Errc::config_syntax, "line " + std::to_string(line) + ": " + msg, line);
}

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

// Reads the quoted string in `s`; returns nullopt when there is none.
std::optional<std::string> take_quoted(std::string_view s, std::size_t line) {
    auto open = s.find('"');
    if (open == std::string_view::npos) return std::nullopt;
    auto close = s.find('"', open + 1);
    if (close == std::string_view::npos) syntax_error(line, "unterminated constructor string");
    return std::string(s.substr(open + 1, close - open - 1));
}

} // namespace

std::vector<PluginSpec> load_config(std::string_view text, std::vector<bool>* append_flags) {
    std::vector<PluginSpec> out;
    if (append_flags) append_flags->clear();

    std::vector<ConfigLine> lines;
    std::size_t start = 0, number = 1;
    while (start <= text.size()) {
        auto nl = text.find('\n', start);
        std::string_view line =
            nl == std::string_view::npos ? text.substr(start) : text.substr(start, nl - start);
        lines.push_back({line, number++});
        if (nl == std::string_view::npos) break;
        start = nl + 1;
    }

    // Index of the entry still waiting for a ctor continuation, or npos.
    std::size_t pending = std::string::npos;
    for (const auto& [raw, lineno] : lines) {
        std::string_view stripped = trim(raw);
        if (stripped.empty()) {
            pending = std::string::npos;
            continue;
        }
        if (stripped.front() == '#') {
            pending = std::string::npos;
            continue;
        }
        bool indented = raw.front() == ' ' || raw.front() == '\t';
        if (indented) {
            // Continuation: quoted ctor for the previous entry; anything
            // else (e.g. a wrapped comment) is ignored.
            if (pending != std::string::npos) {
                if (auto ctor = take_quoted(stripped, lineno)) out[pending].ctor = *ctor;
            }
            pending = std::string::npos;
            continue;
        }
        pending = std::string::npos;

        bool append = false;
        std::string_view rest = stripped;
        if (rest.front() == '+') {
            append = true;
            rest.remove_prefix(1);
        }
        constexpr std::string_view kPrefix = "Plugin.";
        if (rest.substr(0, kPrefix.size()) != kPrefix)
            syntax_error(lineno, "expected 'Plugin.<Base>:'");
        rest.remove_prefix(kPrefix.size());
        auto colon = rest.find(':');
        if (colon == std::string_view::npos || colon == 0)
            syntax_error(lineno, "expected ':' after base name");
        std::string base(trim(rest.substr(0, colon)));
        rest = rest.substr(colon + 1);

        std::optional<std::string> ctor = take_quoted(rest, lineno);
        if (ctor) rest = rest.substr(0, rest.find('"'));

        std::vector<std::string> tokens;
        std::size_t i = 0;
        while (i < rest.size()) {
            while (i < rest.size() && (rest[i] == ' ' || rest[i] == '\t')) ++i;
            std::size_t tok_start = i;
            while (i < rest.size() && rest[i] != ' ' && rest[i] != '\t') ++i;
            if (i > tok_start) tokens.emplace_back(rest.substr(tok_start, i - tok_start));
        }

        // The paper's config style allows the handler name to butt up
        // against a scheme pattern ("^dcache:TDCacheFile"); a scheme
        // pattern always ends at its colon, so split there.
        if (tokens.size() == 2) {
            auto cut = tokens[0].rfind(':');
            if (cut != std::string::npos && cut + 1 < tokens[0].size()) {
                std::string handler = tokens[0].substr(cut + 1);
                tokens[0] = tokens[0].substr(0, cut + 1);
                tokens.insert(tokens.begin() + 1, std::move(handler));
            }
        }
        if (tokens.size() < 3) syntax_error(lineno, "expected <regex> <handler> <library>");
        if (tokens.size() > 3) syntax_error(lineno, "unexpected extra fields");

        PluginSpec spec{base, tokens[0], tokens[1], tokens[2], ctor.value_or("")};
        try {
            MiniRegex check(spec.pattern);
        } catch (const Error& e) {
            syntax_error(lineno, e.what());
        }
        out.push_back(std::move(spec));
        if (append_flags) append_flags->push_back(append);
        if (!ctor) pending = out.size() - 1;
    }
    return out;
}

std::string print_config(std::span<const PluginSpec> specs) {
    std::string out;
    for (const auto& s : specs) {
        out += "Plugin." + s.base + ": " + s.pattern + " " + s.handler + " " + s.library;
        if (!s.ctor.empty()) out += " \"" + s.ctor + "\"";
        out += "\n";
    }
    return out;
}

PluginRegistry PluginRegistry::with_builtins() {
    PluginRegistry reg;
    reg.add({"ContainerOpen", "^local:", "local", "builtin", ""});
    reg.add({"ContainerOpen", "^mem:", "mem", "builtin", ""});
    reg.register_factory("local", [](std::string_view uri) {
        std::string_view path = uri;
        if (path.rfind("local:", 0) == 0) path.remove_prefix(6);
        return Container::open(std::string(path));
    });
    reg.register_factory("mem", [](std::string_view uri) {
        std::string_view name = uri;
        if (name.rfind("mem:", 0) == 0) name.remove_prefix(4);
        if (mem_storage_exists(name)) return Container::open_mem(std::string(name));
        return Container::create_mem(std::string(name));
    });
    return reg;
}

void PluginRegistry::add(const PluginSpec& spec) {
    by_base_[spec.base].push_back({spec, MiniRegex(spec.pattern)});
}

void PluginRegistry::load(std::string_view text) {
    std::vector<bool> append_flags;
    auto specs = load_config(text, &append_flags);
    for (std::size_t i = 0; i < specs.size(); ++i) {
        if (!append_flags[i]) by_base_[specs[i].base].clear();
        add(specs[i]);
    }
}

const PluginSpec& PluginRegistry::resolve(std::string_view base, std::string_view uri) const {
    auto it = by_base_.find(base);
    if (it != by_base_.end()) {
        for (const auto& entry : it->second) {
            if (entry.regex.search(uri)) return entry.spec;
        }
    }
    fail(Errc::no_match, "no plugin under '" + std::string(base) + "' matches '" + std::string(uri) + "'");
}

std::vector<PluginSpec> PluginRegistry::specs(std::string_view base) const {
    std::vector<PluginSpec> out;
    auto it = by_base_.find(base);
    if (it != by_base_.end()) {
        for (const auto& entry : it->second) out.push_back(entry.spec);
    }
    return out;
}

void PluginRegistry::register_factory(const std::string& handler, OpenFactory factory) {
    factories_[handler] = std::move(factory);
}

std::unique_ptr<Container> PluginRegistry::open_any(std::string_view uri) const {
    std::string full = has_uri_scheme(uri) ? std::string(uri) : "local:" + std::string(uri);
    const PluginSpec* spec = nullptr;
    try {
        spec = &resolve("ContainerOpen", full);
    } catch (const Error& e) {
        if (e.code() != Errc::no_match) throw;
        spec = &resolve("TFile", full); // protocol entries registered under the file base
    }
    auto it = factories_.find(spec->handler);
    if (it == factories_.end())
        fail(Errc::unsupported_handler,
             "handler '" + spec->handler + "' resolved for '" + full + "' has no factory");
    return it->second(full);
}

} // namespace nrt

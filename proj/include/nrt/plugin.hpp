#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nrt/container.hpp"

namespace nrt {

// Regex subset for plugin patterns: '^' anchor, literal characters, '.',
// character classes [...] (with ranges and leading '^' negation), postfix
// '*' '+' '?', and top-level alternation '|'. Anchored patterns match a
// prefix of the text; unanchored ones are searched.
class MiniRegex {
public:
    explicit MiniRegex(std::string_view pattern);

    bool search(std::string_view text) const;
    const std::string& pattern() const { return pattern_; }

private:
    struct Atom {
        enum class Kind { literal, any, cls } kind = Kind::literal;
        char literal = 0;
        std::string cls_chars;   // expanded class members
        bool cls_negated = false;
        enum class Rep { one, star, plus, opt } rep = Rep::one;

        bool matches(char c) const;
    };
    struct Alternative {
        bool anchored = false;
        std::vector<Atom> atoms;
    };

    static Alternative compile_alternative(std::string_view src, std::string_view whole);
    static bool match_here(std::span<const Atom> atoms, std::string_view text);

    std::string pattern_;
    std::vector<Alternative> alternatives_;
};

// One line of plug-in configuration.
struct PluginSpec {
    std::string base;    // abstract interface name, e.g. "TFile"
    std::string pattern; // regex recognizing the uri
    std::string handler; // plug-in class name
    std::string library; // informational
    std::string ctor;    // informational prototype text

    bool operator==(const PluginSpec&) const = default;
};

// Parses config text of the form
//   Plugin.<Base>: <regex> <handler> <library> "<ctor>"
// with '#' comments, blank lines, '+' continuation markers and ctor strings
// wrapping onto a following indented line. `append_flags`, when given,
// receives one entry per spec: false for a plain "Plugin." line (which
// resets that base), true for a "+Plugin." line.
std::vector<PluginSpec> load_config(std::string_view text,
                                    std::vector<bool>* append_flags = nullptr);

std::string print_config(std::span<const PluginSpec> specs);

class PluginRegistry {
public:
    using OpenFactory = std::function<std::unique_ptr<Container>(std::string_view uri)>;

    // Registry with the "ContainerOpen" handlers "local" and "mem" wired up.
    static PluginRegistry with_builtins();

    // Appends one spec (pattern compiled eagerly).
    void add(const PluginSpec& spec);

    // Applies config text: plain lines replace the base's entries, '+'
    // lines append.
    void load(std::string_view text);

    // First registered spec under `base` whose pattern matches `uri`.
    const PluginSpec& resolve(std::string_view base, std::string_view uri) const;

    std::vector<PluginSpec> specs(std::string_view base) const;

    void register_factory(const std::string& handler, OpenFactory factory);

    // Dispatches a uri to a container: bare paths count as "local:".
    // Resolves under base "ContainerOpen" first, then "TFile" so file
    // protocol entries in user config participate. Handlers without a
    // factory throw UnsupportedHandler naming the handler.
    std::unique_ptr<Container> open_any(std::string_view uri) const;

private:
    struct Entry {
        PluginSpec spec;
        MiniRegex regex;
    };
    std::map<std::string, std::vector<Entry>, std::less<>> by_base_;
    std::map<std::string, OpenFactory, std::less<>> factories_;
};

// True when the uri starts with "<scheme>:".
bool has_uri_scheme(std::string_view uri);

} // namespace nrt

#include "nrt/xml.hpp"

#include <cctype>
#include <charconv>
#include <set>

namespace nrt {

std::string format_double(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

std::string xml_escape(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) {
        switch (c) {
        case '&': out += "&amp;"; break;
        case '<': out += "&lt;"; break;
        case '>': out += "&gt;"; break;
        case '"': out += "&quot;"; break;
        case '\'': out += "&apos;"; break;
        default: out += c;
        }
    }
    return out;
}

namespace {

const char* kind_code(FieldKind kind) {
    switch (kind) {
    case FieldKind::Int64: return "i64";
    case FieldKind::Float64: return "f64";
    case FieldKind::Bool: return "bool";
    case FieldKind::String: return "str";
    case FieldKind::Composite: return "obj";
    case FieldKind::FixedArray: return "arr";
    case FieldKind::Sequence: return "seq";
    case FieldKind::Ref: return "ref";
    }
    return "?";
}

std::optional<FieldKind> kind_from_code(std::string_view code) {
    if (code == "i64") return FieldKind::Int64;
    if (code == "f64") return FieldKind::Float64;
    if (code == "bool") return FieldKind::Bool;
    if (code == "str") return FieldKind::String;
    if (code == "obj") return FieldKind::Composite;
    if (code == "arr") return FieldKind::FixedArray;
    if (code == "seq") return FieldKind::Sequence;
    if (code == "ref") return FieldKind::Ref;
    return std::nullopt;
}

std::string ref_text(const Uid& uid) {
    return uid.tag.hex() + ":" + std::to_string(uid.serial);
}

Uid parse_ref_text(std::string_view text) {
    auto colon = text.find(':');
    if (colon == std::string_view::npos) fail(Errc::xml_malformed, "ref value needs tag:serial");
    auto tag = ProcessTag::from_hex(text.substr(0, colon));
    if (!tag) fail(Errc::xml_malformed, "invalid ref tag hex");
    uint32_t serial = 0;
    auto s = text.substr(colon + 1);
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), serial);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(Errc::xml_malformed, "invalid ref serial");
    return Uid{*tag, serial};
}

void render_record(std::string& out, const DynamicRecord& rec, const SchemaRegistry& registry,
                   int indent);

void render_scalar(std::string& out, const Value& v, FieldKind kind, const SchemaRegistry& registry,
                   int indent) {
    switch (kind) {
    case FieldKind::Int64: out += std::to_string(v.as_int()); break;
    case FieldKind::Float64: out += format_double(v.as_f64()); break;
    case FieldKind::Bool: out += v.as_bool() ? "true" : "false"; break;
    case FieldKind::String: out += xml_escape(v.as_string()); break;
    case FieldKind::Ref: out += ref_text(v.as_ref()); break;
    case FieldKind::Composite:
        out += "\n";
        render_record(out, v.as_record(), registry, indent + 1);
        out.append(static_cast<std::size_t>(indent) * 2, ' ');
        break;
    default: fail(Errc::xml_malformed, "unexpected scalar kind");
    }
}

void render_field(std::string& out, const Value& v, const FieldDescriptor& field,
                  const SchemaRegistry& registry, int indent) {
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    out += pad + "<f name=\"" + xml_escape(field.name) + "\" k=\"" + kind_code(field.kind) + "\"";
    if (field.kind == FieldKind::FixedArray || field.kind == FieldKind::Sequence) {
        const auto& list = v.as_list();
        if (list.empty()) {
            out += "/>\n";
            return;
        }
        out += ">\n";
        FieldKind elem_kind =
            primitive_kind_from_name(field.element).value_or(FieldKind::Composite);
        for (const auto& e : list) {
            out += pad + "  <e>";
            render_scalar(out, e, elem_kind, registry, indent + 1);
            out += "</e>\n";
        }
        out += pad + "</f>\n";
        return;
    }
    out += ">";
    render_scalar(out, v, field.kind, registry, indent);
    out += "</f>\n";
}

void render_record(std::string& out, const DynamicRecord& rec, const SchemaRegistry& registry,
                   int indent) {
    const TypeDescriptor& desc = registry.get(rec.type_name, rec.type_version);
    auto fields = registry.flattened_fields(desc);
    if (fields.size() != rec.values.size())
        fail(Errc::type_mismatch, "record '" + rec.type_name + "' does not match its descriptor");
    std::string pad(static_cast<std::size_t>(indent) * 2, ' ');
    out += pad + "<object type=\"" + xml_escape(rec.type_name) + "\" version=\"" +
           std::to_string(rec.type_version) + "\">\n";
    for (std::size_t i = 0; i < fields.size(); ++i)
        render_field(out, rec.values[i].second, fields[i], registry, indent + 1);
    out += pad + "</object>\n";
}

void collect_used_types(const TypeDescriptor& desc, const SchemaRegistry& registry,
                        std::vector<const TypeDescriptor*>& out,
                        std::set<std::pair<std::string, uint32_t>>& seen) {
    if (!seen.insert({desc.name(), desc.version()}).second) return;
    if (!desc.base().empty()) {
        if (const TypeDescriptor* base = registry.find_latest(desc.base()))
            collect_used_types(*base, registry, out, seen);
    }
    for (const auto& f : desc.fields()) {
        if (f.element.empty() || primitive_kind_from_name(f.element)) continue;
        if (const TypeDescriptor* elem = registry.find_latest(f.element))
            collect_used_types(*elem, registry, out, seen);
    }
    out.push_back(&desc);
}

void render_descriptor(std::string& out, const TypeDescriptor& desc) {
    out += "<descriptor name=\"" + xml_escape(desc.name()) + "\" version=\"" +
           std::to_string(desc.version()) + "\" checksum=\"" + std::to_string(desc.checksum()) +
           "\" base=\"" + xml_escape(desc.base()) + "\">\n";
    for (const auto& f : desc.fields()) {
        out += "  <field name=\"" + xml_escape(f.name) + "\" kind=\"" + kind_name(f.kind) +
               "\" element=\"" + xml_escape(f.element) + "\" length=\"" + std::to_string(f.length) +
               "\"/>\n";
    }
    out += "</descriptor>\n";
}

// --- minimal parser for the subset this module emits ---------------------

struct XmlNode {
    std::string name;
    std::vector<std::pair<std::string, std::string>> attrs;
    std::vector<XmlNode> children;
    std::string text;

    const std::string* attr(std::string_view key) const {
        for (const auto& [k, v] : attrs)
            if (k == key) return &v;
        return nullptr;
    }
    const std::string& need_attr(std::string_view key) const {
        const std::string* v = attr(key);
        if (!v) fail(Errc::xml_malformed, "element <" + name + "> missing attribute '" + std::string(key) + "'");
        return *v;
    }
};

struct XmlParser {
    std::string_view text;
    std::size_t pos = 0;

    [[noreturn]] void error(const std::string& msg) {
        fail(Errc::xml_malformed, msg + " at offset " + std::to_string(pos), pos);
    }

    void skip_ws() {
        while (pos < text.size() && (text[pos] == ' ' || text[pos] == '\t' || text[pos] == '\n' ||
                                     text[pos] == '\r'))
            ++pos;
    }

    bool starts_with(std::string_view s) const { return text.substr(pos, s.size()) == s; }

    std::string unescape(std::string_view s) {
        std::string out;
        out.reserve(s.size());
        for (std::size_t i = 0; i < s.size();) {
            if (s[i] != '&') {
                out += s[i++];
                continue;
            }
            auto rest = s.substr(i);
            if (rest.rfind("&amp;", 0) == 0) { out += '&'; i += 5; }
            else if (rest.rfind("&lt;", 0) == 0) { out += '<'; i += 4; }
            else if (rest.rfind("&gt;", 0) == 0) { out += '>'; i += 4; }
            else if (rest.rfind("&quot;", 0) == 0) { out += '"'; i += 6; }
            else if (rest.rfind("&apos;", 0) == 0) { out += '\''; i += 6; }
            else error("unknown entity");
        }
        return out;
    }

    std::string read_name() {
        std::size_t start = pos;
        while (pos < text.size() &&
               (std::isalnum(static_cast<unsigned char>(text[pos])) || text[pos] == '_' ||
                text[pos] == '-' || text[pos] == '.'))
            ++pos;
        if (pos == start) error("expected a name");
        return std::string(text.substr(start, pos - start));
    }

    XmlNode parse_element() {
        skip_ws();
        if (pos >= text.size() || text[pos] != '<') error("expected '<'");
        ++pos;
        XmlNode node;
        node.name = read_name();
        for (;;) {
            skip_ws();
            if (pos >= text.size()) error("unterminated element");
            if (starts_with("/>")) {
                pos += 2;
                return node;
            }
            if (text[pos] == '>') {
                ++pos;
                break;
            }
            std::string key = read_name();
            skip_ws();
            if (pos >= text.size() || text[pos] != '=') error("expected '=' in attribute");
            ++pos;
            skip_ws();
            if (pos >= text.size() || text[pos] != '"') error("expected '\"'");
            ++pos;
            std::size_t start = pos;
            while (pos < text.size() && text[pos] != '"') ++pos;
            if (pos >= text.size()) error("unterminated attribute value");
            node.attrs.emplace_back(std::move(key), unescape(text.substr(start, pos - start)));
            ++pos;
        }
        // content: children and/or text until the closing tag
        std::string raw_text;
        for (;;) {
            if (pos >= text.size()) error("unterminated element <" + node.name + ">");
            if (text[pos] == '<') {
                if (starts_with("</")) {
                    pos += 2;
                    std::string closing = read_name();
                    if (closing != node.name) error("mismatched closing tag </" + closing + ">");
                    skip_ws();
                    if (pos >= text.size() || text[pos] != '>') error("expected '>'");
                    ++pos;
                    node.text = unescape(raw_text);
                    return node;
                }
                node.children.push_back(parse_element());
            } else {
                raw_text += text[pos++];
            }
        }
    }

    std::vector<XmlNode> parse_all() {
        std::vector<XmlNode> nodes;
        for (;;) {
            skip_ws();
            if (pos >= text.size()) break;
            nodes.push_back(parse_element());
        }
        return nodes;
    }
};

int64_t parse_i64(std::string_view s) {
    int64_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(Errc::xml_malformed, "invalid integer '" + std::string(s) + "'");
    return v;
}

double parse_f64(std::string_view s) {
    double v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size())
        fail(Errc::xml_malformed, "invalid float '" + std::string(s) + "'");
    return v;
}

DynamicRecord build_record(const XmlNode& node, const SchemaRegistry& registry);

Value build_scalar(const XmlNode& node, FieldKind kind, const SchemaRegistry& registry) {
    switch (kind) {
    case FieldKind::Int64: return Value(parse_i64(node.text));
    case FieldKind::Float64: return Value(parse_f64(node.text));
    case FieldKind::Bool:
        if (node.text == "true") return Value(true);
        if (node.text == "false") return Value(false);
        fail(Errc::xml_malformed, "invalid bool '" + node.text + "'");
    case FieldKind::String: return Value(node.text);
    case FieldKind::Ref: return Value(parse_ref_text(node.text));
    case FieldKind::Composite: {
        if (node.children.size() != 1 || node.children[0].name != "object")
            fail(Errc::xml_malformed, "composite field needs exactly one <object>");
        return Value(make_record_ptr(build_record(node.children[0], registry)));
    }
    default: fail(Errc::xml_malformed, "unexpected field kind");
    }
}

Value build_field_value(const XmlNode& node, const FieldDescriptor& field,
                        const SchemaRegistry& registry) {
    if (field.kind == FieldKind::FixedArray || field.kind == FieldKind::Sequence) {
        FieldKind elem_kind = primitive_kind_from_name(field.element).value_or(FieldKind::Composite);
        Value::List list;
        for (const auto& child : node.children) {
            if (child.name != "e") fail(Errc::xml_malformed, "list fields hold <e> elements only");
            list.push_back(build_scalar(child, elem_kind, registry));
        }
        if (field.kind == FieldKind::FixedArray && list.size() != field.length)
            fail(Errc::xml_malformed, "fixed array '" + field.name + "' expects " +
                                          std::to_string(field.length) + " elements");
        return Value(std::move(list));
    }
    return build_scalar(node, field.kind, registry);
}

DynamicRecord build_record(const XmlNode& node, const SchemaRegistry& registry) {
    if (node.name != "object") fail(Errc::xml_malformed, "expected <object>");
    const std::string& type = node.need_attr("type");
    auto version = static_cast<uint32_t>(parse_i64(node.need_attr("version")));
    const TypeDescriptor* desc = registry.find(type, version);
    if (!desc) fail(Errc::unknown_type, "type '" + type + "' v" + std::to_string(version) +
                                            " not registered and not embedded");
    auto fields = registry.flattened_fields(*desc);
    if (node.children.size() != fields.size())
        fail(Errc::xml_malformed, "object '" + type + "' has " + std::to_string(node.children.size()) +
                                      " fields, descriptor expects " + std::to_string(fields.size()));
    DynamicRecord rec(type, version);
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const XmlNode& f = node.children[i];
        if (f.name != "f") fail(Errc::xml_malformed, "expected <f> inside <object>");
        if (f.need_attr("name") != fields[i].name)
            fail(Errc::xml_malformed, "field '" + f.need_attr("name") + "' out of order, expected '" +
                                          fields[i].name + "'");
        auto kind = kind_from_code(f.need_attr("k"));
        if (!kind || *kind != fields[i].kind)
            fail(Errc::xml_malformed, "field '" + fields[i].name + "' kind disagrees with descriptor");
        rec.set(fields[i].name, build_field_value(f, fields[i], registry));
    }
    return rec;
}

TypeDescriptor build_descriptor(const XmlNode& node) {
    std::vector<FieldDescriptor> fields;
    for (const auto& child : node.children) {
        if (child.name != "field") fail(Errc::xml_malformed, "expected <field> inside <descriptor>");
        FieldDescriptor f;
        f.name = child.need_attr("name");
        const std::string& kind = child.need_attr("kind");
        bool found = false;
        for (uint8_t k = 1; k <= 8; ++k) {
            if (kind == kind_name(static_cast<FieldKind>(k))) {
                f.kind = static_cast<FieldKind>(k);
                found = true;
                break;
            }
        }
        if (!found) fail(Errc::xml_malformed, "unknown field kind '" + kind + "'");
        f.element = child.need_attr("element");
        f.length = static_cast<uint32_t>(parse_i64(child.need_attr("length")));
        f.validate();
        fields.push_back(std::move(f));
    }
    TypeDescriptor desc = TypeDescriptor::make(node.need_attr("name"),
                                               static_cast<uint32_t>(parse_i64(node.need_attr("version"))),
                                               std::move(fields), node.need_attr("base"));
    if (std::to_string(desc.checksum()) != node.need_attr("checksum"))
        fail(Errc::xml_malformed, "descriptor '" + desc.name() + "' checksum disagrees with fields");
    return desc;
}

} // namespace

std::string record_to_xml(const DynamicRecord& record, const SchemaRegistry& registry,
                          bool with_descriptors) {
    std::string out;
    if (with_descriptors) {
        const TypeDescriptor& desc = registry.get(record.type_name, record.type_version);
        std::vector<const TypeDescriptor*> used;
        std::set<std::pair<std::string, uint32_t>> seen;
        collect_used_types(desc, registry, used, seen);
        for (const TypeDescriptor* d : used) render_descriptor(out, *d);
    }
    render_record(out, record, registry, 0);
    return out;
}

DynamicRecord import_xml(std::string_view text, SchemaRegistry& registry) {
    XmlParser parser{text};
    auto nodes = parser.parse_all();
    if (nodes.empty()) fail(Errc::xml_malformed, "no elements in input");
    const XmlNode* object = nullptr;
    for (const auto& node : nodes) {
        if (node.name == "descriptor") {
            registry.register_type(build_descriptor(node));
        } else if (node.name == "object") {
            if (object) fail(Errc::xml_malformed, "more than one <object> element");
            object = &node;
        } else {
            fail(Errc::xml_malformed, "unexpected element <" + node.name + ">");
        }
    }
    if (!object) fail(Errc::xml_malformed, "missing <object> element");
    return build_record(*object, registry);
}

std::string export_xml(const ObjectSource& source, std::string_view name,
                       std::optional<uint32_t> cycle) {
    const ObjectKey* key = source.find_key(name, cycle);
    if (!key) fail(Errc::not_found, "no key '" + std::string(name) + "'");
    DynamicRecord rec = source.get(name, cycle);

    // Render against a registry snapshot of the owning source.
    SchemaRegistry registry;
    std::vector<const TypeDescriptor*> pending = source.all_types();
    while (!pending.empty()) {
        std::vector<const TypeDescriptor*> next;
        for (const TypeDescriptor* d : pending) {
            try {
                registry.register_type(*d);
            } catch (const Error& e) {
                if (e.code() != Errc::unknown_base) throw;
                next.push_back(d);
            }
        }
        if (next.size() == pending.size()) fail(Errc::unknown_base, "unresolvable base chain");
        pending = std::move(next);
    }
    return record_to_xml(rec, registry, true);
}

} // namespace nrt

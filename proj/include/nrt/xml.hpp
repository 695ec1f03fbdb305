#pragma once

#include <string>
#include <string_view>

#include "nrt/container.hpp"
#include "nrt/record.hpp"
#include "nrt/schema.hpp"

namespace nrt {

// Text form of one record:
//   <descriptor .../>* <object type=".." version=".."> <f name=".." k=".."/>* </object>
// with k in {i64,f64,bool,str,obj,arr,seq,ref}, list elements wrapped in
// <e>, floats rendered as the shortest round-tripping decimal, and the
// descriptors of every type the record uses emitted up front so the text
// can be imported into an empty registry.
std::string record_to_xml(const DynamicRecord& record, const SchemaRegistry& registry,
                          bool with_descriptors = true);

// Inverse of record_to_xml. Embedded descriptors are registered into
// `registry` first; the object's type must then resolve.
DynamicRecord import_xml(std::string_view text, SchemaRegistry& registry);

// Renders the keyed record of a finalized container.
std::string export_xml(const ObjectSource& source, std::string_view name,
                       std::optional<uint32_t> cycle = {});

std::string xml_escape(std::string_view s);

std::string format_double(double v);

} // namespace nrt

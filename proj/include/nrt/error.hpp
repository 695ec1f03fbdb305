#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nrt {

// One code per distinct failure condition surfaced by the public API.
enum class Errc {
    ok = 0,

    // schema
    duplicate_conflict,
    unknown_base,
    cyclic_base,
    malformed,
    checksum_mismatch,
    unknown_element_type,
    incompatible_kind,

    // container
    io_failure,
    bad_max_size,
    unknown_type,
    not_found,
    xml_malformed,

    // tree
    empty_collection,
    heterogeneous,
    type_mismatch,
    out_of_range,
    no_such_branch,

    // refs
    untagged,
    conflicting_registration,
    mixed_process_tags,

    // hist
    label_mode_mismatch,
    numeric_mode_mismatch,
    incompatible_binning,

    // query
    parse_error,
    no_such_function,
    duplicate_name,
    arity_mismatch,
    mixed_axes,

    // plugin
    config_syntax,
    no_match,
    unsupported_handler,

    // sched
    not_in_flight,
    duplicate_packet_ids,
};

const char* errc_name(Errc code);

class Error : public std::runtime_error {
public:
    static constexpr std::size_t npos = static_cast<std::size_t>(-1);

    Error(Errc code, const std::string& msg, std::size_t position = npos);

    Errc code() const { return code_; }

    // Byte offset for parse errors, line number for config errors.
    std::size_t position() const { return position_; }

private:
    Errc code_;
    std::size_t position_;
};

[[noreturn]] void fail(Errc code, const std::string& msg, std::size_t position = Error::npos);

} // namespace nrt

#include "nrt/error.hpp"

namespace nrt {

const char* errc_name(Errc code) {
    switch (code) {
    case Errc::ok: return "Ok";
    case Errc::duplicate_conflict: return "DuplicateConflict";
    case Errc::unknown_base: return "UnknownBase";
    case Errc::cyclic_base: return "CyclicBase";
    case Errc::malformed: return "Malformed";
    case Errc::checksum_mismatch: return "ChecksumMismatch";
    case Errc::unknown_element_type: return "UnknownElementType";
    case Errc::incompatible_kind: return "IncompatibleKind";
    case Errc::io_failure: return "IoFailure";
    case Errc::bad_max_size: return "BadMaxSize";
    case Errc::unknown_type: return "UnknownType";
    case Errc::not_found: return "NotFound";
    case Errc::xml_malformed: return "XmlMalformed";
    case Errc::empty_collection: return "EmptyCollection";
    case Errc::heterogeneous: return "Heterogeneous";
    case Errc::type_mismatch: return "TypeMismatch";
    case Errc::out_of_range: return "OutOfRange";
    case Errc::no_such_branch: return "NoSuchBranch";
    case Errc::untagged: return "Untagged";
    case Errc::conflicting_registration: return "ConflictingRegistration";
    case Errc::mixed_process_tags: return "MixedProcessTags";
    case Errc::label_mode_mismatch: return "LabelModeMismatch";
    case Errc::numeric_mode_mismatch: return "NumericModeMismatch";
    case Errc::incompatible_binning: return "IncompatibleBinning";
    case Errc::parse_error: return "ParseError";
    case Errc::no_such_function: return "NoSuchFunction";
    case Errc::duplicate_name: return "DuplicateName";
    case Errc::arity_mismatch: return "ArityMismatch";
    case Errc::mixed_axes: return "MixedAxes";
    case Errc::config_syntax: return "ConfigSyntax";
    case Errc::no_match: return "NoMatch";
    case Errc::unsupported_handler: return "UnsupportedHandler";
    case Errc::not_in_flight: return "NotInFlight";
    case Errc::duplicate_packet_ids: return "DuplicatePacketIds";
    }
    return "Unknown";
}

Error::Error(Errc code, const std::string& msg, std::size_t position)
    : std::runtime_error(std::string(errc_name(code)) + ": " + msg),
      code_(code),
      position_(position) {}

void fail(Errc code, const std::string& msg, std::size_t position) {
    throw Error(code, msg, position);
}

} // namespace nrt

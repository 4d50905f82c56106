#pragma once

#include <stdexcept>
#include <string>

namespace rolerail {

enum class Errc {
    duplicate_role,
    empty_description,
    empty_catalog,
    unknown_role,
    unembeddable,
    dimension_mismatch,
    zero_vector,
    duplicate_document,
    transport,
    no_script_match,
    tape_io,
    tape_miss,
    schema_error,
    unknown_role_tag,
    empty_query_set,
    partition_mismatch,
    empty_response,
    empty_matrix,
    template_error,
    config_error,
};

inline const char* errc_name(Errc code) {
    switch (code) {
        case Errc::duplicate_role: return "duplicate_role";
        case Errc::empty_description: return "empty_description";
        case Errc::empty_catalog: return "empty_catalog";
        case Errc::unknown_role: return "unknown_role";
        case Errc::unembeddable: return "unembeddable";
        case Errc::dimension_mismatch: return "dimension_mismatch";
        case Errc::zero_vector: return "zero_vector";
        case Errc::duplicate_document: return "duplicate_document";
        case Errc::transport: return "transport";
        case Errc::no_script_match: return "no_script_match";
        case Errc::tape_io: return "tape_io";
        case Errc::tape_miss: return "tape_miss";
        case Errc::schema_error: return "schema_error";
        case Errc::unknown_role_tag: return "unknown_role_tag";
        case Errc::empty_query_set: return "empty_query_set";
        case Errc::partition_mismatch: return "partition_mismatch";
        case Errc::empty_response: return "empty_response";
        case Errc::empty_matrix: return "empty_matrix";
        case Errc::template_error: return "template_error";
        case Errc::config_error: return "config_error";
    }
    return "unknown";
}

/// Library-wide exception type. The code identifies the failure class so
/// callers can branch without parsing messages.
class Error : public std::runtime_error {
  public:
    Error(Errc code, const std::string& message)
        : std::runtime_error(std::string(errc_name(code)) + ": " + message), code_(code) {}

    Errc code() const noexcept { return code_; }

  private:
    Errc code_;
};

}  // namespace rolerail

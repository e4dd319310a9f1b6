#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace facealign {

enum class ErrorKind {
    io,
    corrupt_format,
    unsupported_format,
    rect_out_of_bounds,
    empty_image,
    invalid_argument,
    xml_malformed,
    unsupported_feature_type,
    unsupported_stage_type,
    rect_outside_window,
    tree_classifier,
    tilted_feature,
    singular_matrix,
    degenerate_pair,
    not_found,
    stale_lease,
    invalid_annotation,
    manifest_corrupt,
};

std::string_view to_string(ErrorKind kind);

/// Library error. Carries a machine-readable kind plus the stage that raised
/// it ("load", "parse_cascade", "warp", ...) for provenance in manifests.
class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, std::string stage, const std::string& message)
        : std::runtime_error(message), kind_(kind), stage_(std::move(stage)) {}

    ErrorKind kind() const noexcept { return kind_; }
    const std::string& stage() const noexcept { return stage_; }

private:
    ErrorKind kind_;
    std::string stage_;
};

}  // namespace facealign

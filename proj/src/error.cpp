#include "facealign/error.hpp"

namespace facealign {

std::string_view to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::io: return "io";
        case ErrorKind::corrupt_format: return "corrupt_format";
        case ErrorKind::unsupported_format: return "unsupported_format";
        case ErrorKind::rect_out_of_bounds: return "rect_out_of_bounds";
        case ErrorKind::empty_image: return "empty_image";
        case ErrorKind::invalid_argument: return "invalid_argument";
        case ErrorKind::xml_malformed: return "xml_malformed";
        case ErrorKind::unsupported_feature_type: return "unsupported_feature_type";
        case ErrorKind::unsupported_stage_type: return "unsupported_stage_type";
        case ErrorKind::rect_outside_window: return "rect_outside_window";
        case ErrorKind::tree_classifier: return "tree_classifier";
        case ErrorKind::tilted_feature: return "tilted_feature";
        case ErrorKind::singular_matrix: return "singular_matrix";
        case ErrorKind::degenerate_pair: return "degenerate_pair";
        case ErrorKind::not_found: return "not_found";
        case ErrorKind::stale_lease: return "stale_lease";
        case ErrorKind::invalid_annotation: return "invalid_annotation";
        case ErrorKind::manifest_corrupt: return "manifest_corrupt";
    }
    return "unknown";
}

}  // namespace facealign

#include "ambientflow/error.hpp"

namespace ambientflow {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidCurve: return "invalid curve";
        case ErrorKind::ConvexityRequired: return "convexity required";
        case ErrorKind::Domain: return "domain error";
        case ErrorKind::Construction: return "construction error";
        case ErrorKind::UnboundedField: return "unbounded field";
        case ErrorKind::InsufficientData: return "insufficient data";
        case ErrorKind::EstimatorInapplicable: return "estimator inapplicable";
        case ErrorKind::MissingInput: return "missing input";
        case ErrorKind::InternalConsistency: return "internal consistency";
        case ErrorKind::Config: return "config error";
    }
    return "error";
}

}  // namespace ambientflow

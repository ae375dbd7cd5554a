#include "mse/errors.hpp"

namespace mse {

std::string_view to_string(ErrorCode code) noexcept {
    switch (code) {
        case ErrorCode::ParseError: return "ParseError";
        case ErrorCode::DuplicateCell: return "DuplicateCell";
        case ErrorCode::IllegalCell: return "IllegalCell";
        case ErrorCode::InvalidSubset: return "InvalidSubset";
        case ErrorCode::DegenerateCell: return "DegenerateCell";
        case ErrorCode::OutsideDomain: return "OutsideDomain";
        case ErrorCode::MleMayNotExist: return "MleMayNotExist";
        case ErrorCode::InvalidPi0: return "InvalidPi0";
        case ErrorCode::NotBracketed: return "NotBracketed";
        case ErrorCode::Infeasible: return "Infeasible";
        case ErrorCode::UnboundedEvidence: return "UnboundedEvidence";
        case ErrorCode::MalformedDraw: return "MalformedDraw";
        case ErrorCode::NoAcceptedDraws: return "NoAcceptedDraws";
        case ErrorCode::SizeGuard: return "SizeGuard";
        case ErrorCode::InvalidConstruction: return "InvalidConstruction";
        case ErrorCode::InvalidArgument: return "InvalidArgument";
    }
    return "Unknown";
}

}  // namespace mse

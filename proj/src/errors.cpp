#include "ebias/errors.hpp"

namespace ebias {

const char* error_code_name(ErrorCode code) {
    switch (code) {
        case ErrorCode::MissingColumn: return "MissingColumn";
        case ErrorCode::DuplicatePairId: return "DuplicatePairId";
        case ErrorCode::UnpairedGenderRow: return "UnpairedGenderRow";
        case ErrorCode::InconsistentPair: return "InconsistentPair";
        case ErrorCode::EmptyText: return "EmptyText";
        case ErrorCode::InvalidValue: return "InvalidValue";
        case ErrorCode::DegenerateLength: return "DegenerateLength";
        case ErrorCode::InsufficientSample: return "InsufficientSample";
        case ErrorCode::EmptyTable: return "EmptyTable";
        case ErrorCode::Transport: return "Transport";
        case ErrorCode::RateLimited: return "RateLimited";
        case ErrorCode::MalformedReply: return "MalformedReply";
        case ErrorCode::AuthFailure: return "AuthFailure";
        case ErrorCode::FixtureMiss: return "FixtureMiss";
        case ErrorCode::MissingCounterpart: return "MissingCounterpart";
        case ErrorCode::UnparseableVerdict: return "UnparseableVerdict";
        case ErrorCode::BothFlagsSet: return "BothFlagsSet";
        case ErrorCode::AllUnscored: return "AllUnscored";
        case ErrorCode::LengthGuard: return "LengthGuard";
        case ErrorCode::Io: return "Io";
        case ErrorCode::Config: return "Config";
    }
    return "Unknown";
}

} // namespace ebias

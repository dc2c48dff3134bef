#pragma once

#include <stdexcept>
#include <string>

namespace vanauth {

enum class Errc {
    BadParams,
    ConfigError,
    CorruptTrace,
    InvariantViolation,
    // crypto
    UnknownKey,
    WrongKey,
    BadPadding,
    UnknownIdentity,
    NotLeader,
    UnknownGroup,
    // keytree
    BadBranching,
    IndivisibleK,
    TooManyPaths,
    NoPathFound,
    StaleTimestamp,
    // groups
    OffRoad,
    EmptyGroup,
    BadSignature,
    WrongCell,
    NotMember,
    // protocols
    UnsupportedComm,
    Internal,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::BadParams: return "BadParams";
        case Errc::ConfigError: return "ConfigError";
        case Errc::CorruptTrace: return "CorruptTrace";
        case Errc::InvariantViolation: return "InvariantViolation";
        case Errc::UnknownKey: return "UnknownKey";
        case Errc::WrongKey: return "WrongKey";
        case Errc::BadPadding: return "BadPadding";
        case Errc::UnknownIdentity: return "UnknownIdentity";
        case Errc::NotLeader: return "NotLeader";
        case Errc::UnknownGroup: return "UnknownGroup";
        case Errc::BadBranching: return "BadBranching";
        case Errc::IndivisibleK: return "IndivisibleK";
        case Errc::TooManyPaths: return "TooManyPaths";
        case Errc::NoPathFound: return "NoPathFound";
        case Errc::StaleTimestamp: return "StaleTimestamp";
        case Errc::OffRoad: return "OffRoad";
        case Errc::EmptyGroup: return "EmptyGroup";
        case Errc::BadSignature: return "BadSignature";
        case Errc::WrongCell: return "WrongCell";
        case Errc::NotMember: return "NotMember";
        case Errc::UnsupportedComm: return "UnsupportedComm";
        case Errc::Internal: return "Internal";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const { return code_; }

private:
    Errc code_;
};

[[noreturn]] inline void raise(Errc code, const std::string& what) {
    throw Error(code, what);
}

}  // namespace vanauth

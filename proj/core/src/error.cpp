// Copyright Contributors to the recam Project
// SPDX-License-Identifier: Apache-2.0

#include "recam/error.hpp"

namespace recam {

const char* to_string(ErrorKind kind) {
    switch (kind) {
        case ErrorKind::InvalidPose: return "invalid-pose";
        case ErrorKind::BehindCamera: return "behind-camera";
        case ErrorKind::InvalidParams: return "invalid-params";
        case ErrorKind::Curation: return "curation";
        case ErrorKind::CorruptContainer: return "corrupt-container";
        case ErrorKind::Io: return "io";
        case ErrorKind::Config: return "config";
        case ErrorKind::Numeric: return "numeric";
        case ErrorKind::IncompatibleConfig: return "incompatible-config";
        case ErrorKind::Usage: return "usage";
    }
    return "unknown";
}

void fail(ErrorKind kind, const std::string& message) {
    throw Error(kind, std::string(to_string(kind)) + ": " + message);
}

}  // namespace recam

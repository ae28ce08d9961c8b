#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace dstop::cli {

enum ExitCode : int {
    kOk = 0,
    kInvalidInput = 1,
    kBracketFailure = 2,
    kCheckFailed = 3,
};

/// Entry point for `disorder-stop <solve|value|validate|plot> ...`.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace dstop::cli

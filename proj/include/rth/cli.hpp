#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace rth::cli {

enum ExitCode : int {
    kOk = 0,
    kInternal = 1,
    kConfig = 2,   // bad flags or configuration file
    kData = 3,     // bad manifests, images or datasets
    kIo = 4,       // filesystem failures
    kModel = 5,    // model file failed validation
};

// Entry point shared by the rth binary and the tests. args excludes the
// program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rth::cli

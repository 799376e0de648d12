#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace hrm::cli {

/// Entry point shared by the `hrm` executable and the tests. `args` excludes
/// the program name. Errors are written to `err` as a JSON object and
/// reported through a nonzero return value.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace hrm::cli

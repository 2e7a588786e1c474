#pragma once

#include <ostream>
#include <span>
#include <string>

namespace tcmkg::cli {

/// Entry point of the `tcmkg` tool. 0 on success, 2 on usage errors, 1 otherwise.
int run(std::span<const std::string> args, std::ostream& out, std::ostream& err);

} // namespace tcmkg::cli
